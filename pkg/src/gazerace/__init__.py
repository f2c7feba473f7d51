"""Eye-gesture drone control: landmark ratios -> calibrated actions ->
flight commands -> kinematic race simulator, plus trajectory analytics and
the stream gateway that ties them together."""

from .analytics import (
    PairedSample,
    SignedRankResult,
    TrajectoryMetrics,
    compare_report,
    metrics,
    wilcoxon_signed_rank,
)
from .classifier import (
    Action,
    CalibrationProfile,
    CalibrationSample,
    ClassifierParams,
    ClassifierState,
    calibrate,
    classify_frame,
)
from .config import SessionConfig
from .controller import (
    ControllerConfig,
    ControllerState,
    FlightPhase,
    SimEvent,
    VelocitySetpoint,
    map_action,
    on_sim_event,
)
from .geometry import (
    EyeGeometryConfig,
    LandmarkFrame,
    Point2,
    RatioVector,
    extract_ratios,
    ratio,
)
from .pipeline import FramePipeline, run_race
from .sim import (
    DroneState,
    FlightSession,
    Gate,
    RaceResult,
    RaceTrack,
    SimParams,
    TrajectoryLog,
    check_gate_crossing,
    load_track,
)

__version__ = "0.1.0"
