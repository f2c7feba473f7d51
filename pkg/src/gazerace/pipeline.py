"""End-to-end frame pipeline: landmarks -> ratios -> action -> commands ->
simulator ticks.

The pipeline is frame-indexed: everything derives from the frames' own
timestamps, never from wall-clock time, so an offline replay and a live feed
of the same recording produce identical logs.
"""

from __future__ import annotations

import json
from typing import Callable, Iterable

from .classifier import Action, CalibrationProfile, ClassifierParams, ClassifierState, step as classifier_step
from .config import SessionConfig
from .controller import ControllerConfig, ControllerState, command_payload, map_action, on_sim_event
from .geometry import DegenerateGeometry, EyeGeometryConfig, LandmarkFrame, MissingLandmark, extract_ratios
from .sim import FlightSession, RaceResult, RaceTrack, SimParams, TrajectoryLog

TelemetryCallback = Callable[[dict], None]


class FramePipeline:
    """Drives one flight session from a stream of landmark frames."""

    def __init__(
        self,
        session: FlightSession,
        profile: CalibrationProfile,
        geometry: EyeGeometryConfig = EyeGeometryConfig(),
        classifier_params: ClassifierParams = ClassifierParams(),
        controller_cfg: ControllerConfig = ControllerConfig(),
        max_substeps: int = 250,
        on_tick: TelemetryCallback | None = None,
    ):
        self.session = session
        self.profile = profile
        self.geometry = geometry
        self.classifier_params = classifier_params
        self.controller_cfg = controller_cfg
        self.max_substeps = max_substeps
        self.on_tick = on_tick
        self.classifier_state = ClassifierState()
        self.controller_state = ControllerState()
        self.command_rows: list[dict] = []
        self.current_action = Action.Center
        self.frames_processed = 0
        self.frames_skipped = 0
        self._last_frame_t: int | None = None

    def _log_command(self, cmd) -> None:
        self.command_rows.append(
            {
                "t_us": self.session.t_us,
                "phase": self.controller_state.phase.value,
                "command": command_payload(cmd),
            }
        )

    def _substeps(self, t_us: int) -> int:
        # One tick per frame at the nominal rate; longer frame gaps are
        # covered by extra ticks so physics stays rate-independent.
        if self._last_frame_t is None:
            n = 1
        else:
            n = max(1, round((t_us - self._last_frame_t) / self.session.params.dt_us))
        self._last_frame_t = t_us
        return min(n, self.max_substeps)

    def process_frame(self, frame: LandmarkFrame) -> bool:
        """Run one frame through the whole pipeline.

        Returns False (and counts the frame as skipped) when the frame is
        unusable: non-monotone timestamp, missing configured landmarks, or
        degenerate geometry.
        """
        if self._last_frame_t is not None and frame.timestamp_us <= self._last_frame_t:
            self.frames_skipped += 1
            return False
        try:
            ratios = extract_ratios(frame, self.geometry)
        except (MissingLandmark, DegenerateGeometry):
            self.frames_skipped += 1
            return False

        self.classifier_state, emitted, changed = classifier_step(
            self.classifier_state, ratios, self.profile, self.classifier_params
        )
        self.current_action = emitted
        self.controller_state, commands = map_action(
            self.controller_state, emitted, changed, self.controller_cfg
        )
        for cmd in commands:
            self._log_command(cmd)
            self.session.apply(cmd)

        for _ in range(self._substeps(frame.timestamp_us)):
            events = self.session.tick()
            for event in events:
                self.controller_state, event_cmds = on_sim_event(self.controller_state, event)
                for cmd in event_cmds:
                    self._log_command(cmd)
                    self.session.apply(cmd)
            if self.on_tick is not None:
                self.on_tick(self.telemetry_record())
        self.frames_processed += 1
        return True

    def telemetry_record(self) -> dict:
        drone = self.session.drone
        return {
            "t_us": self.session.t_us,
            "action": self.current_action.value,
            "phase": self.controller_state.phase.value,
            "drone": {
                "x": drone.position[0],
                "y": drone.position[1],
                "z": drone.position[2],
                "yaw": drone.yaw,
                "vx": drone.velocity[0],
                "vy": drone.velocity[1],
                "vz": drone.velocity[2],
            },
            "gates_passed": self.session.result.gates_passed,
        }

    def command_log_jsonl(self) -> str:
        return "".join(json.dumps(row) + "\n" for row in self.command_rows)

    def finalize(self) -> RaceResult:
        return self.session.finalize()


def build_pipeline(
    config: SessionConfig,
    profile: CalibrationProfile,
    track: RaceTrack,
    on_tick: TelemetryCallback | None = None,
) -> FramePipeline:
    session = FlightSession(track, config.sim)
    return FramePipeline(
        session,
        profile,
        geometry=config.geometry,
        classifier_params=config.classifier,
        controller_cfg=config.controller,
        max_substeps=config.pipeline.max_substeps,
        on_tick=on_tick,
    )


def run_race(
    track: RaceTrack,
    *,
    frames: Iterable[LandmarkFrame] | None = None,
    commands: Iterable[list] | None = None,
    profile: CalibrationProfile | None = None,
    geometry: EyeGeometryConfig = EyeGeometryConfig(),
    classifier_params: ClassifierParams = ClassifierParams(),
    controller_cfg: ControllerConfig = ControllerConfig(),
    sim_params: SimParams = SimParams(),
    max_substeps: int = 250,
) -> tuple[TrajectoryLog, RaceResult, FramePipeline | None]:
    """Fly a race from either a landmark stream or a raw command stream.

    The command path bypasses the gaze pipeline (per-tick command lists);
    the frame path needs a calibration profile. Returns the trajectory log,
    the race result, and the pipeline (None on the command path) for access
    to the command log and counters.
    """
    if (frames is None) == (commands is None):
        raise ValueError("provide exactly one of frames or commands")
    if commands is not None:
        from .sim import fly_commands

        log, result = fly_commands(commands, track, sim_params)
        return log, result, None
    if profile is None:
        raise ValueError("a calibration profile is required to fly from landmarks")
    session = FlightSession(track, sim_params)
    pipeline = FramePipeline(
        session,
        profile,
        geometry=geometry,
        classifier_params=classifier_params,
        controller_cfg=controller_cfg,
        max_substeps=max_substeps,
    )
    for frame in frames:
        pipeline.process_frame(frame)
    result = pipeline.finalize()
    return session.log, result, pipeline
