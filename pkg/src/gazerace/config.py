"""Session configuration: one JSON document wiring every stage together.

Missing sections fall back to defaults; GAZERACE_CONFIG names a fallback
config path when the CLI gets no --config flag.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .classifier import ClassifierParams
from .controller import ControllerConfig
from .geometry import EyeGeometryConfig
from .sim import SimParams

ENV_CONFIG = "GAZERACE_CONFIG"


@dataclass(frozen=True)
class NetworkConfig:
    host: str = "127.0.0.1"
    landmark_port: int = 8750
    http_port: int = 8080


@dataclass(frozen=True)
class PipelineConfig:
    max_substeps: int = 250
    queue_depth: int = 65536

    def __post_init__(self):
        if self.max_substeps < 1 or self.queue_depth < 1:
            raise ValueError("max_substeps and queue_depth must be >= 1")


@dataclass(frozen=True)
class SessionConfig:
    geometry: EyeGeometryConfig = field(default_factory=EyeGeometryConfig)
    classifier: ClassifierParams = field(default_factory=ClassifierParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sim: SimParams = field(default_factory=SimParams)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    track_path: str | None = None
    profile_path: str | None = None
    out_dir: str = "runs"

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "SessionConfig":
        def tup(seq):
            return tuple(int(i) for i in seq)

        geo = doc.get("geometry", {})
        geometry = EyeGeometryConfig(
            horizontal=tup(geo.get("horizontal", EyeGeometryConfig.horizontal)),
            vertical=tup(geo.get("vertical", EyeGeometryConfig.vertical)),
            openness=tup(geo.get("openness", EyeGeometryConfig.openness)),
            eyebrow=tup(geo.get("eyebrow", EyeGeometryConfig.eyebrow)),
        )
        cl = doc.get("classifier", {})
        classifier = ClassifierParams(
            n_min=int(cl.get("n_min", 30)),
            sigma_min=float(cl.get("sigma_min", 0.01)),
            cv_max=float(cl.get("cv_max", 0.5)),
            alpha_ema=float(cl.get("alpha_ema", 0.4)),
            debounce=int(cl.get("debounce", 3)),
        )
        ct = doc.get("controller", {})
        controller = ControllerConfig(
            v_xy=float(ct.get("v_xy", 1.0)),
            v_z=float(ct.get("v_z", 0.5)),
            omega=float(ct.get("omega", 0.8)),
            takeoff_alt=float(ct.get("takeoff_alt", 1.5)),
        )
        sm = doc.get("sim", {})
        sim = SimParams(
            dt=float(sm.get("dt", 0.02)),
            tau_v=float(sm.get("tau_v", 0.3)),
            v_max=float(sm.get("v_max", 6.5)),
            landing_v=float(sm.get("landing_v", 0.5)),
        )
        nw = doc.get("network", {})
        network = NetworkConfig(
            host=str(nw.get("host", "127.0.0.1")),
            landmark_port=int(nw.get("landmark_port", 8750)),
            http_port=int(nw.get("http_port", 8080)),
        )
        pl = doc.get("pipeline", {})
        pipeline = PipelineConfig(
            max_substeps=int(pl.get("max_substeps", 250)),
            queue_depth=int(pl.get("queue_depth", 65536)),
        )

        def resolve(p):
            if p is None:
                return None
            return p if os.path.isabs(p) else os.path.join(base_dir, p)

        track_path = resolve(doc.get("track"))
        profile_path = resolve(doc.get("profile"))
        if track_path is not None and not os.path.exists(track_path):
            raise FileNotFoundError(f"configured track file not found: {track_path}")
        # The profile may be created later by calibration, so only its
        # directory has to exist.
        if profile_path is not None:
            parent = os.path.dirname(profile_path) or "."
            if not os.path.isdir(parent):
                raise FileNotFoundError(f"profile directory not found: {parent}")
        return cls(
            geometry=geometry,
            classifier=classifier,
            controller=controller,
            sim=sim,
            network=network,
            pipeline=pipeline,
            track_path=track_path,
            profile_path=profile_path,
            out_dir=str(doc.get("out_dir", "runs")),
        )

    @classmethod
    def load(cls, path: str | None = None) -> "SessionConfig":
        """Load from an explicit path, $GAZERACE_CONFIG, or pure defaults."""
        if path is None:
            path = os.environ.get(ENV_CONFIG)
        if path is None:
            return cls()
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        return cls.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        return {
            "geometry": {
                "horizontal": list(self.geometry.horizontal),
                "vertical": list(self.geometry.vertical),
                "openness": list(self.geometry.openness),
                "eyebrow": list(self.geometry.eyebrow),
            },
            "classifier": {
                "n_min": self.classifier.n_min,
                "sigma_min": self.classifier.sigma_min,
                "cv_max": self.classifier.cv_max,
                "alpha_ema": self.classifier.alpha_ema,
                "debounce": self.classifier.debounce,
            },
            "controller": {
                "v_xy": self.controller.v_xy,
                "v_z": self.controller.v_z,
                "omega": self.controller.omega,
                "takeoff_alt": self.controller.takeoff_alt,
            },
            "sim": {
                "dt": self.sim.dt,
                "tau_v": self.sim.tau_v,
                "v_max": self.sim.v_max,
                "landing_v": self.sim.landing_v,
            },
            "network": {
                "host": self.network.host,
                "landmark_port": self.network.landmark_port,
                "http_port": self.network.http_port,
            },
            "pipeline": {
                "max_substeps": self.pipeline.max_substeps,
                "queue_depth": self.pipeline.queue_depth,
            },
            "track": self.track_path,
            "profile": self.profile_path,
            "out_dir": self.out_dir,
        }
