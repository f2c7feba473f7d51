"""Deterministic fixed-tick kinematic drone simulator with position-hold
semantics, the square-gate race track, and gate-passage detection.

The model is a first-order velocity-tracking point mass with yaw: commanded
body-frame velocities rotate into the world frame, the velocity relaxes
toward the command with time constant tau_v (or snaps to it when tau_v == 0,
which makes a zero command freeze the drone exactly), and position integrates
at a fixed dt. Identical inputs give bit-identical trajectories.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable

from .controller import (
    Arm,
    Disarm,
    FlightCommand,
    FlightPhase,
    Land,
    SetVelocity,
    SimEvent,
    TakeOff,
    VelocitySetpoint,
    ZERO_SETPOINT,
)

LANDED_Z = 0.01
ALT_EPS = 1e-9


@dataclass(frozen=True)
class DroneState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    airborne: bool = False

    def __post_init__(self):
        if self.position[2] < 0:
            raise ValueError(f"z must be >= 0: {self.position[2]}")
        for v in (*self.position, *self.velocity, self.yaw):
            if not math.isfinite(v):
                raise ValueError("drone state must be finite")


@dataclass(frozen=True)
class Gate:
    center: tuple[float, float, float]
    normal_yaw: float
    size: float = 1.4

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"gate size must be > 0: {self.size}")


@dataclass(frozen=True)
class RaceTrack:
    gates: tuple[Gate, ...]
    start: tuple[float, float, float] = (0.0, 0.0, 0.0)
    start_yaw: float = 0.0

    def __post_init__(self):
        if not self.gates:
            raise ValueError("track must have at least one gate")
        for a, b in zip(self.gates, self.gates[1:]):
            if a.center == b.center:
                raise ValueError(f"consecutive gates share a center: {a.center}")

    def to_json(self) -> str:
        doc = {
            "start": {
                "x": self.start[0],
                "y": self.start[1],
                "z": self.start[2],
                "yaw": self.start_yaw,
            },
            "gates": [
                {"center": list(g.center), "normal_yaw": g.normal_yaw, "size": g.size}
                for g in self.gates
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RaceTrack":
        doc = json.loads(text)
        start = doc.get("start", {})
        gates = tuple(
            Gate(
                center=tuple(float(c) for c in g["center"]),
                normal_yaw=float(g["normal_yaw"]),
                size=float(g.get("size", 1.4)),
            )
            for g in doc["gates"]
        )
        return cls(
            gates=gates,
            start=(float(start.get("x", 0.0)), float(start.get("y", 0.0)), float(start.get("z", 0.0))),
            start_yaw=float(start.get("yaw", 0.0)),
        )


def load_track(path: str | None = None) -> RaceTrack:
    """Load a track file, or the built-in seven-gate default track."""
    if path is None:
        text = resources.files("gazerace.data").joinpath("default_track.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    return RaceTrack.from_json(text)


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.02
    tau_v: float = 0.3
    v_max: float = 6.5
    landing_v: float = 0.5

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0: {self.dt}")
        if self.tau_v < 0:
            raise ValueError(f"tau_v must be >= 0: {self.tau_v}")
        if self.v_max <= 0:
            raise ValueError(f"v_max must be > 0: {self.v_max}")

    @property
    def dt_us(self) -> int:
        return round(self.dt * 1e6)


def step(state: DroneState, setpoint: VelocitySetpoint, params: SimParams) -> DroneState:
    """Advance the kinematics by one tick.

    The body-frame setpoint is rotated by the current yaw, velocity relaxes
    toward it (snaps when tau_v == 0), gets norm-clamped to v_max, and then
    position and yaw integrate. A zero setpoint with tau_v == 0 freezes the
    position exactly.
    """
    cy = math.cos(state.yaw)
    sy = math.sin(state.yaw)
    sp_world = (
        setpoint.pitch_v * cy + setpoint.roll_v * sy,
        setpoint.pitch_v * sy - setpoint.roll_v * cy,
        setpoint.climb_v,
    )
    if params.tau_v == 0.0:
        v = sp_world
    else:
        # k capped at 1 keeps the relaxation stable when dt > tau_v.
        k = min(1.0, params.dt / params.tau_v)
        v = tuple(state.velocity[i] + k * (sp_world[i] - state.velocity[i]) for i in range(3))
    speed = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if speed > params.v_max:
        scale = params.v_max / speed
        v = (v[0] * scale, v[1] * scale, v[2] * scale)
    pos = tuple(state.position[i] + v[i] * params.dt for i in range(3))
    if pos[2] < 0.0:
        pos = (pos[0], pos[1], 0.0)
    yaw = state.yaw + setpoint.yaw_rate * params.dt
    return DroneState(position=pos, velocity=v, yaw=yaw, airborne=state.airborne)


def check_gate_crossing(prev: DroneState, next: DroneState, gate: Gate) -> bool:
    """True iff the tick segment pierces the gate square front-to-back.

    The crossing counts only when moving along the gate normal (from the
    negative to the non-negative side) and the intersection point falls
    inside the axis-aligned square of half-side size/2 in the gate frame.
    """
    nx = math.cos(gate.normal_yaw)
    ny = math.sin(gate.normal_yaw)
    cx, cy, cz = gate.center
    d_prev = (prev.position[0] - cx) * nx + (prev.position[1] - cy) * ny
    d_next = (next.position[0] - cx) * nx + (next.position[1] - cy) * ny
    if not (d_prev < 0.0 and d_next >= 0.0):
        return False
    t = d_prev / (d_prev - d_next)
    px = prev.position[0] + t * (next.position[0] - prev.position[0])
    py = prev.position[1] + t * (next.position[1] - prev.position[1])
    pz = prev.position[2] + t * (next.position[2] - prev.position[2])
    lateral = (px - cx) * -ny + (py - cy) * nx
    half = gate.size / 2.0
    return abs(lateral) <= half and abs(pz - cz) <= half


@dataclass(frozen=True)
class TickRecord:
    t_us: int
    x: float
    y: float
    z: float
    yaw: float
    vx: float
    vy: float
    vz: float
    phase: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "t_us": self.t_us,
                "x": self.x,
                "y": self.y,
                "z": self.z,
                "yaw": self.yaw,
                "vx": self.vx,
                "vy": self.vy,
                "vz": self.vz,
                "phase": self.phase,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "TickRecord":
        d = json.loads(line)
        return cls(
            t_us=int(d["t_us"]),
            x=float(d["x"]),
            y=float(d["y"]),
            z=float(d["z"]),
            yaw=float(d["yaw"]),
            vx=float(d["vx"]),
            vy=float(d["vy"]),
            vz=float(d["vz"]),
            phase=str(d["phase"]),
        )


class TrajectoryLog:
    """Append-only per-tick flight record, serializable as JSON lines."""

    def __init__(self, records: list[TickRecord] | None = None):
        self.records: list[TickRecord] = records or []

    def append(self, rec: TickRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self) -> str:
        return "".join(rec.to_json() + "\n" for rec in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "TrajectoryLog":
        return cls([TickRecord.from_json(line) for line in text.splitlines() if line.strip()])

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_jsonl())

    @classmethod
    def read(cls, path: str) -> "TrajectoryLog":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_jsonl(f.read())


@dataclass
class RaceResult:
    gates_total: int
    gates_passed: int = 0
    # absolute sim time of each gate crossing
    split_t_us: list[int] = field(default_factory=list)
    takeoff_complete_t_us: int | None = None
    finished: bool = False
    stream_exhausted: bool = False
    total_time_s: float | None = None

    @property
    def splits_s(self) -> list[float]:
        """Gate split times in seconds since takeoff completed."""
        if self.takeoff_complete_t_us is None:
            return []
        return [(t - self.takeoff_complete_t_us) / 1e6 for t in self.split_t_us]

    def to_dict(self) -> dict:
        return {
            "gates_total": self.gates_total,
            "gates_passed": self.gates_passed,
            "splits_s": self.splits_s,
            "finished": self.finished,
            "stream_exhausted": self.stream_exhausted,
            "total_time_s": self.total_time_s,
        }


class FlightSession:
    """One flight: owns the drone state, flight mode, gate progress and logs.

    Commands arrive via apply(); tick() advances one dt of physics, runs the
    takeoff/landing altitude profiles, detects gate crossings while flying
    and returns any phase-completion events for the controller.
    """

    def __init__(self, track: RaceTrack, params: SimParams):
        self.track = track
        self.params = params
        self.drone = DroneState(position=track.start, yaw=track.start_yaw)
        self.mode = FlightPhase.Disarmed
        self.setpoint = ZERO_SETPOINT
        self.tick_count = 0
        self.target_alt: float | None = None
        self.log = TrajectoryLog()
        self.result = RaceResult(gates_total=len(track.gates))
        self._next_gate = 0

    @property
    def t_us(self) -> int:
        return self.tick_count * self.params.dt_us

    def apply(self, cmd: FlightCommand) -> None:
        if isinstance(cmd, Arm):
            pass  # arming has no kinematic effect; TakeOff starts the climb
        elif isinstance(cmd, TakeOff):
            self.mode = FlightPhase.TakingOff
            self.target_alt = cmd.altitude
            self.drone = replace(self.drone, airborne=True)
        elif isinstance(cmd, Land):
            self.mode = FlightPhase.Landing
            self.setpoint = ZERO_SETPOINT
        elif isinstance(cmd, Disarm):
            self.mode = FlightPhase.Disarmed
            self.setpoint = ZERO_SETPOINT
        elif isinstance(cmd, SetVelocity):
            if self.mode is FlightPhase.Flying:
                self.setpoint = cmd.setpoint
        else:
            raise TypeError(f"not a flight command: {cmd!r}")

    def tick(self) -> list[SimEvent]:
        events: list[SimEvent] = []
        if self.mode is FlightPhase.Disarmed:
            self.drone = replace(self.drone, velocity=(0.0, 0.0, 0.0))
        elif self.mode is FlightPhase.TakingOff:
            climb = VelocitySetpoint(climb_v=self.params.landing_v)
            self.drone = step(self.drone, climb, self.params)
            if self.drone.position[2] >= (self.target_alt or 0.0) - ALT_EPS:
                self.mode = FlightPhase.Flying
                self.setpoint = ZERO_SETPOINT
                if self.result.takeoff_complete_t_us is None:
                    self.result.takeoff_complete_t_us = (self.tick_count + 1) * self.params.dt_us
                events.append(SimEvent.ReachedTakeoffAltitude)
        elif self.mode is FlightPhase.Flying:
            prev = self.drone
            self.drone = step(prev, self.setpoint, self.params)
            self._check_gates(prev, self.drone)
        elif self.mode is FlightPhase.Landing:
            descend = VelocitySetpoint(climb_v=-self.params.landing_v)
            self.drone = step(self.drone, descend, self.params)
            if self.drone.position[2] <= LANDED_Z + ALT_EPS:
                pos = self.drone.position
                self.drone = DroneState(
                    position=(pos[0], pos[1], 0.0), velocity=(0.0, 0.0, 0.0),
                    yaw=self.drone.yaw, airborne=False,
                )
                self.mode = FlightPhase.Disarmed
                events.append(SimEvent.Landed)
        self.tick_count += 1
        self.log.append(
            TickRecord(
                t_us=self.t_us,
                x=self.drone.position[0],
                y=self.drone.position[1],
                z=self.drone.position[2],
                yaw=self.drone.yaw,
                vx=self.drone.velocity[0],
                vy=self.drone.velocity[1],
                vz=self.drone.velocity[2],
                phase=self.mode.value,
            )
        )
        return events

    def _check_gates(self, prev: DroneState, cur: DroneState) -> None:
        # Only the next gate in track order counts; early crossings of later
        # gates and re-crossings of earlier ones are ignored.
        if self._next_gate >= len(self.track.gates):
            return
        if check_gate_crossing(prev, cur, self.track.gates[self._next_gate]):
            self._next_gate += 1
            self.result.gates_passed = self._next_gate
            self.result.split_t_us.append((self.tick_count + 1) * self.params.dt_us)

    def finalize(self) -> RaceResult:
        """Close the session when its input stream ends.

        A run only counts as finished when every gate was crossed in order
        and the drone got back on the ground; a stream that ends mid-flight
        is marked exhausted.
        """
        all_gates = self.result.gates_passed == self.result.gates_total
        landed = self.mode is FlightPhase.Disarmed
        self.result.stream_exhausted = not landed
        self.result.finished = all_gates and landed
        if all_gates and self.result.takeoff_complete_t_us is not None:
            self.result.total_time_s = (
                self.result.split_t_us[-1] - self.result.takeoff_complete_t_us
            ) / 1e6
        return self.result


def fly_commands(
    command_stream: Iterable[list[FlightCommand]],
    track: RaceTrack,
    params: SimParams = SimParams(),
) -> tuple[TrajectoryLog, RaceResult]:
    """Fly a scripted command stream, one command list per tick.

    Bypasses the gaze pipeline entirely; used for tests and raw replays.
    """
    session = FlightSession(track, params)
    for commands in command_stream:
        for cmd in commands:
            session.apply(cmd)
        session.tick()
    return session.log, session.finalize()
