"""Action-to-flight-command translation and the arm/takeoff/land toggle.

A raise of the eyebrow arms and launches the drone when it is on the ground
and lands it when it is flying; every other action maps to exactly one
velocity axis, and only while flying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .classifier import Action


class FlightPhase(Enum):
    Disarmed = "Disarmed"
    TakingOff = "TakingOff"
    Flying = "Flying"
    Landing = "Landing"


class SimEvent(Enum):
    ReachedTakeoffAltitude = "ReachedTakeoffAltitude"
    Landed = "Landed"


class IllegalTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class VelocitySetpoint:
    """Body-frame velocity command: forward, right, yaw rate, climb."""

    pitch_v: float = 0.0
    roll_v: float = 0.0
    yaw_rate: float = 0.0
    climb_v: float = 0.0

    def __post_init__(self):
        for name, val in (
            ("pitch_v", self.pitch_v),
            ("roll_v", self.roll_v),
            ("yaw_rate", self.yaw_rate),
            ("climb_v", self.climb_v),
        ):
            if not math.isfinite(val):
                raise ValueError(f"setpoint component {name} is not finite")


ZERO_SETPOINT = VelocitySetpoint()


@dataclass(frozen=True)
class Arm:
    pass


@dataclass(frozen=True)
class TakeOff:
    altitude: float

    def __post_init__(self):
        if self.altitude <= 0:
            raise ValueError(f"takeoff altitude must be > 0: {self.altitude}")


@dataclass(frozen=True)
class Land:
    pass


@dataclass(frozen=True)
class Disarm:
    pass


@dataclass(frozen=True)
class SetVelocity:
    setpoint: VelocitySetpoint


FlightCommand = Arm | TakeOff | Land | Disarm | SetVelocity


@dataclass(frozen=True)
class ControllerConfig:
    v_xy: float = 1.0
    v_z: float = 0.5
    omega: float = 0.8
    takeoff_alt: float = 1.5


@dataclass(frozen=True)
class ControllerState:
    phase: FlightPhase = FlightPhase.Disarmed
    # Remembers whether the previous action was Raise, so a held Raise can
    # never double-toggle even if the caller passes changed=True repeatedly.
    raise_latched: bool = False


def _axis_setpoint(action: Action, cfg: ControllerConfig) -> VelocitySetpoint:
    if action is Action.Wide:
        return VelocitySetpoint(pitch_v=cfg.v_xy)
    if action is Action.Squint:
        return VelocitySetpoint(pitch_v=-cfg.v_xy)
    if action is Action.Left:
        return VelocitySetpoint(roll_v=-cfg.v_xy)
    if action is Action.Right:
        return VelocitySetpoint(roll_v=cfg.v_xy)
    if action is Action.FarLeft:
        return VelocitySetpoint(yaw_rate=-cfg.omega)
    if action is Action.FarRight:
        return VelocitySetpoint(yaw_rate=cfg.omega)
    if action is Action.Up:
        return VelocitySetpoint(climb_v=cfg.v_z)
    if action is Action.Down:
        return VelocitySetpoint(climb_v=-cfg.v_z)
    # Center: hold position.
    return ZERO_SETPOINT


def map_action(
    state: ControllerState,
    action: Action,
    changed: bool,
    cfg: ControllerConfig = ControllerConfig(),
) -> tuple[ControllerState, list[FlightCommand]]:
    """Translate one debounced action into flight commands.

    Raise is edge-triggered: on its rising edge it arms+launches from the
    ground or lands from flight, and does nothing in transit phases. All
    other actions set the velocity axis table while flying and are ignored
    otherwise; each emitted setpoint fully overwrites the previous one.
    """
    if action is Action.Raise:
        commands: list[FlightCommand] = []
        new_phase = state.phase
        if changed and not state.raise_latched:
            if state.phase is FlightPhase.Disarmed:
                commands = [Arm(), TakeOff(cfg.takeoff_alt)]
                new_phase = FlightPhase.TakingOff
            elif state.phase is FlightPhase.Flying:
                commands = [Land()]
                new_phase = FlightPhase.Landing
        return ControllerState(phase=new_phase, raise_latched=True), commands

    new_state = ControllerState(phase=state.phase, raise_latched=False)
    if state.phase is FlightPhase.Flying:
        return new_state, [SetVelocity(_axis_setpoint(action, cfg))]
    return new_state, []


def on_sim_event(state: ControllerState, event: SimEvent) -> tuple[ControllerState, list[FlightCommand]]:
    """Acknowledge a phase-completion event from the simulator."""
    if event is SimEvent.ReachedTakeoffAltitude:
        if state.phase is not FlightPhase.TakingOff:
            raise IllegalTransition(f"{event.value} while {state.phase.value}")
        return ControllerState(phase=FlightPhase.Flying, raise_latched=state.raise_latched), []
    if event is SimEvent.Landed:
        if state.phase is not FlightPhase.Landing:
            raise IllegalTransition(f"{event.value} while {state.phase.value}")
        return ControllerState(phase=FlightPhase.Disarmed, raise_latched=state.raise_latched), [Disarm()]
    raise IllegalTransition(f"unknown event {event!r}")


def command_payload(cmd: FlightCommand) -> dict:
    """JSON payload for the command log (one object per emitted command)."""
    if isinstance(cmd, Arm):
        return {"type": "arm"}
    if isinstance(cmd, TakeOff):
        return {"type": "takeoff", "altitude": cmd.altitude}
    if isinstance(cmd, Land):
        return {"type": "land"}
    if isinstance(cmd, Disarm):
        return {"type": "disarm"}
    if isinstance(cmd, SetVelocity):
        sp = cmd.setpoint
        return {
            "type": "set_velocity",
            "pitch_v": sp.pitch_v,
            "roll_v": sp.roll_v,
            "yaw_rate": sp.yaw_rate,
            "climb_v": sp.climb_v,
        }
    raise TypeError(f"not a flight command: {cmd!r}")
