"""Per-user calibration and frame-by-frame action classification.

The ten gaze/eyebrow actions are recognized by nearest centroid in
spread-normalized ratio space; an EMA smoother plus a run-length debouncer
turn the per-frame labels into a stable control signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .geometry import RatioVector


class Action(Enum):
    # Enumeration order is the tie-break order for classification.
    Up = "Up"
    Down = "Down"
    Left = "Left"
    Right = "Right"
    FarLeft = "FarLeft"
    FarRight = "FarRight"
    Wide = "Wide"
    Squint = "Squint"
    Center = "Center"
    Raise = "Raise"


ACTION_ORDER = tuple(Action)

PROFILE_SCHEMA_VERSION = 1


class CalibrationError(ValueError):
    pass


class MissingAction(CalibrationError):
    def __init__(self, action: Action):
        super().__init__(f"no calibration samples for action {action.value}")
        self.action = action


class InsufficientSamples(CalibrationError):
    def __init__(self, action: Action, count: int, n_min: int):
        super().__init__(f"action {action.value} has {count} samples, needs at least {n_min}")
        self.action = action
        self.count = count


class NoisyAction(CalibrationError):
    def __init__(self, action: Action, component: str, cv: float, cv_max: float):
        super().__init__(
            f"action {action.value} is too noisy: cv({component}) = {cv:.3f} > {cv_max}"
        )
        self.action = action
        self.component = component
        self.cv = cv


@dataclass(frozen=True)
class CalibrationSample:
    action: Action
    ratios: RatioVector


@dataclass(frozen=True)
class ActionStats:
    centroid: RatioVector
    spread: RatioVector
    sample_count: int


@dataclass(frozen=True)
class CalibrationProfile:
    per_action: dict[Action, ActionStats]

    def __post_init__(self):
        missing = [a for a in ACTION_ORDER if a not in self.per_action]
        if missing:
            raise MissingAction(missing[0])

    def to_json(self) -> str:
        doc = {
            "version": PROFILE_SCHEMA_VERSION,
            "actions": {
                a.value: {
                    "centroid": list(self.per_action[a].centroid.as_tuple()),
                    "spread": list(self.per_action[a].spread.as_tuple()),
                    "count": self.per_action[a].sample_count,
                }
                for a in ACTION_ORDER
            },
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationProfile":
        doc = json.loads(text)
        version = doc.get("version")
        if version != PROFILE_SCHEMA_VERSION:
            raise CalibrationError(f"unsupported profile version: {version!r}")
        per_action = {}
        for a in ACTION_ORDER:
            entry = doc["actions"].get(a.value)
            if entry is None:
                raise MissingAction(a)
            per_action[a] = ActionStats(
                centroid=RatioVector.from_sequence(entry["centroid"]),
                spread=RatioVector.from_sequence(entry["spread"]),
                sample_count=int(entry["count"]),
            )
        return cls(per_action)


@dataclass(frozen=True)
class ClassifierParams:
    n_min: int = 30
    sigma_min: float = 0.01
    cv_max: float = 0.5
    alpha_ema: float = 0.4
    debounce: int = 3

    def __post_init__(self):
        if not (0.0 < self.alpha_ema <= 1.0):
            raise ValueError(f"alpha_ema must be in (0, 1]: {self.alpha_ema}")
        if self.debounce < 1:
            raise ValueError(f"debounce must be >= 1: {self.debounce}")
        if self.sigma_min <= 0:
            raise ValueError(f"sigma_min must be > 0: {self.sigma_min}")


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def _pstd(values: list[float], mean: float) -> float:
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


_COMPONENTS = ("h", "v", "open", "brow")


def calibrate(samples: list[CalibrationSample], params: ClassifierParams = ClassifierParams()) -> CalibrationProfile:
    """Build a per-action centroid/spread profile from labeled samples.

    Rejects the whole calibration pass when an action is missing, underfilled
    (< n_min samples) or too noisy (any component's coefficient of variation
    above cv_max); the user re-runs calibration in that case.
    """
    if not samples:
        raise MissingAction(ACTION_ORDER[0])
    by_action: dict[Action, list[RatioVector]] = {a: [] for a in ACTION_ORDER}
    for s in samples:
        by_action[s.action].append(s.ratios)

    per_action: dict[Action, ActionStats] = {}
    for action in ACTION_ORDER:
        vecs = by_action[action]
        if not vecs:
            raise MissingAction(action)
        if len(vecs) < params.n_min:
            raise InsufficientSamples(action, len(vecs), params.n_min)
        centroid = []
        spread = []
        for k, name in enumerate(_COMPONENTS):
            column = [v.as_tuple()[k] for v in vecs]
            mean = _mean(column)
            std = _pstd(column, mean)
            if mean > 0:
                cv = std / mean
            else:
                cv = 0.0 if std == 0.0 else math.inf
            if cv > params.cv_max:
                raise NoisyAction(action, name, cv, params.cv_max)
            centroid.append(mean)
            spread.append(max(std, params.sigma_min))
        per_action[action] = ActionStats(
            centroid=RatioVector.from_sequence(centroid),
            spread=RatioVector.from_sequence(spread),
            sample_count=len(vecs),
        )
    return CalibrationProfile(per_action)


def normalized_distance_sq(ratios: RatioVector, stats: ActionStats) -> float:
    r = ratios.as_tuple()
    c = stats.centroid.as_tuple()
    s = stats.spread.as_tuple()
    return sum(((r[k] - c[k]) / s[k]) ** 2 for k in range(4))


def classify_frame(ratios: RatioVector, profile: CalibrationProfile) -> Action:
    """Nearest centroid in spread-normalized space; ties break by enum order."""
    best_action = ACTION_ORDER[0]
    best_d = normalized_distance_sq(ratios, profile.per_action[best_action])
    for action in ACTION_ORDER[1:]:
        d = normalized_distance_sq(ratios, profile.per_action[action])
        if d < best_d:
            best_action, best_d = action, d
    return best_action


@dataclass(frozen=True)
class ClassifierState:
    """Debouncer state threaded through step(); emitted starts at Center."""

    candidate: Action = Action.Center
    run_length: int = 1
    emitted: Action = Action.Center
    ema: RatioVector | None = None


def debounce_step(
    candidate: Action, run_length: int, emitted: Action, raw: Action, debounce: int
) -> tuple[Action, int, Action, bool]:
    """Advance the run-length debouncer by one raw label.

    The emitted label changes only after the raw label has persisted for
    `debounce` consecutive frames.
    """
    if raw == candidate:
        run_length += 1
    else:
        candidate = raw
        run_length = 1
    changed = False
    if candidate != emitted and run_length >= debounce:
        emitted = candidate
        changed = True
    return candidate, run_length, emitted, changed


def step(
    state: ClassifierState,
    ratios: RatioVector,
    profile: CalibrationProfile,
    params: ClassifierParams = ClassifierParams(),
) -> tuple[ClassifierState, Action, bool]:
    """Smooth, classify and debounce one frame of ratios.

    Returns the new state, the emitted (stable) action and whether the
    emission changed on this frame. The EMA seeds on the first frame.
    """
    if state.ema is None:
        ema = ratios
    else:
        a = params.alpha_ema
        prev = state.ema.as_tuple()
        cur = ratios.as_tuple()
        ema = RatioVector.from_sequence(a * cur[k] + (1.0 - a) * prev[k] for k in range(4))
    raw = classify_frame(ema, profile)
    candidate, run_length, emitted, changed = debounce_step(
        state.candidate, state.run_length, state.emitted, raw, params.debounce
    )
    new_state = ClassifierState(candidate=candidate, run_length=run_length, emitted=emitted, ema=ema)
    return new_state, emitted, changed
