"""Landmark frames and the ratio geometry that turns eye points into features.

Everything here is a pure value computation: a frame of 2-D face-mesh points
goes in, a four-component ratio vector comes out. No I/O, no state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Degenerate-pair guard for the ratio denominator, in normalized image units.
# A collapsed landmark pair must be rejected, never propagated as inf/nan.
EPS_GEOM = 1e-9

MAX_LANDMARK_INDEX = 467


class DegenerateGeometry(ValueError):
    """Edge points of a ratio are (nearly) coincident."""


class MissingLandmark(KeyError):
    """A frame lacks a landmark index required by the geometry config."""

    def __init__(self, index: int):
        super().__init__(index)
        self.index = index

    def __str__(self) -> str:
        return f"frame is missing landmark index {self.index}"


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class LandmarkFrame:
    """One timestamped set of face-mesh points, keyed by landmark index."""

    timestamp_us: int
    points: dict[int, Point2]

    def __post_init__(self):
        for idx in self.points:
            if not (0 <= idx <= MAX_LANDMARK_INDEX):
                raise ValueError(f"landmark index {idx} out of range 0..{MAX_LANDMARK_INDEX}")

    def point(self, idx: int) -> Point2:
        try:
            return self.points[idx]
        except KeyError:
            raise MissingLandmark(idx) from None


@dataclass(frozen=True)
class EyeGeometryConfig:
    """Which landmark indices feed each ratio.

    horizontal/vertical are (edge1, edge2, center) triples evaluated with the
    edge-to-center ratio; openness is (top, bottom, corner1, corner2) and
    eyebrow is (brow, reference, corner1, corner2), both normalized by the
    corner1-corner2 distance so camera distance cancels.
    """

    horizontal: tuple[int, int, int] = (362, 263, 386)
    vertical: tuple[int, int, int] = (386, 374, 385)
    openness: tuple[int, int, int, int] = (386, 374, 362, 263)
    eyebrow: tuple[int, int, int, int] = (334, 386, 362, 263)

    def __post_init__(self):
        for name in ("horizontal", "vertical", "openness", "eyebrow"):
            tup = getattr(self, name)
            if len(set(tup)) != len(tup):
                raise ValueError(f"{name} indices must be pairwise distinct: {tup}")
            for idx in tup:
                if not (0 <= idx <= MAX_LANDMARK_INDEX):
                    raise ValueError(f"{name} index {idx} out of range 0..{MAX_LANDMARK_INDEX}")

    def required_indices(self) -> set[int]:
        return set(self.horizontal) | set(self.vertical) | set(self.openness) | set(self.eyebrow)


@dataclass(frozen=True)
class RatioVector:
    h: float
    v: float
    open: float
    brow: float

    def __post_init__(self):
        for name, val in (("h", self.h), ("v", self.v), ("open", self.open), ("brow", self.brow)):
            if not math.isfinite(val):
                raise ValueError(f"ratio component {name} is not finite: {val}")
            if val < 0:
                raise ValueError(f"ratio component {name} is negative: {val}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.h, self.v, self.open, self.brow)

    @classmethod
    def from_sequence(cls, seq) -> "RatioVector":
        h, v, op, br = seq
        return cls(float(h), float(v), float(op), float(br))


def _dist(a: Point2, b: Point2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def ratio(e1: Point2, e2: Point2, c: Point2) -> float:
    """Distance from the first edge point to the center point, normalized by
    the edge-to-edge distance. 0 at e1, 1 at e2, t for c at parameter t on
    the segment; invariant under translation, rotation and uniform scale."""
    denom = _dist(e1, e2)
    if denom <= EPS_GEOM:
        raise DegenerateGeometry(f"edge points too close: |e1-e2| = {denom}")
    return _dist(e1, c) / denom


def _span_ratio(p: Point2, q: Point2, c1: Point2, c2: Point2) -> float:
    denom = _dist(c1, c2)
    if denom <= EPS_GEOM:
        raise DegenerateGeometry(f"corner points too close: |c1-c2| = {denom}")
    return _dist(p, q) / denom


def extract_ratios(frame: LandmarkFrame, cfg: EyeGeometryConfig = EyeGeometryConfig()) -> RatioVector:
    """Evaluate the four configured ratios on one frame.

    Deterministic and pure; raises MissingLandmark if the frame lacks a
    configured index, DegenerateGeometry on collapsed point pairs.
    """
    he1, he2, hc = (frame.point(i) for i in cfg.horizontal)
    ve1, ve2, vc = (frame.point(i) for i in cfg.vertical)
    top, bottom, oc1, oc2 = (frame.point(i) for i in cfg.openness)
    brow, ref, bc1, bc2 = (frame.point(i) for i in cfg.eyebrow)
    return RatioVector(
        h=ratio(he1, he2, hc),
        v=ratio(ve1, ve2, vc),
        open=_span_ratio(top, bottom, oc1, oc2),
        brow=_span_ratio(brow, ref, bc1, bc2),
    )
