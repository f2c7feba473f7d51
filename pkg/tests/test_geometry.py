import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazerace.geometry import (
    DegenerateGeometry,
    EyeGeometryConfig,
    LandmarkFrame,
    MissingLandmark,
    Point2,
    RatioVector,
    extract_ratios,
    ratio,
)


def P(x, y):
    return Point2(x, y)


class TestRatio:
    def test_center_on_first_edge(self):
        assert ratio(P(0, 0), P(1, 0), P(0, 0)) == 0.0

    def test_midpoint(self):
        assert ratio(P(0, 0), P(4, 0), P(2, 0)) == 0.5

    def test_hand_evaluated_off_segment(self):
        # numerator sqrt(1 + 4), denominator 4
        expected = math.sqrt(5) / 4
        assert ratio(P(0, 0), P(4, 0), P(1, 2)) == pytest.approx(expected, rel=1e-15)

    def test_second_edge_is_one(self):
        e1, e2 = P(0.13, 0.77), P(0.42, 0.31)
        assert ratio(e1, e2, e2) == 1.0

    def test_degenerate_pair_rejected(self):
        with pytest.raises(DegenerateGeometry):
            ratio(P(0.5, 0.5), P(0.5, 0.5), P(0.2, 0.2))
        with pytest.raises(DegenerateGeometry):
            ratio(P(0.5, 0.5), P(0.5, 0.5 + 1e-10), P(0.2, 0.2))

    def test_similarity_invariance_sampled(self):
        rng = random.Random(1234)
        for _ in range(500):
            e1 = P(rng.uniform(-1, 1), rng.uniform(-1, 1))
            e2 = P(rng.uniform(-1, 1), rng.uniform(-1, 1))
            c = P(rng.uniform(-1, 1), rng.uniform(-1, 1))
            if math.hypot(e1.x - e2.x, e1.y - e2.y) < 1e-6:
                continue
            base = ratio(e1, e2, c)
            ang = rng.uniform(0, 2 * math.pi)
            s = rng.uniform(1e-3, 1e3)
            tx, ty = rng.uniform(-10, 10), rng.uniform(-10, 10)
            ca, sa = math.cos(ang), math.sin(ang)

            def T(p):
                return P(s * (p.x * ca - p.y * sa) + tx, s * (p.x * sa + p.y * ca) + ty)

            assert ratio(T(e1), T(e2), T(c)) == pytest.approx(base, rel=1e-12)

    @given(
        st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
        st.floats(0, 1),
    )
    @settings(max_examples=200)
    def test_on_segment_parameter_recovery(self, x1, y1, x2, y2, t):
        e1, e2 = P(x1, y1), P(x2, y2)
        if math.hypot(x1 - x2, y1 - y2) < 1e-3:
            return
        c = P(x1 + t * (x2 - x1), y1 + t * (y2 - y1))
        assert ratio(e1, e2, c) == pytest.approx(t, abs=1e-12)


CFG = EyeGeometryConfig()


def frame_for(points: dict[int, tuple[float, float]], t_us=0) -> LandmarkFrame:
    return LandmarkFrame(t_us, {i: P(x, y) for i, (x, y) in points.items()})


def hand_frame() -> LandmarkFrame:
    # Default config: h=(362,263,386) v=(386,374,385) open=(386,374,362,263)
    # brow=(334,386,362,263). Corner span is exactly 1, so each ratio reads
    # off the construction directly.
    return frame_for(
        {
            362: (0.0, 0.0),
            263: (1.0, 0.0),
            386: (0.25, 0.0),
            374: (0.25, 0.5),
            385: (0.25, 0.2),
            334: (0.25, -0.3),
        }
    )


class TestExtractRatios:
    def test_horizontal_midpoint(self):
        frame = frame_for(
            {
                362: (0.30, 0.50),
                263: (0.40, 0.50),
                386: (0.35, 0.50),
                374: (0.35, 0.55),
                385: (0.35, 0.52),
                334: (0.35, 0.44),
            }
        )
        assert extract_ratios(frame, CFG).h == pytest.approx(0.5, rel=1e-12)

    def test_four_independent_hand_evaluations(self):
        rv = extract_ratios(hand_frame(), CFG)
        assert rv.h == pytest.approx(0.25, abs=1e-15)
        assert rv.v == pytest.approx(0.4, abs=1e-15)
        assert rv.open == pytest.approx(0.5, abs=1e-15)
        assert rv.brow == pytest.approx(0.3, abs=1e-15)

    def test_missing_landmark(self):
        frame = hand_frame()
        broken = LandmarkFrame(0, {i: p for i, p in frame.points.items() if i != 386})
        with pytest.raises(MissingLandmark) as exc:
            extract_ratios(broken, CFG)
        assert exc.value.index == 386

    def test_determinism_over_random_frames(self):
        rng = random.Random(7)
        for _ in range(50):
            pts = {
                i: (rng.uniform(0, 1), rng.uniform(0, 1))
                for i in CFG.required_indices()
            }
            frame = frame_for(pts)
            try:
                first = extract_ratios(frame, CFG)
            except DegenerateGeometry:
                continue
            assert extract_ratios(frame, CFG) == first


class TestTypes:
    def test_point_rejects_nan(self):
        with pytest.raises(ValueError):
            Point2(float("nan"), 0.0)

    def test_frame_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            LandmarkFrame(0, {468: P(0, 0)})

    def test_ratio_vector_rejects_negative(self):
        with pytest.raises(ValueError):
            RatioVector(-0.1, 0.5, 0.5, 0.5)

    def test_config_rejects_duplicate_indices(self):
        with pytest.raises(ValueError):
            EyeGeometryConfig(horizontal=(10, 10, 20))
