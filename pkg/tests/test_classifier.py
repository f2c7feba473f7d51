import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazerace.classifier import (
    ACTION_ORDER,
    Action,
    ActionStats,
    CalibrationProfile,
    CalibrationSample,
    ClassifierParams,
    ClassifierState,
    InsufficientSamples,
    MissingAction,
    NoisyAction,
    calibrate,
    classify_frame,
    debounce_step,
    step,
)
from gazerace.geometry import RatioVector


def rv(h, v, op, br) -> RatioVector:
    return RatioVector(h, v, op, br)


def make_profile(centroids: dict[Action, tuple], spread=0.1) -> CalibrationProfile:
    per_action = {}
    for action in ACTION_ORDER:
        c = centroids[action]
        per_action[action] = ActionStats(
            centroid=rv(*c), spread=rv(spread, spread, spread, spread), sample_count=30
        )
    return CalibrationProfile(per_action)


def spread_out_centroids() -> dict[Action, tuple]:
    # Ten well-separated points on a coarse grid.
    vals = {}
    for k, action in enumerate(ACTION_ORDER):
        vals[action] = (0.1 * k, 1.0 - 0.1 * k, 0.05 * k + 0.1, 0.5)
    return vals


PROFILE = make_profile(spread_out_centroids())


def oracle_classify(ratios: RatioVector, profile: CalibrationProfile) -> Action:
    # Independent of the implementation: explicit loop, numpy arithmetic.
    best, best_d = None, None
    r = np.array(ratios.as_tuple())
    for action in ACTION_ORDER:
        stats = profile.per_action[action]
        c = np.array(stats.centroid.as_tuple())
        s = np.array(stats.spread.as_tuple())
        d = float(np.sum(((r - c) / s) ** 2))
        if best_d is None or d < best_d:
            best, best_d = action, d
    return best


class TestCalibrate:
    def test_identical_samples_give_sigma_min_spread(self):
        params = ClassifierParams(n_min=30, sigma_min=0.01)
        point = rv(0.4, 0.5, 0.6, 0.7)
        samples = [
            CalibrationSample(a, point) for a in ACTION_ORDER for _ in range(30)
        ]
        profile = calibrate(samples, params)
        for a in ACTION_ORDER:
            assert profile.per_action[a].centroid == point
            assert profile.per_action[a].spread == rv(0.01, 0.01, 0.01, 0.01)
            assert profile.per_action[a].sample_count == 30

    def test_missing_action_rejected(self):
        samples = [
            CalibrationSample(a, rv(0.5, 0.5, 0.5, 0.5))
            for a in ACTION_ORDER
            if a is not Action.Raise
            for _ in range(30)
        ]
        with pytest.raises(MissingAction) as exc:
            calibrate(samples, ClassifierParams(n_min=30))
        assert exc.value.action is Action.Raise

    def test_underfilled_action_rejected(self):
        samples = [CalibrationSample(a, rv(0.5, 0.5, 0.5, 0.5)) for a in ACTION_ORDER for _ in range(30)]
        samples.extend(CalibrationSample(Action.Up, rv(0.5, 0.5, 0.5, 0.5)) for _ in range(5))
        with pytest.raises(InsufficientSamples):
            calibrate(samples, ClassifierParams(n_min=40))

    def test_noisy_action_rejected(self):
        rng = random.Random(3)
        samples = []
        for a in ACTION_ORDER:
            for _ in range(30):
                if a is Action.Wide:
                    # huge relative scatter on h
                    samples.append(CalibrationSample(a, rv(rng.uniform(0.01, 1.0), 0.5, 0.5, 0.5)))
                else:
                    samples.append(CalibrationSample(a, rv(0.5, 0.5, 0.5, 0.5)))
        with pytest.raises(NoisyAction) as exc:
            calibrate(samples, ClassifierParams(n_min=30, cv_max=0.3))
        assert exc.value.action is Action.Wide

    def test_randomized_centroids_against_numpy_oracle(self):
        rng = random.Random(42)
        gen_means = spread_out_centroids()
        sigma = 0.02
        samples = []
        columns: dict[Action, list] = {a: [] for a in ACTION_ORDER}
        for a in ACTION_ORDER:
            for _ in range(20):
                vals = tuple(max(0.0, rng.gauss(m, sigma)) for m in gen_means[a])
                columns[a].append(vals)
                samples.append(CalibrationSample(a, rv(*vals)))
        profile = calibrate(samples, ClassifierParams(n_min=20, cv_max=5.0))
        bound = 3 * sigma / math.sqrt(20)
        for a in ACTION_ORDER:
            arr = np.array(columns[a])
            np_mean = arr.mean(axis=0)
            np_std = arr.std(axis=0)  # population std, same convention
            got = profile.per_action[a]
            for k in range(4):
                assert got.centroid.as_tuple()[k] == pytest.approx(np_mean[k], abs=1e-12)
                assert got.spread.as_tuple()[k] == pytest.approx(max(np_std[k], 0.01), abs=1e-12)
                assert abs(np_mean[k] - gen_means[a][k]) <= bound

    def test_idempotence_on_profile_centroids(self):
        # Power-of-two sample count keeps fsum/mean exact in floating point.
        target = {a: PROFILE.per_action[a].centroid for a in ACTION_ORDER}
        samples = [CalibrationSample(a, target[a]) for a in ACTION_ORDER for _ in range(32)]
        profile = calibrate(samples, ClassifierParams(n_min=32))
        for a in ACTION_ORDER:
            assert profile.per_action[a].centroid == target[a]


class TestClassify:
    def test_exact_centroid_hit(self):
        wide = PROFILE.per_action[Action.Wide].centroid
        assert classify_frame(wide, PROFILE) is Action.Wide

    def test_tie_breaks_by_enum_order(self):
        # Up and Down centroids symmetric around the query; all others far.
        centroids = {a: (5.0, 5.0, 5.0, 5.0) for a in ACTION_ORDER}
        centroids[Action.Up] = (0.4, 0.5, 0.5, 0.5)
        centroids[Action.Down] = (0.6, 0.5, 0.5, 0.5)
        profile = make_profile(centroids)
        assert classify_frame(rv(0.5, 0.5, 0.5, 0.5), profile) is Action.Up

    def test_thousand_random_vectors_match_oracle(self):
        rng = random.Random(99)
        for _ in range(1000):
            q = rv(rng.uniform(0, 1.2), rng.uniform(0, 1.2), rng.uniform(0, 1.2), rng.uniform(0, 1.2))
            assert classify_frame(q, PROFILE) is oracle_classify(q, PROFILE)

    def test_affine_rescaling_invariance(self):
        rng = random.Random(5)
        for _ in range(200):
            q = rv(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1))
            label = classify_frame(q, PROFILE)
            a = tuple(rng.uniform(0.5, 2.0) for _ in range(4))
            b = tuple(rng.uniform(0.0, 1.0) for _ in range(4))

            def tx(vec):
                t = vec.as_tuple()
                return rv(*(a[k] * t[k] + b[k] for k in range(4)))

            rescaled = {
                act: ActionStats(
                    centroid=tx(PROFILE.per_action[act].centroid),
                    spread=rv(*(a[k] * PROFILE.per_action[act].spread.as_tuple()[k] for k in range(4))),
                    sample_count=30,
                )
                for act in ACTION_ORDER
            }
            assert classify_frame(tx(q), CalibrationProfile(rescaled)) is label


def reference_debouncer(labels, debounce):
    """Independent debounce automaton: emit after D consecutive repeats."""
    emitted = Action.Center
    out = []
    run_label, run_len = None, 0
    for lab in labels:
        if lab == run_label:
            run_len += 1
        else:
            run_label, run_len = lab, 1
        changed = False
        if run_len >= debounce and emitted != run_label:
            emitted = run_label
            changed = True
        out.append((emitted, changed))
    return out


class TestDebounce:
    @given(
        st.lists(st.sampled_from([Action.Center, Action.Wide, Action.Up]), min_size=1, max_size=40),
        st.integers(min_value=1, max_value=5),
    )
    @settings(max_examples=300)
    def test_matches_reference_automaton(self, labels, debounce):
        candidate, run_length, emitted = Action.Center, 1, Action.Center
        got = []
        for lab in labels:
            candidate, run_length, emitted, changed = debounce_step(
                candidate, run_length, emitted, lab, debounce
            )
            got.append((emitted, changed))
        assert got == reference_debouncer(labels, debounce)

    def test_emission_needs_d_consecutive(self):
        candidate, run_length, emitted = Action.Center, 1, Action.Center
        seen = []
        for lab in [Action.Wide, Action.Wide, Action.Center, Action.Wide, Action.Wide, Action.Wide]:
            candidate, run_length, emitted, changed = debounce_step(
                candidate, run_length, emitted, lab, 3
            )
            seen.append(emitted)
        assert seen == [Action.Center] * 5 + [Action.Wide]


class TestStep:
    def test_filters_disabled_degenerates_to_classify(self):
        params = ClassifierParams(alpha_ema=1.0, debounce=1)
        state = ClassifierState()
        rng = random.Random(11)
        for _ in range(100):
            q = rv(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1))
            state, emitted, _ = step(state, q, PROFILE, params)
            assert emitted is classify_frame(q, PROFILE)

    def test_constant_center_is_fixed_point(self):
        params = ClassifierParams(alpha_ema=0.4, debounce=3)
        center = PROFILE.per_action[Action.Center].centroid
        state = ClassifierState()
        for i in range(50):
            state, emitted, changed = step(state, center, PROFILE, params)
            assert emitted is Action.Center
            if i > 0:
                assert not changed

    @pytest.mark.parametrize("alpha", [1.0, 0.4])
    def test_alternating_stream_never_emits_with_debounce_3(self, alpha):
        # Other actions sit far away so the smoothed oscillation stays inside
        # the Wide/Center cells and the raw label genuinely alternates.
        centroids = {a: (4.0 + 0.3 * k, 4.0, 4.0, 4.0) for k, a in enumerate(ACTION_ORDER)}
        centroids[Action.Center] = (0.5, 0.5, 0.4, 0.6)
        centroids[Action.Wide] = (0.5, 0.5, 0.7, 0.6)
        profile = make_profile(centroids)
        params = ClassifierParams(alpha_ema=alpha, debounce=3)
        wide = profile.per_action[Action.Wide].centroid
        center = profile.per_action[Action.Center].centroid
        state = ClassifierState()
        # starting from Center keeps the smoothed labels alternating; a
        # Wide-seeded EMA would legitimately produce three Wide labels in a
        # row during the transient and the debouncer would (correctly) emit
        for i in range(60):
            q = center if i % 2 == 0 else wide
            state, emitted, changed = step(state, q, profile, params)
            assert emitted is Action.Center
            assert not changed


class TestProfileSerialization:
    def test_round_trip(self):
        text = PROFILE.to_json()
        back = CalibrationProfile.from_json(text)
        assert back == PROFILE

    def test_schema_shape(self):
        import json

        doc = json.loads(PROFILE.to_json())
        assert doc["version"] == 1
        assert set(doc["actions"]) == {a.value for a in ACTION_ORDER}
        entry = doc["actions"]["Wide"]
        assert len(entry["centroid"]) == 4
        assert len(entry["spread"]) == 4
        assert entry["count"] == 30

    def test_wrong_version_rejected(self):
        import json

        doc = json.loads(PROFILE.to_json())
        doc["version"] = 99
        with pytest.raises(Exception):
            CalibrationProfile.from_json(json.dumps(doc))
