"""Flight-trajectory metrics and paired signed-rank statistics.

metrics() reduces a trajectory log to the four standard rows (time, path
length, average velocity, maximal velocity); wilcoxon_signed_rank() is a
self-contained exact/approximate paired test with V = min(W+, W-); and
compare_report() lines the two up into a comparison table for two recorded
conditions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum

from .sim import TrajectoryLog

FLYING = "Flying"


class EmptyTrajectory(ValueError):
    pass


class AllZeroDifferences(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryMetrics:
    time_s: float
    path_length_m: float
    avg_velocity_mps: float
    max_velocity_mps: float

    def to_dict(self) -> dict:
        return {
            "time_s": self.time_s,
            "path_length_m": self.path_length_m,
            "avg_velocity_mps": self.avg_velocity_mps,
            "max_velocity_mps": self.max_velocity_mps,
        }


def metrics(log: TrajectoryLog, end_t_us: int | None = None) -> TrajectoryMetrics:
    """Reduce a trajectory log to time / path length / avg / max velocity.

    Only flying-phase samples count. Time runs from the first flying tick to
    end_t_us (pass the final gate's crossing time from a RaceResult) or to
    the last flying tick when no end is given.
    """
    rows = [r for r in log if r.phase == FLYING]
    if end_t_us is not None:
        rows = [r for r in rows if r.t_us <= end_t_us]
    if len(rows) < 2:
        raise EmptyTrajectory(f"need at least 2 flying samples, got {len(rows)}")
    path = 0.0
    for a, b in zip(rows, rows[1:]):
        path += math.sqrt((b.x - a.x) ** 2 + (b.y - a.y) ** 2 + (b.z - a.z) ** 2)
    time_s = (rows[-1].t_us - rows[0].t_us) / 1e6
    max_v = max(math.sqrt(r.vx**2 + r.vy**2 + r.vz**2) for r in rows)
    avg_v = path / time_s if time_s > 0 else 0.0
    return TrajectoryMetrics(
        time_s=time_s,
        path_length_m=path,
        avg_velocity_mps=avg_v,
        max_velocity_mps=max_v,
    )


@dataclass(frozen=True)
class PairedSample:
    label: str
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"paired values must be finite: {self.label}")


class SignedRankMethod(Enum):
    Exact = "exact"
    NormalApprox = "normal_approx"


@dataclass(frozen=True)
class SignedRankResult:
    V: float
    p_two_sided: float
    n_effective: int
    method: SignedRankMethod

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "p_two_sided": self.p_two_sided,
            "n_effective": self.n_effective,
            "method": self.method.value,
        }


def _midranks(abs_diffs: list[float]) -> list[float]:
    """Ranks of |d| with ties sharing the mid-rank."""
    order = sorted(range(len(abs_diffs)), key=lambda i: abs_diffs[i])
    ranks = [0.0] * len(abs_diffs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and abs_diffs[order[j + 1]] == abs_diffs[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _exact_lower_tail(ranks2: list[int], v2: int) -> float:
    """P(W+ <= v) under random signs, counted over all 2^n assignments.

    ranks2 are doubled ranks (so mid-ranks become integers); v2 is the
    doubled statistic. Subset-sum counting gives the exact distribution that
    full sign enumeration induces, and the resulting p is a dyadic rational
    represented exactly in floating point.
    """
    total = sum(ranks2)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in ranks2:
        for s in range(total, r - 1, -1):
            if counts[s - r]:
                counts[s] += counts[s - r]
    favorable = sum(counts[: v2 + 1])
    return favorable / (1 << len(ranks2))


def wilcoxon_signed_rank(
    samples: list[PairedSample], exact_threshold: int = 25
) -> SignedRankResult:
    """Two-sided paired signed-rank test with V = min(W+, W-).

    Zero differences are dropped; |d| ties get mid-ranks. The p-value is
    exact (full enumeration over sign assignments) when the effective n is
    at or below exact_threshold, otherwise a tie-corrected normal
    approximation with continuity correction is used.
    """
    diffs = [s.a - s.b for s in samples if s.a - s.b != 0.0]
    n = len(diffs)
    if n == 0:
        raise AllZeroDifferences("every pair has a zero difference")
    ranks = _midranks([abs(d) for d in diffs])
    w_plus = math.fsum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = math.fsum(r for r, d in zip(ranks, diffs) if d < 0)
    v = min(w_plus, w_minus)

    if n <= exact_threshold:
        ranks2 = [round(2 * r) for r in ranks]
        p = min(1.0, 2.0 * _exact_lower_tail(ranks2, round(2 * v)))
        return SignedRankResult(V=v, p_two_sided=p, n_effective=n, method=SignedRankMethod.Exact)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: subtract sum(t^3 - t)/48 over groups of tied |d|
    seen: dict[float, int] = {}
    for d in diffs:
        seen[abs(d)] = seen.get(abs(d), 0) + 1
    var -= sum(t**3 - t for t in seen.values()) / 48.0
    # V sits in the lower tail, so the continuity correction moves it up
    z = (v - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * 0.5 * (1.0 + math.erf(z / math.sqrt(2.0))))
    return SignedRankResult(
        V=v, p_two_sided=p, n_effective=n, method=SignedRankMethod.NormalApprox
    )


def read_paired_csv(text: str) -> list[PairedSample]:
    """Parse `label,a,b` rows; a header row with those names is tolerated."""
    samples = []
    for row in csv.reader(io.StringIO(text)):
        if not row or all(not c.strip() for c in row):
            continue
        if row[0].strip().lower() == "label":
            continue
        if len(row) < 3:
            raise ValueError(f"paired CSV rows need label,a,b: {row}")
        samples.append(PairedSample(label=row[0].strip(), a=float(row[1]), b=float(row[2])))
    return samples


# Row names mirror the standard comparison-table layout.
METRIC_ROWS = (
    ("Time, s", "time_s"),
    ("Path length, m", "path_length_m"),
    ("Average velocity, m/s", "avg_velocity_mps"),
    ("Maximal velocity, m/s", "max_velocity_mps"),
)


def _mean_metrics(runs: list[TrajectoryMetrics]) -> dict[str, float]:
    return {
        key: math.fsum(getattr(r, key) for r in runs) / len(runs)
        for _, key in METRIC_ROWS
    }


def compare_report(
    runs_a: list[TrajectoryMetrics],
    runs_b: list[TrajectoryMetrics],
    labels_a: list[str] | None = None,
    labels_b: list[str] | None = None,
    condition_a: str = "A",
    condition_b: str = "B",
    exact_threshold: int = 25,
) -> dict:
    """Compare two sets of runs: per-condition mean and best rows for all
    four metrics, percentage deltas of A relative to B, and signed-rank
    tests on per-subject paired metrics when the label sets align.

    The best run of a condition is its minimum-time run. The reduction
    percentage for a metric is (mean_b - mean_a)/mean_b * 100, i.e. positive
    when condition A comes out lower.
    """
    if not runs_a or not runs_b:
        raise EmptyInput("both run lists must be non-empty")
    mean_a = _mean_metrics(runs_a)
    mean_b = _mean_metrics(runs_b)
    best_a = min(runs_a, key=lambda r: r.time_s)
    best_b = min(runs_b, key=lambda r: r.time_s)
    deltas = {}
    for _, key in METRIC_ROWS:
        if mean_b[key] != 0:
            deltas[key] = (mean_b[key] - mean_a[key]) / mean_b[key] * 100.0
        else:
            deltas[key] = 0.0

    report = {
        "v_convention": "V = min(W+, W-) over nonzero paired differences",
        "conditions": {"a": condition_a, "b": condition_b},
        "overall": {"a": mean_a, "b": mean_b},
        "best": {"a": best_a.to_dict(), "b": best_b.to_dict()},
        "reduction_pct": deltas,
        "signed_rank": None,
    }

    if labels_a and labels_b and len(labels_a) == len(runs_a) and len(labels_b) == len(runs_b):
        by_a = dict(zip(labels_a, runs_a))
        by_b = dict(zip(labels_b, runs_b))
        if set(by_a) == set(by_b) and len(by_a) == len(runs_a) and len(by_b) == len(runs_b):
            tests = {}
            for _, key in METRIC_ROWS:
                pairs = [
                    PairedSample(label=lbl, a=getattr(by_a[lbl], key), b=getattr(by_b[lbl], key))
                    for lbl in sorted(by_a)
                ]
                try:
                    tests[key] = wilcoxon_signed_rank(pairs, exact_threshold).to_dict()
                except AllZeroDifferences:
                    tests[key] = None
            report["signed_rank"] = tests
    return report


def render_report(report: dict) -> str:
    """Human-readable comparison table mirroring the standard row layout."""
    a = report["conditions"]["a"]
    b = report["conditions"]["b"]
    width = max(len(a), len(b), 12)
    lines = [
        f"# Flight comparison ({report['v_convention']})",
        f"{'':14s}  {'Metric':24s}  {a:>{width}s}  {b:>{width}s}",
    ]
    for row_name, key in METRIC_ROWS:
        lines.append(
            f"{'Overall':14s}  {row_name:24s}  "
            f"{report['overall']['a'][key]:>{width}.2f}  {report['overall']['b'][key]:>{width}.2f}"
        )
    for row_name, key in METRIC_ROWS[:3]:
        lines.append(
            f"{'Best Result':14s}  {row_name:24s}  "
            f"{report['best']['a'][key]:>{width}.2f}  {report['best']['b'][key]:>{width}.2f}"
        )
    for row_name, key in METRIC_ROWS:
        lines.append(f"Reduction ({a} vs {b}), {row_name}: {report['reduction_pct'][key]:.2f}%")
    if report.get("signed_rank"):
        for row_name, key in METRIC_ROWS:
            t = report["signed_rank"].get(key)
            if t:
                lines.append(
                    f"Signed-rank, {row_name}: V={t['V']:g}, p={t['p_two_sided']:g} ({t['method']}, n={t['n_effective']})"
                )
    return "\n".join(lines) + "\n"
