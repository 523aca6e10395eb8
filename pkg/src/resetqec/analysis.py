"""Failure counts to logical error rates, decay fits and time-overhead ratios.

Memory experiments are run once per logical basis and combined as
``p_X + p_Z - p_X p_Z``. Stability experiments are swept over the number of
rounds ``n`` and fitted with ``log p_L = log a - gamma n`` by weighted least
squares, where each point carries the inverse of its delta-method variance
``(se / p_L)**2``. Slopes are reported per round and per nanosecond; the
overhead ratio of an alternative circuit against the no-reset baseline is
the ratio of per-nanosecond slopes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

CSV_COLUMNS = ("experiment", "family", "scheme", "size", "p", "rounds", "t_res",
               "shots", "failures", "p_l", "se")
MIN_FAILURES = 10
MIN_POINTS = 3
PLOT_SIGMAS = 3
WEIGHTING = "weighted least squares on log p_L, weights (se/p_L)^-2 (delta method)"


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FailurePoint:
    """Failures observed at one configuration.

    For memory experiments ``failures`` and ``shots`` are the sums over the
    two basis runs and ``p_l``/``se`` hold the combined estimate; otherwise
    ``p_l = failures / shots``.
    """

    experiment: str
    family: str
    scheme: str
    size: int
    p: float
    rounds: int
    t_res: int
    shots: int
    failures: int
    p_l: float = field(default=math.nan)
    se: float = field(default=math.nan)

    def __post_init__(self):
        if self.shots < 0 or not 0 <= self.failures <= self.shots:
            raise ValueError("need 0 <= failures <= shots")
        if math.isnan(self.p_l):
            rate = self.failures / self.shots if self.shots else 0.0
            object.__setattr__(self, "p_l", rate)
        if math.isnan(self.se):
            object.__setattr__(self, "se", binomial_se(self.p_l, self.shots))

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


def binomial_se(p: float, shots: int) -> float:
    """Standard error ``sqrt(p (1 - p) / shots)`` of a binomial rate."""
    if shots <= 0:
        return math.inf
    return math.sqrt(p * (1 - p) / shots)


def combine_memory(p_x: float, p_z: float) -> float:
    """Probability that at least one of two independent logical failures occurs."""
    for v in (p_x, p_z):
        if not 0 <= v <= 1:
            raise ValueError(f"probability {v} outside [0, 1]")
    return p_x + p_z - p_x * p_z


def combine_points(x: FailurePoint, z: FailurePoint) -> FailurePoint:
    """Merge the two basis runs of one memory configuration.

    The standard error follows from the delta method with independent arms.
    """
    keys = ("experiment", "family", "scheme", "size", "p", "rounds", "t_res")
    if any(getattr(x, k) != getattr(z, k) for k in keys):
        raise ValueError("basis runs describe different configurations")
    p_l = combine_memory(x.p_l, z.p_l)
    se = math.hypot((1 - z.p_l) * x.se, (1 - x.p_l) * z.se)
    return FailurePoint(x.experiment, x.family, x.scheme, x.size, x.p, x.rounds, x.t_res,
                        x.shots + z.shots, x.failures + z.failures, p_l, se)


@dataclass(frozen=True)
class FitResult:
    """Weighted log-linear fit ``log p_L = log_a - gamma_round * n``.

    ``cov`` is the 2x2 covariance of ``(log_a, gamma_round)``.
    """

    log_a: float
    gamma_round: float
    round_ns: float
    cov: tuple[tuple[float, float], tuple[float, float]]
    points: tuple[FailurePoint, ...]
    excluded: tuple[FailurePoint, ...] = ()

    @property
    def gamma_ns(self) -> float:
        return self.gamma_round / self.round_ns

    @property
    def se_gamma_round(self) -> float:
        return math.sqrt(self.cov[1][1])

    @property
    def se_gamma_ns(self) -> float:
        return self.se_gamma_round / self.round_ns

    def to_dict(self) -> dict:
        return {
            "log_a": self.log_a,
            "gamma_round": self.gamma_round,
            "se_gamma_round": self.se_gamma_round,
            "gamma_ns": self.gamma_ns,
            "se_gamma_ns": self.se_gamma_ns,
            "round_ns": self.round_ns,
            "cov": [list(r) for r in self.cov],
            "weighting": WEIGHTING,
            "rounds_used": [pt.rounds for pt in self.points],
            "rounds_excluded": [pt.rounds for pt in self.excluded],
        }


def fit_log_linear(points, round_ns: float = 1.0, min_failures: int = MIN_FAILURES) -> FitResult:
    """Fit the exponential decay of ``p_L`` with the number of rounds.

    Points with fewer than ``min_failures`` failures, or with ``p_L`` equal to
    0 or 1, are excluded and returned in ``excluded``.

    Raises
    ------
    FitError
        If fewer than three points remain.
    """
    if not round_ns > 0:
        raise FitError("round duration must be positive")
    points = sorted(points, key=lambda pt: (pt.rounds, pt.p_l, pt.shots))
    used, dropped = [], []
    for pt in points:
        ok = pt.failures >= min_failures and 0 < pt.p_l < 1 and pt.se > 0
        (used if ok else dropped).append(pt)
    if len(used) < MIN_POINTS:
        raise FitError(f"{len(used)} usable points; need at least {MIN_POINTS}")
    n = np.array([pt.rounds for pt in used], dtype=float)
    y = np.log([pt.p_l for pt in used])
    w = np.array([(pt.p_l / pt.se) ** 2 for pt in used])
    design = np.column_stack([np.ones_like(n), -n])
    normal = design.T @ (w[:, None] * design)
    cov = np.linalg.inv(normal)
    beta = cov @ (design.T @ (w * y))
    return FitResult(float(beta[0]), float(beta[1]), float(round_ns),
                     ((float(cov[0, 0]), float(cov[0, 1])), (float(cov[1, 0]), float(cov[1, 1]))),
                     tuple(used), tuple(dropped))


@dataclass(frozen=True)
class Ratio:
    value: float
    se: float

    def to_dict(self) -> dict:
        return asdict(self)


def overhead_ratio(fit_nr: FitResult, fit_alt: FitResult) -> Ratio:
    """Time overhead ``R = gamma_nr / gamma_alt`` of per-nanosecond slopes.

    ``R < 1`` means the alternative suppresses errors faster per unit time.
    The two fits are independent, so relative errors add in quadrature.
    """
    a, b = fit_nr.gamma_ns, fit_alt.gamma_ns
    if not (a > 0 and b > 0):
        raise FitError("non-positive decay rate: no exponential suppression at this p")
    r = a / b
    return Ratio(r, r * math.hypot(fit_nr.se_gamma_ns / a, fit_alt.se_gamma_ns / b))


@dataclass(frozen=True)
class BreakEven:
    """Where ``R(p)`` crosses 1, or ``None`` when no crossing was sampled."""

    p_br: float | None
    bracket: tuple[float, float] | None

    @property
    def bracketed(self) -> bool:
        return self.p_br is not None

    def __str__(self) -> str:
        if self.p_br is None:
            return "not bracketed"
        return f"p_br = {self.p_br:.4g} in ({self.bracket[0]:.4g}, {self.bracket[1]:.4g})"


def break_even(r_vs_p) -> BreakEven:
    """First crossing of ``R = 1`` scanning upwards in ``p``.

    ``R`` is interpolated linearly in ``log p`` between neighbouring samples.
    """
    pts = sorted((float(p), float(r)) for p, r in r_vs_p)
    if len(pts) < 2:
        raise ValueError("need at least two (p, R) points")
    for (p1, r1), (p2, r2) in zip(pts, pts[1:]):
        if r1 == 1:
            return BreakEven(p1, (p1, p1))
        if (r1 - 1) * (r2 - 1) < 0:
            frac = (1 - r1) / (r2 - r1)
            return BreakEven(math.exp(math.log(p1) + frac * (math.log(p2) - math.log(p1))), (p1, p2))
    if pts[-1][1] == 1:
        return BreakEven(pts[-1][0], (pts[-1][0], pts[-1][0]))
    return BreakEven(None, None)


def to_csv(points) -> str:
    """CSV text with the fixed column set, one row per point."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for pt in points:
        writer.writerow({k: _fmt(v) for k, v in pt.row().items()})
    return buf.getvalue()


def from_csv(text: str) -> list[FailurePoint]:
    out = []
    body = "".join(line for line in io.StringIO(text) if not line.startswith("#"))
    for row in csv.DictReader(io.StringIO(body)):
        out.append(FailurePoint(row["experiment"], row["family"], row["scheme"], int(row["size"]),
                                float(row["p"]), int(row["rounds"]), int(row["t_res"]),
                                int(row["shots"]), int(row["failures"]), float(row["p_l"]),
                                float(row["se"])))
    return out


def plot_rows(points, sigmas: int = PLOT_SIGMAS) -> list[dict]:
    """``log10 p_L`` against rounds with ``sigmas`` standard-error bars."""
    rows = []
    for pt in points:
        lo = max(pt.p_l - sigmas * pt.se, 0.0)
        hi = min(pt.p_l + sigmas * pt.se, 1.0)
        log = lambda v: math.log10(v) if v > 0 else -math.inf  # noqa: E731
        rows.append({"family": pt.family, "scheme": pt.scheme, "p": pt.p, "rounds": pt.rounds,
                     "t_res": pt.t_res, "log10_p_l": log(pt.p_l), "log10_lo": log(lo),
                     "log10_hi": log(hi)})
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
