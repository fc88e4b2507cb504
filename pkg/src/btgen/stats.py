"""Study statistics: answer matrices, one-way ANOVA, one-sample t-test,
and generation-quality metrics over a command suite.

The t and F distribution functions are built on a regularized incomplete
beta evaluated by continued fraction, so arbitrary df/alpha work without
tables. Quantiles come from bisection on the CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class StatsError(Exception):
    pass


class DegenerateVariance(StatsError):
    pass


class TooFewGroups(StatsError):
    pass


class ZeroVariance(StatsError):
    pass


class TooFewValues(StatsError):
    pass


# ---------------------------------------------------------------------------
# Special functions

_MAX_ITER = 300
_EPS = 3e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's method for the continued fraction of the incomplete beta.
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise StatsError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: float) -> float:
    if df <= 0:
        raise ValueError("df must be positive")
    if x == 0.0:
        return 0.5
    tail = 0.5 * betainc_reg(df / 2.0, 0.5, df / (df + x * x))
    return 1.0 - tail if x > 0 else tail


def f_cdf(x: float, df1: float, df2: float) -> float:
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0.0:
        return 0.0
    return betainc_reg(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))


def t_quantile(p: float, df: float, tol: float = 1e-8) -> float:
    """Inverse t-CDF by bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo, hi = -1.0, 1.0
    while t_cdf(lo, df) > p:
        lo *= 2.0
    while t_cdf(hi, df) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# Tests and summaries


@dataclass(frozen=True)
class AnswerMatrix:
    rows: tuple  # one tuple of 0/1 per participant

    def __post_init__(self):
        if not self.rows:
            raise StatsError("empty matrix")
        width = len(self.rows[0])
        for row in self.rows:
            if len(row) != width:
                raise StatsError("matrix is not rectangular")
            if any(cell not in (0, 1) for cell in row):
                raise StatsError("cells must be 0 or 1")

    @property
    def participants(self):
        return len(self.rows)

    @property
    def questions(self):
        return len(self.rows[0])

    def column(self, j):
        return [row[j] for row in self.rows]

    @classmethod
    def from_csv(cls, text: str, skip_header: bool = False):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if skip_header:
            lines = lines[1:]
        rows = tuple(
            tuple(int(cell.strip()) for cell in ln.split(",")) for ln in lines
        )
        return cls(rows)


@dataclass(frozen=True)
class StudyStats:
    mean_correct: float
    mean_score: float
    anova_F: float
    anova_p: float
    t_stat: float
    t_crit: float
    t_p: float
    reject_null: bool

    def to_dict(self):
        return {
            "mean_correct": self.mean_correct,
            "mean_score": self.mean_score,
            "anova_F": self.anova_F,
            "anova_p": self.anova_p,
            "t_stat": self.t_stat,
            "t_crit": self.t_crit,
            "t_p": self.t_p,
            "reject_null": self.reject_null,
        }


def mean_scores(matrix: AnswerMatrix) -> tuple[float, float]:
    mean_correct = sum(sum(row) for row in matrix.rows) / matrix.participants
    return mean_correct, mean_correct / matrix.questions


def one_way_anova(groups) -> tuple[float, float]:
    groups = [list(g) for g in groups]
    if len(groups) < 2 or any(len(g) < 2 for g in groups):
        raise TooFewGroups("need >= 2 groups with >= 2 values each")
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand = sum(sum(g) for g in groups) / n_total
    ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ss_within = sum(
        sum((x - sum(g) / len(g)) ** 2 for x in g) for g in groups
    )
    df1, df2 = k - 1, n_total - k
    ms_within = ss_within / df2
    if ms_within == 0.0:
        raise DegenerateVariance("within-group variance is zero")
    f_stat = (ss_between / df1) / ms_within
    p = 1.0 - f_cdf(f_stat, df1, df2)
    return f_stat, p


def one_sample_t(values, mu: float, alpha: float = 0.05):
    values = list(values)
    n = len(values)
    if n < 2:
        raise TooFewValues("need at least 2 values")
    mean = sum(values) / n
    var = sum((x - mean) ** 2 for x in values) / (n - 1)
    if var == 0.0:
        raise ZeroVariance("sample variance is zero")
    t_stat = (mean - mu) / math.sqrt(var / n)
    df = n - 1
    crit = t_quantile(1.0 - alpha / 2.0, df)
    p = 2.0 * (1.0 - t_cdf(abs(t_stat), df))
    return t_stat, crit, p, abs(t_stat) > crit


def study_stats(matrix: AnswerMatrix, mu: float = 0.5,
                alpha: float = 0.05) -> StudyStats:
    """Full write-up of one answer matrix: per-question ANOVA plus a
    one-sample t-test of per-participant scores against chance."""
    mean_correct, mean_score = mean_scores(matrix)
    f_stat, f_p = one_way_anova(
        [matrix.column(j) for j in range(matrix.questions)]
    )
    scores = [sum(row) / matrix.questions for row in matrix.rows]
    t_stat, crit, t_p, reject = one_sample_t(scores, mu, alpha)
    return StudyStats(mean_correct, mean_score, f_stat, f_p,
                      t_stat, crit, t_p, reject)


@dataclass(frozen=True)
class GenMetrics:
    parse_rate: float
    validity_rate: float
    hallucination_rate: float
    root_multiplicity_rate: float
    n: int

    def to_dict(self):
        return {
            "parse_rate": self.parse_rate,
            "validity_rate": self.validity_rate,
            "hallucination_rate": self.hallucination_rate,
            "root_multiplicity_rate": self.root_multiplicity_rate,
            "n": self.n,
        }


def generation_metrics(backend, suite) -> GenMetrics:
    """Single-shot generation over (command, library) pairs, no retries and
    no repair, so raw model fault rates are visible."""
    from .generate import GenerateOptions, generate
    from .validate import FindingCode, RepairPolicy
    from .xml_io import ParseErrorKind

    suite = list(suite)
    if not suite:
        raise StatsError("empty suite")
    parses = valid = hallucinated = multi_root = 0
    for command, lib in suite:
        outcome = generate(
            backend, command, lib,
            GenerateOptions(retries=0, repair_policy=RepairPolicy.NONE),
        )
        if outcome.parse_error is not None:
            if outcome.parse_error.kind is ParseErrorKind.MULTIPLE_ROOT_CHILDREN:
                multi_root += 1
            continue
        parses += 1
        if outcome.report is not None:
            if outcome.report.ok:
                valid += 1
            if FindingCode.UNKNOWN_NODE in outcome.report.codes():
                hallucinated += 1
    n = len(suite)
    return GenMetrics(parses / n, valid / n, hallucinated / n, multi_root / n, n)
