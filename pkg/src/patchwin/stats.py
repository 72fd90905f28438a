"""Paired comparisons of per-image scores: paired t-test and exact sign test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st


class DegenerateTestError(ValueError):
    pass


def t_statistic(mean: float, pop_sd: float, n: int) -> float:
    """Paired t from summary values, with ``pop_sd`` using divisor ``n``.

    Equivalent to ``mean / (sample_sd / sqrt(n))``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    if pop_sd == 0:
        raise DegenerateTestError("degenerate (zero variance)")
    return mean * math.sqrt(n - 1) / pop_sd


def t_pvalue(t: float, dof: int) -> float:
    """Two-sided p-value of Student's t."""
    return float(2.0 * _st.t.sf(abs(t), dof))


def exact_sign_test(differences) -> float:
    """Two-sided exact sign test; zero differences are dropped."""
    d = np.asarray(differences, dtype=np.float64)
    pos = int(np.sum(d > 0))
    neg = int(np.sum(d < 0))
    n = pos + neg
    if n == 0:
        raise DegenerateTestError("all differences are ties")
    k = max(pos, neg)
    tail = sum(math.comb(n, i) for i in range(k, n + 1))
    return min(1.0, 2.0 * tail / 2**n)


@dataclass(frozen=True)
class PairedComparison:
    scores_a: np.ndarray
    scores_b: np.ndarray
    mean_diff: float
    pop_sd: float
    t_stat: float | None
    dof: int
    p_t: float | None
    positives: int
    negatives: int
    ties: int
    p_sign: float | None

    @property
    def differences(self) -> np.ndarray:
        return self.scores_a - self.scores_b

    @property
    def n(self) -> int:
        return len(self.scores_a)

    def summary(self, label: str = "") -> str:
        """One line in the usual ``(M=..., SD=...; t(dof)=..., p...)`` style."""
        head = f"{label} " if label else ""
        body = f"M={self.mean_diff:.5f}, SD={self.pop_sd:.5f}; "
        if self.t_stat is None:
            body += "t-test degenerate (zero variance)"
        else:
            body += f"t({self.dof})={self.t_stat:.4f}, {format_p(self.p_t)}"
        signs = f"signs +{self.positives}/-{self.negatives}/={self.ties}"
        sign_p = "sign test degenerate (all ties)" if self.p_sign is None else f"sign test {format_p(self.p_sign)}"
        return f"{head}({body}) {signs}, {sign_p}"


def format_p(p: float) -> str:
    for bound in (0.0001, 0.0002, 0.001, 0.01, 0.05):
        if p < bound:
            return f"p<{bound:g}".replace("0.", ".")
    return f"p={p:.4f}"


def paired_t_test(scores_a, scores_b, strict: bool = True) -> PairedComparison:
    """Compare two paired score vectors (``a - b``).

    With ``strict`` a zero-variance difference raises
    :class:`DegenerateTestError`; otherwise the t fields are left as None
    (and likewise the sign-test p when every pair ties).
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"score vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    n = len(a)
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    # np.std leaves rounding residue on constant input
    pop_sd = 0.0 if np.ptp(d) == 0 else float(d.std(ddof=0))
    try:
        t = t_statistic(mean, pop_sd, n)
        p_t = t_pvalue(t, n - 1)
    except DegenerateTestError:
        if strict:
            raise
        t = p_t = None
    pos, neg = int(np.sum(d > 0)), int(np.sum(d < 0))
    try:
        p_sign = exact_sign_test(d)
    except DegenerateTestError:
        if strict:
            raise
        p_sign = None
    return PairedComparison(a, b, mean, pop_sd, t, n - 1, p_t, pos, neg, n - pos - neg, p_sign)
