"""
oracles.py
==========
Closed-form laws of the model, as pure deterministic functions, plus the
small statistical toolkit (KS wrapper, Monte Carlo Poisson count test,
binomial confidence intervals) used to compare simulations against them.

All rate-path arguments follow the package clock convention documented in
`particle`: a population in medium eta with coefficient b has rate path
lambda(t) = b * eta(t), and the single-ancestor extinction law is
I/(1+I) with I the integral of lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import stats as sps

from .errors import InputError
from .particle import MassPath

RatePath = Union[float, MassPath]


def _integral(rate: RatePath, a: float, b: float) -> float:
    if isinstance(rate, MassPath):
        return rate.integral(a, b)
    return float(rate) * (b - a)


def _value_at(rate: RatePath, t: float) -> float:
    if isinstance(rate, MassPath):
        return rate.value_at(t)
    return float(rate)


def oracle_extinction_prob(rate: RatePath, t: float) -> float:
    """P{single-ancestor population extinct by t} = I/(1+I), I = int rate."""
    if t < 0:
        raise InputError("time must be >= 0")
    total = _integral(rate, 0.0, t)
    return total / (1.0 + total)


def oracle_mrca_survival(rate: RatePath, t: float, h: float) -> float:
    """P{neighbor MRCA height >= h} at level t in the quenched medium."""
    if not 0.0 <= h <= t:
        raise InputError("need 0 <= h <= t")
    i0 = _integral(rate, 0.0, t)
    if i0 <= 0:
        raise InputError("medium integral vanishes on [0, t]")
    ih = _integral(rate, h, t)
    return (ih / (1.0 + ih)) * ((1.0 + i0) / i0)


def oracle_mrca_cdf(rate: RatePath, t: float, h: float) -> float:
    return 1.0 - oracle_mrca_survival(rate, t, h)


def oracle_mrca_density(rate: RatePath, t: float, h: float) -> float:
    i0 = _integral(rate, 0.0, t)
    ih = _integral(rate, h, t)
    return _value_at(rate, h) / (1.0 + ih) ** 2 * (1.0 + i0) / i0


def oracle_reactant_intensity(X: RatePath, y_t: float, t: float,
                              h1: float, h2: float) -> float:
    """Expected number of level-t points with MRCA height in (h1, h2],
    over the full index range [0, Y_t], in the quenched medium X."""
    if not 0.0 <= h1 <= h2 <= t:
        raise InputError("need 0 <= h1 <= h2 <= t")
    if h2 >= t and h2 > h1:
        raise InputError("the intensity is not integrable up to the level")
    if h1 == h2:
        return 0.0
    i1 = _integral(X, h1, t)
    i2 = _integral(X, h2, t)
    if i1 <= 0 or i2 <= 0:
        raise InputError("medium integral vanishes on the interval")
    return y_t * (1.0 / i2 - 1.0 / i1)


def oracle_brownian_intensity(x_t: float, t: float, h1: float, h2: float) -> float:
    """Constant-medium counterpart: x_t * (1/(t-h2) - 1/(t-h1))."""
    if not 0.0 <= h1 <= h2 <= t:
        raise InputError("need 0 <= h1 <= h2 <= t")
    if h2 >= t and h2 > h1:
        raise InputError("the intensity is not integrable up to the level")
    if h1 == h2:
        return 0.0
    return x_t * (1.0 / (t - h2) - 1.0 / (t - h1))


def hitting_probability(b1: float, b2: float, x0: float, y0: float) -> float:
    """P{reactant mass absorbs before catalyst mass} for the SDE pair."""
    return (4.0 * b1 / b2 * y0 / x0 ** 2 + 1.0) ** -0.5


def feller_extinction_cdf(x0: float, t: float, b1: float = 1.0) -> float:
    """P{the square-root diffusion from x0 is absorbed by t}."""
    if t <= 0:
        return 0.0
    return math.exp(-2.0 * x0 / (b1 * t))


def stretch_map(x: RatePath, t: float, h: float) -> float:
    """Backward medium integral: the height map sending depth h below t in
    the quenched tree to the matching depth in the constant-medium tree."""
    if not 0.0 <= h <= t:
        raise InputError("need 0 <= h <= t")
    return _integral(x, t - h, t)


def stretch_map_inverse(x: RatePath, t: float, w: float,
                        tol: float = 1e-12) -> float:
    """Inverse of `stretch_map` in h, by bisection."""
    total = stretch_map(x, t, t)
    if not 0.0 <= w <= total + tol:
        raise InputError("value outside the stretch range")
    lo, hi = 0.0, t
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stretch_map(x, t, mid) < w:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def laplace_branching(y: float, lam: float, rate: RatePath, t: float) -> float:
    """Laplace transform of the branching-diffusion mass at time t started
    from y, with time-dependent rate path (noise variance 2*rate*mass)."""
    if lam < 0:
        raise InputError("Laplace argument must be >= 0")
    total = _integral(rate, 0.0, t)
    return math.exp(-y * lam / (1.0 + lam * total))


# ---------------------------------------------------------------------- #
# Statistical machinery                                                   #
# ---------------------------------------------------------------------- #

def ks_test(sample: Sequence[float], cdf: Callable[[float], float]) -> tuple[float, float]:
    """One-sample KS statistic and p-value against a callable CDF."""
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise InputError("empty sample")
    res = sps.kstest(arr, np.vectorize(cdf))
    return float(res.statistic), float(res.pvalue)


def two_sample_ks(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    res = sps.ks_2samp(np.asarray(a, float), np.asarray(b, float))
    return float(res.statistic), float(res.pvalue)


def poisson_count_test(counts: Sequence[float], means: Union[float, Sequence[float]],
                       seed: int = 0, n_sim: int = 4000) -> float:
    """Monte Carlo p-value for 'counts are Poisson with the given means'.

    The statistic combines the mean discrepancy and the dispersion
    (chi-square) against simulated Poisson nulls with identical means, so
    it is calibrated even when individual means are small or unequal.
    """
    obs = np.asarray(counts, dtype=float)
    m = np.broadcast_to(np.asarray(means, dtype=float), obs.shape).copy()
    if obs.size == 0:
        raise InputError("empty count vector")
    if np.any(m <= 0):
        raise InputError("Poisson means must be positive")

    def stat(c: np.ndarray) -> float:
        return float(np.sum((c - m) ** 2 / m))

    t_obs = stat(obs)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sims = rng.poisson(m, size=(n_sim,) + m.shape).astype(float)
    t_null = np.sum((sims - m) ** 2 / m, axis=tuple(range(1, sims.ndim)))
    # two-sided in dispersion: too regular is as suspicious as too wild
    hi = float(np.mean(t_null >= t_obs))
    lo = float(np.mean(t_null <= t_obs))
    return max(min(2.0 * min(hi, lo), 1.0), 1.0 / n_sim)


def binned_chi2_mc(observed: Sequence[float], expected: Sequence[float],
                   seed: int = 0, n_sim: int = 4000) -> float:
    """Monte Carlo chi-square for Poisson-binned counts versus expected."""
    return poisson_count_test(observed, expected, seed=seed, n_sim=n_sim)


def two_sample_counts_chi2(a: Sequence[int], b: Sequence[int],
                           min_expected: float = 5.0) -> float:
    """Two-sample homogeneity test for small nonnegative integer counts.

    Bins the union of values, pools sparse tail bins, and runs the standard
    contingency chi-square.
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    if a.size == 0 or b.size == 0:
        raise InputError("empty sample")
    top = int(max(a.max(), b.max()))
    ca = np.bincount(a, minlength=top + 1).astype(float)
    cb = np.bincount(b, minlength=top + 1).astype(float)
    # greedy left-to-right pooling so every bin carries enough mass
    bins_a, bins_b = [], []
    acc_a = acc_b = 0.0
    for va, vb in zip(ca, cb):
        acc_a += va
        acc_b += vb
        if acc_a + acc_b >= 2 * min_expected:
            bins_a.append(acc_a)
            bins_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a + acc_b > 0 and bins_a:
        bins_a[-1] += acc_a
        bins_b[-1] += acc_b
    if len(bins_a) < 2:
        return 1.0
    res = sps.chi2_contingency(np.vstack([bins_a, bins_b]))
    return float(res.pvalue)


def mean_confidence(sample: Sequence[float]) -> tuple[float, float]:
    """Sample mean and its standard error."""
    arr = np.asarray(sample, dtype=float)
    if arr.size < 2:
        raise InputError("sample too small")
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


@dataclass
class OracleReport:
    """Self-describing outcome of one verification check."""

    name: str
    law: str
    statistic: float
    target: float | str
    test: str
    p_value: float | None
    alpha_or_tol: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "law": self.law,
            "statistic": self.statistic,
            "target": self.target,
            "test": self.test,
            "p_value": self.p_value,
            "alpha_or_tol": self.alpha_or_tol,
            "passed": bool(self.passed),
            "details": self.details,
        }
        return out

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        pv = "-" if self.p_value is None else f"{self.p_value:.4f}"
        return (f"[{flag}] {self.name}: stat={self.statistic:.6g} "
                f"target={self.target} test={self.test} p={pv}")
