"""Small statistics toolbox shared by the labs and the sweep harness.

Wilson score intervals for all proportion estimates, Poisson Chernoff
bound evaluators, and thin wrappers over scipy for KS tests, proportion
comparison and least-squares fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class WilsonInterval:
    successes: int
    trials: int
    confidence: float
    lower: float
    upper: float

    @property
    def point(self) -> float:
        return self.successes / self.trials

    def separated_below(self, other: "WilsonInterval") -> bool:
        """True if this interval lies strictly below the other one."""
        return self.upper < other.lower


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> WilsonInterval:
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not (0 <= successes <= trials):
        raise ValueError("successes out of range")
    if not (0.0 < confidence < 1.0):
        raise ValueError("confidence must be in (0, 1)")
    z = sps.norm.ppf(0.5 + confidence / 2.0)
    n = trials
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    return WilsonInterval(successes, trials, confidence,
                          max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class PoissonBounds:
    """Chernoff bounds on Poisson(mu) tails.

    lower_tail bounds P(P <= mu(1-eps)) by exp(-mu eps^2 / 2);
    upper_tail bounds P(P >= mu(1+eps)) by exp(-mu eps^2 / 4) for eps in (0,1);
    large_dev bounds P(P >= C mu) by inf_theta exp(-mu (1 - e^theta + theta C)),
    the infimum taken over a theta grid.
    """

    mu: float
    epsilon: Optional[float] = None
    C: Optional[float] = None
    lower_tail: Optional[float] = None
    upper_tail: Optional[float] = None
    large_dev: Optional[float] = None


def poisson_chernoff_bounds(mu: float, epsilon: Optional[float] = None,
                            C: Optional[float] = None,
                            theta_grid: Optional[np.ndarray] = None) -> PoissonBounds:
    if mu <= 0:
        raise ValueError("mu must be positive")
    lower = upper = large = None
    if epsilon is not None:
        if not (0.0 < epsilon < 1.0):
            raise ValueError("epsilon must be in (0, 1)")
        lower = math.exp(-mu * epsilon * epsilon / 2.0)
        upper = math.exp(-mu * epsilon * epsilon / 4.0)
    if C is not None:
        if C <= 0:
            raise ValueError("C must be positive")
        if theta_grid is None:
            theta_grid = np.linspace(1e-4, max(2.0, 3.0 * math.log(max(C, 1.1))), 4000)
        exponents = -mu * (1.0 - np.exp(theta_grid) + theta_grid * C)
        large = float(np.exp(exponents.min()))
    if epsilon is None and C is None:
        raise ValueError("provide epsilon and/or C")
    return PoissonBounds(mu=mu, epsilon=epsilon, C=C,
                         lower_tail=lower, upper_tail=upper, large_dev=large)


def ks_exponential(samples: np.ndarray, rate: float):
    """KS statistic and p-value of samples against Exp(rate)."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    res = sps.kstest(samples, "expon", args=(0, 1.0 / rate))
    return res.statistic, res.pvalue


def two_proportion_z(s1: int, n1: int, s2: int, n2: int):
    """Two-sided pooled z-test for equality of two proportions."""
    p1, p2 = s1 / n1, s2 / n2
    pool = (s1 + s2) / (n1 + n2)
    se = math.sqrt(pool * (1 - pool) * (1 / n1 + 1 / n2))
    if se == 0.0:
        return 0.0, 1.0
    z = (p1 - p2) / se
    return z, 2.0 * sps.norm.sf(abs(z))


def linear_fit(x, y):
    """Least-squares line fit; returns (slope, intercept, r_value)."""
    res = sps.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return res.slope, res.intercept, res.rvalue
