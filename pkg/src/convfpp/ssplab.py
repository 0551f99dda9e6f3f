"""Red/blue competing-growth percolation and its coupling to the
two-type process.

The red process grows from the origin by first-passage dynamics; seeds
scattered in the box turn blue when red touches them, blue spreads
instantaneously through connected seed clusters and at a fixed slow
cost kappa elsewhere, and colors are permanent.  Seeds come either
from independent Bernoulli labels or from the shared clock field of a
resample-mode lattice trial, in which case a seed marks exactly the
sites where the type-1 spread inequality can fail.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from . import _fast
from ._cores import ssp_core
from .engine import Caps, InternalInvariantError, Verdict, run_trial
from .field import RandomField
from .model import ClockMode, ConfigurationError, ModelParams, Topology
from .stats import WilsonInterval, wilson_interval
from .treelab import _vexp, _vmix64

_U64 = np.uint64
_T1 = _U64(_fast.T1_TAG)
_T2 = _U64(_fast.T2_TAG)
_T3 = _U64(_fast.T3_TAG)
_CONV = _U64(_fast.CONV_TAG)
_SEED = _U64(_fast.SEED_TAG)
_LAT = _U64(_fast.LAT_TAG)
_MIX_B = _U64(_fast.MIX_B)


# ---------------------------------------------------------------------------
# parameters and seed fields


class SeedSource(enum.Enum):
    BERNOULLI = "bernoulli"
    COUPLED = "coupled"


class RedClockSource(enum.Enum):
    EXP_CAPPED = "exp-capped"
    UNIT = "unit"


@dataclass(frozen=True)
class SspParams:
    """kappa is the uniform blue passage value, so every blue edge cost
    is at most kappa; red edges carry min(t1, C) clocks in EXP_CAPPED
    mode and the constant 1 in UNIT mode."""

    kappa: float
    seed_source: SeedSource = SeedSource.BERNOULLI
    red_clock_source: RedClockSource = RedClockSource.EXP_CAPPED
    p: Optional[float] = None
    C: Optional[float] = None
    lam: Optional[float] = None
    rho: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kappa <= 1.0:
            raise ConfigurationError("kappa must exceed 1")
        if self.seed_source is SeedSource.BERNOULLI:
            if self.p is None or not (0.0 <= self.p < 1.0):
                raise ConfigurationError("Bernoulli seeds need p in [0, 1)")
        else:
            if self.C is None or self.lam is None or self.rho is None:
                raise ConfigurationError("coupled seeds need C, lam and rho")
        if self.red_clock_source is RedClockSource.EXP_CAPPED:
            if self.C is None or self.C <= 0:
                raise ConfigurationError("capped red clocks need C > 0")


@dataclass(frozen=True)
class SeedField:
    """Per-site seed indicators on the box [-R, R]^d plus the
    parameters that generated them."""

    R: int
    d: int
    seeds: np.ndarray
    p: Optional[float] = None
    C: Optional[float] = None
    lam: Optional[float] = None
    rho: Optional[float] = None

    @property
    def density(self) -> float:
        return float(self.seeds.mean())

    @property
    def expected_density(self) -> float:
        if self.p is not None:
            return self.p
        return seed_density(self.C, self.lam, self.rho, self.d)


def seed_density(C: float, lam: float, rho: float, d: int) -> float:
    """Closed-form marginal seed probability: the complement of all 2d
    incident t1 clocks below C, all 4d type-2 clocks above C^2, and the
    conversion clock above C^2."""
    return 1.0 - (1.0 - math.exp(-C)) ** (2 * d) \
        * math.exp(-4 * d * lam * C * C) * math.exp(-rho * C * C)


def _enlarged_states(field: RandomField, R: int, d: int) -> np.ndarray:
    """Site chain states over [-R-1, R]^d, folded coordinate by
    coordinate exactly as RandomField.lattice_site_state does."""
    cu = np.arange(-R - 1, R + 1, dtype=np.int64).astype(np.uint64) * _MIX_B
    s = np.asarray(np.uint64((field.base ^ _fast.LAT_TAG) & _fast.MASK64))
    for _ in range(d):
        s = _vmix64(s[..., None] ^ cu)
    return s


def _edge_axis_tag(axis: int) -> np.uint64:
    return _U64(((axis + 1) * _fast.AXIS_C) & _fast.MASK64)


def _incident_extrema(states: np.ndarray, d: int, tag: np.uint64, rate: float,
                      want_max: bool) -> np.ndarray:
    """Max or min over the 2d incident edge clocks of each box site.

    `states` is the enlarged [-R-1, R]^d grid; the box slice drops the
    first index of every axis, and the edge toward -e_a is keyed by the
    shifted site."""
    inner = (slice(1, None),) * d
    out = None
    for axis in range(d):
        es = _vmix64(states ^ _edge_axis_tag(axis))
        clocks = _vexp(es, tag, rate)
        lo = [slice(1, None)] * d
        lo[axis] = slice(0, -1)
        for grid in (clocks[inner], clocks[tuple(lo)]):
            if out is None:
                out = grid.copy()
            elif want_max:
                np.maximum(out, grid, out=out)
            else:
                np.minimum(out, grid, out=out)
    return out


def label_type2_seeds(C: float, lam: float, rho: float, R: int,
                      field: RandomField) -> SeedField:
    """Mark the sites where fast type-1 spread is not guaranteed.

    A site is a seed iff some incident type-1 clock is at least C, or
    some incident type-2 or resample clock is below C^2, or its
    conversion clock is below C^2."""
    if C <= 0:
        raise ConfigurationError("C must be positive")
    d = field.params.d
    states = _enlarged_states(field, R, d)
    inner = (slice(1, None),) * d
    seeds = _incident_extrema(states, d, _T1, 1.0, want_max=True) >= C
    C2 = C * C
    if lam > 0:
        seeds |= _incident_extrema(states, d, _T2, lam, want_max=False) < C2
        seeds |= _incident_extrema(states, d, _T3, lam, want_max=False) < C2
    if rho > 0:
        seeds |= _vexp(states[inner], _CONV, rho) < C2
    return SeedField(R=R, d=d, seeds=seeds, C=C, lam=lam, rho=rho)


def bernoulli_seeds(p: float, R: int, field: RandomField) -> SeedField:
    """Independent keyed Bernoulli(p) seed labels per site."""
    if not (0.0 <= p < 1.0):
        raise ConfigurationError("p must be in [0, 1)")
    d = field.params.d
    states = _enlarged_states(field, R, d)[(slice(1, None),) * d]
    u = (_vmix64(states ^ _SEED).astype(np.float64) + 0.5) * _fast.U64_INV
    return SeedField(R=R, d=d, seeds=u < p, p=p)


# ---------------------------------------------------------------------------
# the coloring dynamics


class SspVerdict(enum.Enum):
    RED_REACHED_BOUNDARY = "red-reached-boundary"
    RED_DIED = "red-died"


@dataclass(frozen=True)
class SspState:
    """Final coloring of one run: color is 0 uncolored, 1 red, 2 blue
    on the box grid, T the first-coloring times (colors are permanent
    and T is set exactly once per site)."""

    params: SspParams
    R: int
    d: int
    color: np.ndarray
    T: np.ndarray
    seed_field: SeedField
    origin_seed: bool
    events: int

    @property
    def verdict(self) -> SspVerdict:
        if self.red_reached_boundary:
            return SspVerdict.RED_REACHED_BOUNDARY
        return SspVerdict.RED_DIED

    @property
    def _boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.color.shape, dtype=bool)
        for axis in range(self.d):
            face = [slice(None)] * self.d
            face[axis] = 0
            mask[tuple(face)] = True
            face[axis] = -1
            mask[tuple(face)] = True
        return mask

    @property
    def red_reached_boundary(self) -> bool:
        return bool(((self.color == 1) & self._boundary_mask).any())

    @property
    def blue_touched_boundary(self) -> bool:
        return bool(((self.color == 2) & self._boundary_mask).any())

    @property
    def red_survival(self) -> bool:
        """Red touches the boundary while every blue cluster stays
        strictly interior."""
        return self.red_reached_boundary and not self.blue_touched_boundary


def _neighbor_table(d: int, R: int) -> np.ndarray:
    """(n, 2d) flat-index neighbor table for the box, -1 outside; the
    directed-edge column order is +e_0, -e_0, +e_1, -e_1, ..."""
    side = 2 * R + 1
    shape = (side,) * d
    n = side ** d
    idx = np.arange(n, dtype=np.int64).reshape(shape)
    nbr = np.full((n, 2 * d), -1, dtype=np.int64)
    for axis in range(d):
        hi = [slice(None)] * d
        lo = [slice(None)] * d
        hi[axis] = slice(0, -1)
        lo[axis] = slice(1, None)
        nbr[idx[tuple(hi)].ravel(), 2 * axis] = idx[tuple(lo)].ravel()
        nbr[idx[tuple(lo)].ravel(), 2 * axis + 1] = idx[tuple(hi)].ravel()
    return nbr


def _red_clocks(params: SspParams, R: int, d: int,
                field: RandomField) -> np.ndarray:
    """Directed red passage values aligned with the neighbor table."""
    side = 2 * R + 1
    n = side ** d
    xr = np.full((n, 2 * d), np.inf)
    if params.red_clock_source is RedClockSource.UNIT:
        xr[:] = 1.0
        return xr
    states = _enlarged_states(field, R, d)
    inner = (slice(1, None),) * d
    for axis in range(d):
        es = _vmix64(states ^ _edge_axis_tag(axis))
        t1 = np.minimum(_vexp(es, _T1, 1.0), params.C)
        xr[:, 2 * axis] = t1[inner].ravel()
        lo = [slice(1, None)] * d
        lo[axis] = slice(0, -1)
        xr[:, 2 * axis + 1] = t1[tuple(lo)].ravel()
    return xr


def _seed_clusters(seeds: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat cluster labels plus a CSR index of cluster members, so the
    core can color a whole seed cluster in one sweep."""
    labels, ncl = ndimage.label(seeds)
    flat = labels.ravel().astype(np.int64)
    order = np.argsort(flat, kind="stable").astype(np.int64)
    counts = np.bincount(flat, minlength=ncl + 1)
    cstart = np.zeros(ncl + 2, dtype=np.int64)
    np.cumsum(counts, out=cstart[1:ncl + 2])
    return flat, order, cstart


def run_ssp(params: SspParams, R: int, field: RandomField,
            seed_field: Optional[SeedField] = None) -> SspState:
    """Run the coloring dynamics to exhaustion on the box [-R, R]^d.

    The origin starts red at time 0; a ring of edge (u, v) at time
    T(u) + X_{color(u)}(u, v) is suppressed when v is already colored,
    otherwise v turns red (red source, non-seed target) or blue (seed
    target or blue source), and a blue seed colors its whole cluster
    instantly.  The run stops when red first touches the boundary, the
    same survived-to-target rule as the trial engine, so blue clusters
    are judged at that stopping time.  A seed at the origin skips the
    dynamics entirely and is flagged on the returned state."""
    if R <= 0:
        raise ConfigurationError("R must be positive")
    d = field.params.d
    if seed_field is None:
        if params.seed_source is SeedSource.BERNOULLI:
            seed_field = bernoulli_seeds(params.p, R, field)
        else:
            seed_field = label_type2_seeds(params.C, params.lam, params.rho,
                                           R, field)
    side = 2 * R + 1
    shape = (side,) * d
    origin_idx = (side ** d) // 2
    seeds_flat = seed_field.seeds.ravel()
    color = np.zeros(side ** d, dtype=np.uint8)
    T = np.full(side ** d, np.inf)
    if seeds_flat[origin_idx]:
        color[origin_idx] = 2
        T[origin_idx] = 0.0
        return SspState(params=params, R=R, d=d,
                        color=color.reshape(shape), T=T.reshape(shape),
                        seed_field=seed_field, origin_seed=True, events=0)
    nbr = _neighbor_table(d, R)
    xr = _red_clocks(params, R, d, field)
    clus, corder, cstart = _seed_clusters(seed_field.seeds)
    check_cap = (params.seed_source is SeedSource.COUPLED
                 and params.red_clock_source is RedClockSource.EXP_CAPPED)
    cap_value = params.C if check_cap else -1.0
    boundary = np.zeros(shape, dtype=bool)
    for axis in range(d):
        face = [slice(None)] * d
        face[axis] = 0
        boundary[tuple(face)] = True
        face[axis] = -1
        boundary[tuple(face)] = True
    color, T, events, bad_cap = ssp_core(
        nbr, xr, params.kappa, seeds_flat, clus, corder, cstart,
        np.int64(origin_idx), cap_value, boundary.ravel())
    if bad_cap:
        raise InternalInvariantError(
            f"{bad_cap} red rings scheduled across at-cap edges whose "
            "endpoints are not both seeds")
    return SspState(params=params, R=R, d=d,
                    color=color.reshape(shape), T=T.reshape(shape),
                    seed_field=seed_field, origin_seed=False,
                    events=int(events))


# ---------------------------------------------------------------------------
# red-survival curves


@dataclass(frozen=True)
class RedSurvivalPoint:
    p: float
    trials: int
    survived: int
    origin_seed_trials: int
    interval: WilsonInterval

    @property
    def fraction(self) -> float:
        return self.survived / self.trials


@dataclass(frozen=True)
class RedSurvivalCurve:
    """Red-survival fraction per seed density, with a through-origin
    fit of the failure probability 1 - fraction = c_hat * p."""

    kappa: float
    R: int
    d: int
    points: List[RedSurvivalPoint]
    c_hat: float
    c_interval: Tuple[float, float]


def estimate_red_survival(kappa: float, R: int, trials: int,
                          p_grid: Tuple[float, ...] = (1e-4, 1e-3, 1e-2),
                          d: int = 2, C: float = 3.0,
                          master_seed: int = 0) -> RedSurvivalCurve:
    """Sweep Bernoulli seed densities and fit the linear failure rate.

    Trials whose origin lands on a seed are excluded from the survival
    denominator and reported per point."""
    if trials <= 0:
        raise ConfigurationError("trials must be positive")
    base_params = ModelParams(d=d, lam=1.0, rho=0.0, topology=Topology.LATTICE)
    points = []
    for j, p in enumerate(sorted(p_grid)):
        ssp = SspParams(kappa=kappa, seed_source=SeedSource.BERNOULLI,
                        red_clock_source=RedClockSource.EXP_CAPPED, p=p, C=C)
        survived = 0
        origin_seed = 0
        done = 0
        i = 0
        while done < trials:
            field = RandomField(base_params, master_seed,
                                (j << 32) | i)
            i += 1
            state = run_ssp(ssp, R, field)
            if state.origin_seed:
                origin_seed += 1
                continue
            survived += state.red_survival
            done += 1
        points.append(RedSurvivalPoint(
            p=p, trials=trials, survived=survived,
            origin_seed_trials=origin_seed,
            interval=wilson_interval(survived, trials)))
    ps = np.array([pt.p for pt in points])
    fail = np.array([1.0 - pt.fraction for pt in points])
    denom = float((ps * ps).sum())
    c_hat = float((ps * fail).sum() / denom)
    c_lo = float((ps * np.array([1.0 - pt.interval.upper for pt in points])).sum() / denom)
    c_hi = float((ps * np.array([1.0 - pt.interval.lower for pt in points])).sum() / denom)
    return RedSurvivalCurve(kappa=kappa, R=R, d=d, points=points,
                            c_hat=c_hat, c_interval=(c_lo, c_hi))


# ---------------------------------------------------------------------------
# coupling with the two-type process


@dataclass(frozen=True)
class CouplingReport:
    """Per-trial verification that non-seed sites satisfy the fast
    type-1 spread inequality, and that zero-seed boxes always carry
    type 1 to the boundary under resample-mode dynamics."""

    C: float
    lam: float
    rho: float
    R: int
    trials: int
    sites_checked: int
    sites_holding: int
    zero_seed_trials: int
    zero_seed_survived: int

    @property
    def all_hold(self) -> bool:
        return self.sites_holding == self.sites_checked


def spread_inequality_holds(C: float, lam: float, rho: float, R: int,
                            field: RandomField) -> Tuple[np.ndarray, np.ndarray]:
    """(non_seed_mask, holds_mask) over the box: a site satisfies the
    inequality when its largest incident type-1 clock is below the
    smallest of its incident type-2 and resample clocks and its
    conversion clock."""
    d = field.params.d
    seeds = label_type2_seeds(C, lam, rho, R, field).seeds
    states = _enlarged_states(field, R, d)
    inner = (slice(1, None),) * d
    max_t1 = _incident_extrema(states, d, _T1, 1.0, want_max=True)
    bound = np.full_like(max_t1, np.inf)
    if lam > 0:
        np.minimum(bound, _incident_extrema(states, d, _T2, lam, False), out=bound)
        np.minimum(bound, _incident_extrema(states, d, _T3, lam, False), out=bound)
    if rho > 0:
        np.minimum(bound, _vexp(states[inner], _CONV, rho), out=bound)
    return ~seeds, max_t1 < bound


def coupling_consistency(C: float, lam: float, rho: float, R: int,
                         trials: int, master_seed: int = 0,
                         max_sites_per_trial: Optional[int] = None,
                         caps: Optional[Caps] = None) -> CouplingReport:
    """Check the seed-complement inequality and zero-seed survival.

    Each trial shares one clock field between the seed labeling and a
    resample-mode lattice trial.  The inequality is definitional for
    C >= 1, so any miss is a bug detector; on trials whose box holds no
    seeds the type-1 process must reach the boundary."""
    if trials <= 0:
        raise ConfigurationError("trials must be positive")
    params = ModelParams(d=2, lam=lam, rho=rho, topology=Topology.LATTICE,
                         clock_mode=ClockMode.RESAMPLE)
    if caps is None:
        caps = Caps()
    checked = holding = 0
    zero_seed = zero_survived = 0
    rng = np.random.default_rng(master_seed)
    for i in range(trials):
        field = RandomField(params, master_seed, i)
        non_seed, holds = spread_inequality_holds(C, lam, rho, R, field)
        idx = np.flatnonzero(non_seed.ravel())
        if max_sites_per_trial is not None and idx.size > max_sites_per_trial:
            idx = rng.choice(idx, size=max_sites_per_trial, replace=False)
        checked += idx.size
        holding += int(holds.ravel()[idx].sum())
        if non_seed.all():
            zero_seed += 1
            out = run_trial(params, field, R, caps)
            zero_survived += out.verdict is Verdict.SURVIVED
    return CouplingReport(C=C, lam=lam, rho=rho, R=R, trials=trials,
                          sites_checked=checked, sites_holding=holding,
                          zero_seed_trials=zero_seed,
                          zero_seed_survived=zero_survived)
