"""Estimators for the tree renormalization building blocks.

Covers minimal type-1 passage times to depth n (a branching random walk
minimum M_n), epsilon-good sub-boxes and their leaf witnesses, chained
highway exploration, spine probabilities (hybrid Monte Carlo times
closed form), upward backtrack events, and the composite good-box
estimate G1..G4.

All Monte Carlo here runs one independent clock field per trial, indexed
by (master_seed, trial).  Estimators accept a RandomField directly for
single-shot use; subclassed fields with overridden clocks fall back to a
pure-python search so forced configurations remain testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from . import _fast
from .field import ClockKind, RandomField
from .model import ModelParams, Topology, TreeSite
from .stats import WilsonInterval, wilson_interval

_U64 = np.uint64
_GOLD = _U64(_fast.GOLD)
_MIX_A = _U64(_fast.MIX_A)
_MIX_B = _U64(_fast.MIX_B)
_T1 = _U64(_fast.T1_TAG)
_TD = _U64(_fast.TD_TAG)
_TU = _U64(_fast.TU_TAG)

BRW_EXACT_MAX_N = 35
SUBBOX_MAX_K = 24
HIGHWAY_MAX_R = 6
HIGHWAY_MAX_CAP = 16
SPINE_MC_MAX_K = 6
DSTAR_MAX_K = 4


def _tree_params(d: int) -> ModelParams:
    return ModelParams(d=d, lam=1.0, rho=0.0, topology=Topology.TREE)


def _is_exact_field(field: RandomField) -> bool:
    return type(field) is RandomField


# ---------------------------------------------------------------------------
# vectorized keyed hashing (bit-compatible with the scalar derivations)


def _vmix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX_A
    z = (z ^ (z >> _U64(27))) * _MIX_B
    return z ^ (z >> _U64(31))


def _vchild_state(states: np.ndarray, label: int) -> np.ndarray:
    mult = _U64(((label + 1) * _fast.GOLD) & _fast.MASK64)
    return _vmix64(states ^ mult)


def _vexp(states: np.ndarray, tag: np.uint64, rate: float) -> np.ndarray:
    h = _vmix64(states ^ tag)
    return _fast.vexp_from_u64(h.ravel(), rate).reshape(h.shape)


# ---------------------------------------------------------------------------
# branching random walk minima


@dataclass(frozen=True)
class BrwStats:
    n: int
    trials: int
    mean_Mn: float
    sd_Mn: float
    ratio: float
    method: str


def gamma_star(d: int) -> float:
    """Asymptotic speed of M_n/n: the root in (0,1) of g - 1 - log g = log(d-1)."""
    if d < 3:
        raise ValueError("needs tree degree d >= 3")
    target = math.log(d - 1)
    return float(optimize.brentq(lambda g: g - 1.0 - math.log(g) - target, 1e-12, 1.0))


def _min_path_py(field: RandomField, site: TreeSite, n: int, first_nch: int,
                 first_lab: int, kind: ClockKind, partial: float,
                 incumbent: float) -> float:
    if n == 0:
        return min(partial, incumbent)
    d = field.params.d
    best = incumbent
    for j in range(first_nch):
        child = site * d + first_lab + j
        t = partial + field.tree_edge_clock(kind, child)
        if t >= best:
            continue
        best = _min_path_py(field, child, n - 1, d - 1, 0, kind, t, best)
    return best


def brw_min_exact(d: int, n: int, field: RandomField) -> float:
    """Exact minimal type-1 passage time from the root to depth n,
    branch-and-bound with a greedy-descent incumbent."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > BRW_EXACT_MAX_N:
        raise ValueError(
            f"n={n} exceeds the exact-search guard ({BRW_EXACT_MAX_N}); "
            "use brw_min_cloud for deeper targets")
    if n == 0:
        return 0.0
    if _is_exact_field(field):
        rs = field.tree_root_state()
        inc = _fast.greedy_path_time(_U64(rs), d, n, d, 0, _T1, 1.0)
        return float(_fast.min_path_time(_U64(rs), d, n, d, 0, _T1, 1.0, inc))
    return _min_path_py(field, 1, n, d, 0, ClockKind.T1, 0.0, math.inf)


def brw_min_cloud(d: int, n: int, W: int, field: RandomField) -> float:
    """Beam approximation of the depth-n minimum: keep the W lowest-time
    particles per generation.  Never below the exact minimum on the same
    field (and equal whenever W covers every leaf)."""
    if W < 1000:
        raise ValueError("beam width W must be at least 10^3")
    if n == 0:
        return 0.0
    states = np.array([field.tree_root_state()], dtype=np.uint64)
    times = np.zeros(1, dtype=np.float64)
    for depth in range(n):
        nch = d if depth == 0 else d - 1
        cs = np.concatenate([_vchild_state(states, j) for j in range(nch)])
        ct = np.concatenate([times + _vexp(_vchild_state(states, j), _T1, 1.0)
                             for j in range(nch)])
        if ct.shape[0] > W:
            keep = np.argpartition(ct, W)[:W]
            cs, ct = cs[keep], ct[keep]
        states, times = cs, ct
    return float(times.min())


def brw_stats(d: int, n: int, trials: int, master_seed: int,
              method: str = "exact", W: int = 100_000) -> BrwStats:
    """Monte Carlo summary of M_n over independent fields."""
    params = _tree_params(d)
    vals = np.empty(trials)
    for tr in range(trials):
        field = RandomField(params, master_seed, tr)
        if method == "exact":
            vals[tr] = brw_min_exact(d, n, field)
        elif method == "cloud":
            vals[tr] = brw_min_cloud(d, n, W, field)
        else:
            raise ValueError(f"unknown method {method!r}")
    label = "ExactPrunedDFS" if method == "exact" else f"TruncatedCloud(W={W})"
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1)) if trials > 1 else 0.0
    return BrwStats(n=n, trials=trials, mean_Mn=mean, sd_Mn=sd,
                    ratio=mean / n if n else 0.0, method=label)


# ---------------------------------------------------------------------------
# epsilon-good sub-boxes


@dataclass(frozen=True)
class SubBoxResult:
    k: int
    epsilon: float
    lam: float
    d: int
    trials: int
    p_good: float
    interval: WilsonInterval
    mean_H1_count_capped: float
    h1_cap: int


def subbox_is_good(field: RandomField, z: TreeSite, k: int, epsilon: float,
                   lam: Optional[float] = None, max_witnesses: int = 2,
                   h1_cap: int = 2) -> Tuple[bool, List[TreeSite]]:
    """Decide epsilon-goodness of the depth-k sub-box below z and return
    the witness leaves found (fast type-1 descent, slow downward type-2).

    z is treated as a generic interior vertex with d-1 children.  The
    downward check compares the rate-lam Erlang sum against
    (1-eps^2)k/lam, which makes the verdict independent of lam pathwise;
    lam defaults to the field's configured rate.
    """
    if k > SUBBOX_MAX_K:
        raise ValueError(f"k={k} exceeds the sub-box cost guard ({SUBBOX_MAX_K})")
    d = field.params.d
    if lam is None:
        lam = field.params.lam
    thr1 = (1.0 - epsilon) * k
    thr_d = (1.0 - epsilon * epsilon) * k / lam
    if _is_exact_field(field):
        zs = field.tree_site_state(z)
        wit_states = np.empty(max_witnesses, dtype=np.uint64)
        wit_labels = np.empty((max_witnesses, k), dtype=np.int64)
        n_h1, n_wit = _fast.subbox_scan(
            _U64(zs), d, k, thr1, thr_d, lam,
            max_witnesses, h1_cap, wit_states, wit_labels)
        leaves = []
        for w in range(n_wit):
            site = z
            for i in range(k):
                site = site * d + int(wit_labels[w, i])
            leaves.append(site)
        return n_wit >= 2, leaves
    witnesses: List[TreeSite] = []
    h1 = [0]
    # the downward clock is drawn at the requested rate, not the field's
    # configured one, so that the pathwise verdict matches the compiled
    # scan whenever the caller overrides lam
    fl = field.params.lam
    scale = fl / lam if fl > 0 else 1.0

    def walk(site, t1, td, depth):
        if len(witnesses) >= max_witnesses and h1[0] >= h1_cap:
            return
        for j in range(d - 1):
            child = site * d + j
            nt1 = t1 + field.tree_edge_clock(ClockKind.T1, child)
            if nt1 > thr1:
                continue
            ntd = td + field.tree_edge_clock(ClockKind.TD, child) * scale
            if depth + 1 == k:
                h1[0] += 1
                if ntd >= thr_d and len(witnesses) < max_witnesses:
                    witnesses.append(child)
                if len(witnesses) >= max_witnesses and h1[0] >= h1_cap:
                    return
            else:
                walk(child, nt1, ntd, depth + 1)

    walk(z, 0.0, 0.0, 0)
    return len(witnesses) >= 2, witnesses


def estimate_subbox_good_prob(k: int, epsilon: float, lam: float, d: int,
                              trials: int, master_seed: int = 0,
                              h1_cap: int = 64) -> SubBoxResult:
    params = ModelParams(d=d, lam=lam, rho=0.0, topology=Topology.TREE)
    good = 0
    h1_total = 0
    for tr in range(trials):
        field = RandomField(params, master_seed, tr)
        zs = field.tree_root_state()
        wit_states = np.empty(2, dtype=np.uint64)
        wit_labels = np.empty((2, k), dtype=np.int64)
        thr1 = (1.0 - epsilon) * k
        thr_d = (1.0 - epsilon * epsilon) * k / lam
        n_h1, n_wit = _fast.subbox_scan(_U64(zs), d, k, thr1, thr_d, lam,
                                        2, h1_cap, wit_states, wit_labels)
        good += n_wit >= 2
        h1_total += min(n_h1, h1_cap)
    iv = wilson_interval(good, trials)
    return SubBoxResult(k=k, epsilon=epsilon, lam=lam, d=d, trials=trials,
                        p_good=good / trials, interval=iv,
                        mean_H1_count_capped=h1_total / trials, h1_cap=h1_cap)


# ---------------------------------------------------------------------------
# highway chains


def highway_branching(k: int, epsilon: float, lam: float, d: int, r: int,
                      offspring_cap: int, field: RandomField,
                      population_guard: int = 1_000_000) -> int:
    """Population of depth-(k*r) sites reachable through r chained good
    sub-boxes, each contributing at most offspring_cap witness leaves.
    A capped lower bound for the highway count.
    """
    if r > HIGHWAY_MAX_R:
        raise ValueError(f"r={r} exceeds the chain-depth guard ({HIGHWAY_MAX_R})")
    if offspring_cap > HIGHWAY_MAX_CAP or offspring_cap < 2:
        raise ValueError(f"offspring_cap must be in [2, {HIGHWAY_MAX_CAP}]")
    thr1 = (1.0 - epsilon) * k
    thr_d = (1.0 - epsilon * epsilon) * k / lam
    if _is_exact_field(field):
        roots = [field.tree_root_state()]
        wit_states = np.empty(offspring_cap, dtype=np.uint64)
        wit_labels = np.empty((offspring_cap, k), dtype=np.int64)
        for _level in range(r):
            nxt: List[int] = []
            for st in roots:
                _, n_wit = _fast.subbox_scan(_U64(st), d, k, thr1, thr_d, lam,
                                             offspring_cap, offspring_cap,
                                             wit_states, wit_labels)
                if n_wit >= 2:
                    nxt.extend(int(wit_states[w]) for w in range(n_wit))
            if len(nxt) > population_guard:
                raise RuntimeError("highway population exceeded the guard")
            roots = nxt
            if not roots:
                break
        return len(roots)
    sites = [1]
    for _level in range(r):
        nxt_sites: List[TreeSite] = []
        for z in sites:
            ok, wits = subbox_is_good(field, z, k, epsilon, lam,
                                      max_witnesses=offspring_cap,
                                      h1_cap=offspring_cap)
            if ok:
                nxt_sites.extend(wits)
        if len(nxt_sites) > population_guard:
            raise RuntimeError("highway population exceeded the guard")
        sites = nxt_sites
        if not sites:
            break
    return len(sites)


# ---------------------------------------------------------------------------
# spines


@dataclass(frozen=True)
class SpineEstimate:
    k: int
    epsilon: float
    lam: float
    d: int
    trials: int
    p_type1_part: Optional[float]
    p_type1_interval: Optional[WilsonInterval]
    p_type2_part: float
    E: int
    p_spine: Optional[float]


def spine_edge_count(k: int, d: int) -> int:
    """Number of edges whose type-2 clocks must all exceed k^3 for a
    depth-k^2 spine: counted by walking the path site by site rather
    than trusting a formula.

    The spine's top site sees its parent edge plus d-2 off-spine child
    edges; each deeper non-terminal site sees d-2 off-spine child edges;
    the k^2 on-spine edges are checked downward.
    """
    m = k * k
    count = 0
    for i in range(m):
        count += (d - 1) if i == 0 else (d - 2)
    count += m
    return count


def spine_probability(k: int, epsilon: float, lam: float, d: int, trials: int,
                      master_seed: int = 0) -> SpineEstimate:
    """Probability that a highway endpoint extends to a spine: Monte Carlo
    for the fast-type-1 part times the closed form exp(-lam k^3 E) for the
    slow-type-2 part (each of the E incident edges independently exceeds
    k^3 with probability exp(-lam k^3))."""
    E = spine_edge_count(k, d)
    p2 = math.exp(-lam * k ** 3 * E)
    if trials == 0:
        return SpineEstimate(k=k, epsilon=epsilon, lam=lam, d=d, trials=0,
                             p_type1_part=None, p_type1_interval=None,
                             p_type2_part=p2, E=E, p_spine=None)
    if k > SPINE_MC_MAX_K:
        raise ValueError(
            f"k={k} exceeds the Monte Carlo guard ({SPINE_MC_MAX_K}); "
            "call with trials=0 for the closed-form part alone")
    params = ModelParams(d=d, lam=lam, rho=0.0, topology=Topology.TREE)
    n = k * k
    hits = 0
    thr = (1.0 - epsilon) * n
    for tr in range(trials):
        field = RandomField(params, master_seed, tr)
        rs = _U64(field.tree_root_state())
        inc = _fast.greedy_path_time(rs, d, n, d - 1, 0, _T1, 1.0)
        m = _fast.min_path_time(rs, d, n, d - 1, 0, _T1, 1.0, inc)
        hits += m <= thr
    iv = wilson_interval(hits, trials)
    p1 = hits / trials
    return SpineEstimate(k=k, epsilon=epsilon, lam=lam, d=d, trials=trials,
                         p_type1_part=p1, p_type1_interval=iv,
                         p_type2_part=p2, E=E, p_spine=p1 * p2)


# ---------------------------------------------------------------------------
# backtrack events


@dataclass(frozen=True)
class DstarEstimate:
    k: int
    lam: float
    d: int
    trials: int
    successes: int
    p: float
    interval: WilsonInterval


def dstar_probability(k: int, lam: float, d: int, trials: int,
                      master_seed: int = 0) -> DstarEstimate:
    """Probability that every upward type-2 passage from depth k^2 back to
    a site x costs at least 10k, with one marked child branch excluded as
    the highway/spine continuation."""
    if k > DSTAR_MAX_K:
        raise ValueError(f"k={k} exceeds the enumeration guard ({DSTAR_MAX_K})")
    params = ModelParams(d=d, lam=lam, rho=0.0, topology=Topology.TREE)
    n = k * k
    thr = 10.0 * k
    hits = 0
    for tr in range(trials):
        field = RandomField(params, master_seed, tr)
        rs = _U64(field.tree_root_state())
        # children labels 1..d-2 survive the exclusion of the marked branch
        m = _fast.min_path_time(rs, d, n, d - 2, 1, _TU, lam, thr)
        hits += m >= thr
    iv = wilson_interval(hits, trials)
    return DstarEstimate(k=k, lam=lam, d=d, trials=trials, successes=hits,
                         p=hits / trials, interval=iv)


# ---------------------------------------------------------------------------
# composite good boxes


@dataclass(frozen=True)
class GoodBoxReport:
    k: int
    r: int
    epsilon: float
    alpha: float
    lam: float
    rho: float
    d: int
    trials: int
    p_g1: float
    g1_interval: WilsonInterval
    p_g2_given_g1: float
    p_g3: float
    p_g4: float
    p_good: float
    box_size: int


def tree_ball_size(depth: int, d: int) -> int:
    """Number of vertices within the given depth of the root of a d-ary tree."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth == 0:
        return 1
    return 1 + d * ((d - 1) ** depth - 1) // (d - 2)


def good_box_probability(k: int, r: int, epsilon: float, alpha: float,
                         lam: float, rho: float, trials: int, d: int = 3,
                         master_seed: int = 0,
                         offspring_cap: int = 8) -> GoodBoxReport:
    """Factored estimate P(G1) * P(G2|G1) * P(G3) * P(G4) of a box being
    good.  G1 is Monte Carlo over highway chains; G2|G1 is the binomial
    chance that at least two of ~alpha^r endpoints carry spines; G3
    composes the single-site backtrack estimate over the two highways
    under an independence approximation; G4 is exact in closed form."""
    if not (1.0 < alpha < 2.0):
        raise ValueError("alpha must be in (1, 2)")
    params = ModelParams(d=d, lam=lam, rho=0.0, topology=Topology.TREE)
    need = alpha ** r
    g1_hits = 0
    for tr in range(trials):
        field = RandomField(params, master_seed, tr)
        count = highway_branching(k, epsilon, lam, d, r, offspring_cap, field)
        g1_hits += count > need
    g1_iv = wilson_interval(g1_hits, trials)
    p_g1 = g1_hits / trials

    sp = spine_probability(k, epsilon, lam, d, trials,
                           master_seed=master_seed + 0x5E1D)
    p_sp = sp.p_spine if sp.p_spine is not None else 0.0
    n_cand = max(2, math.ceil(need))
    p_g2 = 1.0 - (1.0 - p_sp) ** n_cand \
        - n_cand * p_sp * (1.0 - p_sp) ** (n_cand - 1)

    ds = dstar_probability(min(k, DSTAR_MAX_K), lam, d, trials,
                           master_seed=master_seed + 0xD57A)
    p_g3 = ds.p ** (2 * (k * r + 1))

    box = tree_ball_size(k * r + k * k, d)
    exponent = -rho * 3.0 * (k * r + k * k) * box
    p_g4 = math.exp(exponent) if exponent > -745.0 else 0.0

    return GoodBoxReport(k=k, r=r, epsilon=epsilon, alpha=alpha, lam=lam,
                         rho=rho, d=d, trials=trials, p_g1=p_g1,
                         g1_interval=g1_iv, p_g2_given_g1=p_g2, p_g3=p_g3,
                         p_g4=p_g4, p_good=p_g1 * p_g2 * p_g3 * p_g4,
                         box_size=box)
