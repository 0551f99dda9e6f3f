"""Compiled event-loop cores for single trials.

These mirror engine.py exactly (same clock derivation, same tie-break,
same cap-check ordering) but run on packed int64 site ids with typed
dictionaries and array-backed binary heaps, which is what makes deep
targets and large boxes affordable on one core.  Parity with the
reference engine is enforced by tests.

Tree ids must fit in int64 (depth * log2(d) <= 62); sites strictly below
the target depth are never scheduled for type 2 beyond it because any
such subtree hangs below a type-2 site at the target depth and cannot
change the verdict.  Lattice sites are packed as mixed-radix codes in
the centered box of sup-norm radius R (the survival target).
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.typed import Dict

from ._fast import (
    CONV_TAG,
    SEMI_TAG,
    T1_TAG,
    T2_TAG,
    T3_TAG,
    TD_TAG,
    TU_TAG,
    child_state,
    exp_from_u64,
    lattice_edge_state,
    lattice_site_state,
    mix64,
    state_hash,
    tree_root_state,
    u64_to_unit,
)

# verdict codes
SURVIVED = 0
EXTINCT = 1
CAPPED = 2

# event kinds, ordered for the time tie-break
K_CONV = 0
K_ARR2 = 1
K_ARR1 = 2

_SRC_MASK = (1 << 56) - 1


@njit(cache=True, inline="always")
def _ev_less(t1, m1, g1, t2, m2, g2):
    if t1 != t2:
        return t1 < t2
    k1 = m1 >> 56
    k2 = m2 >> 56
    if k1 != k2:
        return k1 < k2
    return g1 < g2


@njit(cache=True)
def _heap_push(ht, hg, hm, hs, hn, t, g, m, s):
    i = hn
    ht[i] = t
    hg[i] = g
    hm[i] = m
    hs[i] = s
    while i > 0:
        p = (i - 1) >> 1
        if _ev_less(ht[i], hm[i], hg[i], ht[p], hm[p], hg[p]):
            ht[i], ht[p] = ht[p], ht[i]
            hg[i], hg[p] = hg[p], hg[i]
            hm[i], hm[p] = hm[p], hm[i]
            hs[i], hs[p] = hs[p], hs[i]
            i = p
        else:
            break
    return hn + 1


@njit(cache=True)
def _heap_pop(ht, hg, hm, hs, hn):
    """Remove the root; the caller reads ht[0]/hg[0]/hm[0]/hs[0] first."""
    n = hn - 1
    ht[0] = ht[n]
    hg[0] = hg[n]
    hm[0] = hm[n]
    hs[0] = hs[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        r = l + 1
        c = l
        if r < n and _ev_less(ht[r], hm[r], hg[r], ht[l], hm[l], hg[l]):
            c = r
        if _ev_less(ht[c], hm[c], hg[c], ht[i], hm[i], hg[i]):
            ht[i], ht[c] = ht[c], ht[i]
            hg[i], hg[c] = hg[c], hg[i]
            hm[i], hm[c] = hm[c], hm[i]
            hs[i], hs[c] = hs[c], hs[i]
            i = c
        else:
            break
    return n


@njit(cache=True)
def _grow_f8(a):
    b = np.empty(2 * a.shape[0], np.float64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_i8(a):
    b = np.empty(2 * a.shape[0], np.int64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_u8(a):
    b = np.empty(2 * a.shape[0], np.uint64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_b(a):
    b = np.empty(2 * a.shape[0], np.uint8)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_i2(a):
    b = np.empty(2 * a.shape[0], np.int16)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def tree_trial_core(base, d, lam, rho, target, max_sites, max_events, horizon,
                    prune_gap):
    """One trial on the d-ary tree.  Returns
    (verdict, stop_time, max_type1_depth, events, conversions, occupied)."""
    cap_s = 4096
    s_id = np.empty(cap_s, np.int64)
    s_st = np.empty(cap_s, np.uint8)
    s_dep = np.empty(cap_s, np.int16)
    s_hs = np.empty(cap_s, np.uint64)
    smap = Dict.empty(types.int64, types.int64)

    cap_h = 8192
    ht = np.empty(cap_h, np.float64)
    hg = np.empty(cap_h, np.int64)
    hm = np.empty(cap_h, np.int64)
    hs = np.empty(cap_h, np.float64)  # unused on the tree, kept for shared heap code
    hn = 0

    ns = 0
    n1 = 0
    nocc = 0
    events = np.int64(0)
    convs = np.int64(0)
    maxr = 0
    clock = 0.0
    verdict = -1
    stopt = 0.0

    # occupy the root with type 1 at time 0
    rs = tree_root_state(np.uint64(base))
    s_id[0] = 1
    s_st[0] = 1
    s_dep[0] = 0
    s_hs[0] = rs
    smap[np.int64(1)] = np.int64(0)
    ns = 1
    n1 = 1
    nocc = 1
    if target == 0:
        return SURVIVED, 0.0, 0, np.int64(0), np.int64(0), 1
    if rho > 0.0:
        if hn + 1 > ht.shape[0]:
            ht = _grow_f8(ht); hg = _grow_i8(hg); hm = _grow_i8(hm); hs = _grow_f8(hs)
        hn = _heap_push(ht, hg, hm, hs, hn, exp_from_u64(state_hash(rs, np.uint64(CONV_TAG)), rho),
                        np.int64(1), np.int64((K_CONV << 56)), 0.0)
    for lab in range(d):
        child = np.int64(d + lab)
        cs = child_state(rs, np.int64(lab))
        dt = exp_from_u64(state_hash(cs, np.uint64(T1_TAG)), 1.0)
        if hn + 1 > ht.shape[0]:
            ht = _grow_f8(ht); hg = _grow_i8(hg); hm = _grow_i8(hm); hs = _grow_f8(hs)
        hn = _heap_push(ht, hg, hm, hs, hn, dt, child, np.int64((K_ARR1 << 56)), 0.0)

    while verdict < 0:
        if hn == 0:
            verdict = EXTINCT
            stopt = clock
            break
        if events >= max_events or nocc >= max_sites:
            verdict = CAPPED
            stopt = clock
            break
        if ht[0] > horizon:
            verdict = CAPPED
            stopt = horizon
            break
        t = ht[0]
        g = hg[0]
        m = hm[0]
        hn = _heap_pop(ht, hg, hm, hs, hn)
        clock = t
        events += 1
        kind = m >> 56
        src = m & _SRC_MASK

        do_make2 = False
        by_conv = False
        idx2 = np.int64(-1)

        if kind == K_ARR1:
            if s_st[src] == 1 and g not in smap:
                dep = s_dep[src] + 1  # upward spread never finds a vacant parent
                if prune_gap > 0 and dep < maxr - prune_gap:
                    pass
                else:
                    hv = child_state(s_hs[src], np.int64(g % d))
                    if ns >= s_id.shape[0]:
                        s_id = _grow_i8(s_id); s_st = _grow_b(s_st)
                        s_dep = _grow_i2(s_dep); s_hs = _grow_u8(s_hs)
                    idx = np.int64(ns)
                    s_id[idx] = g
                    s_st[idx] = 1
                    s_dep[idx] = dep
                    s_hs[idx] = hv
                    smap[g] = idx
                    ns += 1
                    n1 += 1
                    nocc += 1
                    if dep > maxr:
                        maxr = dep
                    if dep >= target:
                        verdict = SURVIVED
                        stopt = t
                    else:
                        if rho > 0.0:
                            if hn + 1 > ht.shape[0]:
                                ht = _grow_f8(ht); hg = _grow_i8(hg)
                                hm = _grow_i8(hm); hs = _grow_f8(hs)
                            hn = _heap_push(
                                ht, hg, hm, hs, hn,
                                t + exp_from_u64(state_hash(hv, np.uint64(CONV_TAG)), rho),
                                g, np.int64((K_CONV << 56) | idx), 0.0)
                        for lab in range(d - 1):
                            child = g * d + lab
                            if child in smap:
                                continue
                            cs = child_state(hv, np.int64(lab))
                            dt = exp_from_u64(state_hash(cs, np.uint64(T1_TAG)), 1.0)
                            if hn + 1 > ht.shape[0]:
                                ht = _grow_f8(ht); hg = _grow_i8(hg)
                                hm = _grow_i8(hm); hs = _grow_f8(hs)
                            hn = _heap_push(ht, hg, hm, hs, hn, t + dt, child,
                                            np.int64((K_ARR1 << 56) | idx), 0.0)
                        par = g // d
                        if par not in smap:
                            dt = exp_from_u64(state_hash(hv, np.uint64(T1_TAG)), 1.0)
                            if hn + 1 > ht.shape[0]:
                                ht = _grow_f8(ht); hg = _grow_i8(hg)
                                hm = _grow_i8(hm); hs = _grow_f8(hs)
                            hn = _heap_push(ht, hg, hm, hs, hn, t + dt, par,
                                            np.int64((K_ARR1 << 56) | idx), 0.0)
        elif kind == K_ARR2:
            idx2 = smap[g] if g in smap else np.int64(-1)
            if idx2 >= 0 and s_st[idx2] == 2:
                pass
            else:
                do_make2 = True
        else:  # conversion
            idx2 = smap[g]
            if s_st[idx2] == 1:
                do_make2 = True
                by_conv = True

        if do_make2:
            if idx2 >= 0:
                if s_st[idx2] == 1:
                    n1 -= 1
                s_st[idx2] = 2
                hv = s_hs[idx2]
                dep = np.int64(s_dep[idx2])
                idx = idx2
            else:
                dep = s_dep[src] + 1  # same argument as arrive1: source is the parent
                hv = child_state(s_hs[src], np.int64(g % d))
                if ns >= s_id.shape[0]:
                    s_id = _grow_i8(s_id); s_st = _grow_b(s_st)
                    s_dep = _grow_i2(s_dep); s_hs = _grow_u8(s_hs)
                idx = np.int64(ns)
                s_id[idx] = g
                s_st[idx] = 2
                s_dep[idx] = dep
                s_hs[idx] = hv
                smap[g] = idx
                ns += 1
                nocc += 1
            if by_conv:
                convs += 1
            # only type-1 neighbors are worth chasing: a vacant neighbor of a
            # type-2 tree site is cut off from type 1 forever (its subtree is
            # only reachable through this site), so spread there is a no-op
            nch = d if g == 1 else d - 1
            for lab in range(nch):
                child = g * d + lab
                cidx = smap[child] if child in smap else np.int64(-1)
                if cidx < 0 or s_st[cidx] != 1:
                    continue
                cs = child_state(hv, np.int64(lab))
                dt = exp_from_u64(state_hash(cs, np.uint64(TD_TAG)), lam)
                if hn + 1 > ht.shape[0]:
                    ht = _grow_f8(ht); hg = _grow_i8(hg)
                    hm = _grow_i8(hm); hs = _grow_f8(hs)
                hn = _heap_push(ht, hg, hm, hs, hn, t + dt, child,
                                np.int64((K_ARR2 << 56) | idx), 0.0)
            if g != 1:
                par = g // d
                pidx = smap[par] if par in smap else np.int64(-1)
                if pidx >= 0 and s_st[pidx] == 1:
                    dt = exp_from_u64(state_hash(hv, np.uint64(TU_TAG)), lam)
                    if hn + 1 > ht.shape[0]:
                        ht = _grow_f8(ht); hg = _grow_i8(hg)
                        hm = _grow_i8(hm); hs = _grow_f8(hs)
                    hn = _heap_push(ht, hg, hm, hs, hn, t + dt, par,
                                    np.int64((K_ARR2 << 56) | idx), 0.0)

        if verdict < 0 and n1 == 0:
            verdict = EXTINCT
            stopt = clock

    return verdict, stopt, maxr, events, convs, nocc


@njit(cache=True, inline="always")
def _lat_coord(code, pw, side, R):
    return (code // pw) % side - R


@njit(cache=True)
def _lat_site_state(base, code, side, R, D, scratch):
    c = code
    for i in range(D):
        scratch[i] = c % side - R
        c //= side
    return lattice_site_state(np.uint64(base), scratch[:D])


@njit(cache=True)
def lattice_trial_core(base, D, lam, rho, target, max_sites, max_events, horizon,
                       resample, trunc_q, trunc_K):
    """One trial on Z^D inside the centered sup-norm box of radius `target`.

    trunc_q < 0 disables clock truncation.  Returns the same tuple as
    tree_trial_core with the sup-norm radius in place of depth."""
    side = 2 * target + 1
    pws = np.empty(D, np.int64)
    p = np.int64(1)
    for i in range(D):
        pws[i] = p
        p *= side
    scratch = np.empty(D, np.int64)

    cap_s = 4096
    s_code = np.empty(cap_s, np.int64)
    s_st = np.empty(cap_s, np.uint8)
    s_r = np.empty(cap_s, np.int16)
    s_hs = np.empty(cap_s, np.uint64)
    s_tau = np.empty(cap_s, np.float64)
    smap = Dict.empty(types.int64, types.int64)

    cap_h = 8192
    ht = np.empty(cap_h, np.float64)
    hg = np.empty(cap_h, np.int64)
    hm = np.empty(cap_h, np.int64)
    hs = np.empty(cap_h, np.float64)  # scheduling time, for resample validity
    hn = 0

    ns = 0
    n1 = 0
    nocc = 0
    events = np.int64(0)
    convs = np.int64(0)
    maxr = 0
    clock = 0.0
    verdict = -1
    stopt = 0.0

    origin = np.int64(0)
    for i in range(D):
        origin += target * pws[i]

    os_ = _lat_site_state(base, origin, side, target, D, scratch)
    s_code[0] = origin
    s_st[0] = 1
    s_r[0] = 0
    s_hs[0] = os_
    s_tau[0] = 0.0
    smap[origin] = np.int64(0)
    ns = 1
    n1 = 1
    nocc = 1
    if target == 0:
        return (SURVIVED, 0.0, 0, np.int64(0), np.int64(0), 1,
                s_code[:1], s_st[:1], s_tau[:1])
    if rho > 0.0:
        hn = _heap_push(ht, hg, hm, hs, hn,
                        exp_from_u64(state_hash(os_, np.uint64(CONV_TAG)), rho),
                        origin, np.int64((K_CONV << 56)), 0.0)
    for axis in range(D):
        for step in range(-1, 2, 2):
            ci = _lat_coord(origin, pws[axis], side, target)
            nc = ci + step
            if nc > target or nc < -target:
                continue
            gcode = origin + step * pws[axis]
            if step > 0:
                cst = os_
            else:
                cst = _lat_site_state(base, gcode, side, target, D, scratch)
            es = lattice_edge_state(cst, np.int64(axis))
            v = exp_from_u64(state_hash(es, np.uint64(T1_TAG)), 1.0)
            if trunc_q >= 0.0:
                if u64_to_unit(state_hash(es, np.uint64(SEMI_TAG))) < trunc_q and v > trunc_K:
                    continue
            if hn + 1 > ht.shape[0]:
                ht = _grow_f8(ht); hg = _grow_i8(hg); hm = _grow_i8(hm); hs = _grow_f8(hs)
            hn = _heap_push(ht, hg, hm, hs, hn, v, gcode, np.int64((K_ARR1 << 56)), 0.0)

    while verdict < 0:
        if hn == 0:
            verdict = EXTINCT
            stopt = clock
            break
        if events >= max_events or nocc >= max_sites:
            verdict = CAPPED
            stopt = clock
            break
        if ht[0] > horizon:
            verdict = CAPPED
            stopt = horizon
            break
        t = ht[0]
        g = hg[0]
        m = hm[0]
        sched = hs[0]
        hn = _heap_pop(ht, hg, hm, hs, hn)
        clock = t
        events += 1
        kind = m >> 56
        src = m & _SRC_MASK

        do_make2 = False
        by_conv = False
        idx2 = np.int64(-1)

        if kind == K_ARR1:
            if s_st[src] == 1 and g not in smap:
                hv = _lat_site_state(base, g, side, target, D, scratch)
                r = 0
                for i in range(D):
                    ci = int(scratch[i])
                    if ci < 0:
                        ci = -ci
                    if ci > r:
                        r = ci
                if ns >= s_code.shape[0]:
                    s_code = _grow_i8(s_code); s_st = _grow_b(s_st)
                    s_r = _grow_i2(s_r); s_hs = _grow_u8(s_hs); s_tau = _grow_f8(s_tau)
                idx = np.int64(ns)
                s_code[idx] = g
                s_st[idx] = 1
                s_r[idx] = r
                s_hs[idx] = hv
                s_tau[idx] = t
                smap[g] = idx
                ns += 1
                n1 += 1
                nocc += 1
                if r > maxr:
                    maxr = r
                if r >= target:
                    verdict = SURVIVED
                    stopt = t
                else:
                    if rho > 0.0:
                        if hn + 1 > ht.shape[0]:
                            ht = _grow_f8(ht); hg = _grow_i8(hg)
                            hm = _grow_i8(hm); hs = _grow_f8(hs)
                        hn = _heap_push(
                            ht, hg, hm, hs, hn,
                            t + exp_from_u64(state_hash(hv, np.uint64(CONV_TAG)), rho),
                            g, np.int64((K_CONV << 56) | idx), 0.0)
                    for axis in range(D):
                        for step in range(-1, 2, 2):
                            ci = _lat_coord(g, pws[axis], side, target)
                            nc = ci + step
                            if nc > target or nc < -target:
                                continue
                            gcode = g + step * pws[axis]
                            if gcode in smap:
                                continue
                            if step > 0:
                                cst = hv
                            else:
                                cst = _lat_site_state(base, gcode, side, target, D, scratch)
                            es = lattice_edge_state(cst, np.int64(axis))
                            v = exp_from_u64(state_hash(es, np.uint64(T1_TAG)), 1.0)
                            if trunc_q >= 0.0:
                                if (u64_to_unit(state_hash(es, np.uint64(SEMI_TAG))) < trunc_q
                                        and v > trunc_K):
                                    continue
                            if hn + 1 > ht.shape[0]:
                                ht = _grow_f8(ht); hg = _grow_i8(hg)
                                hm = _grow_i8(hm); hs = _grow_f8(hs)
                            hn = _heap_push(ht, hg, hm, hs, hn, t + v, gcode,
                                            np.int64((K_ARR1 << 56) | idx), 0.0)
        elif kind == K_ARR2:
            idx2 = smap[g] if g in smap else np.int64(-1)
            if idx2 >= 0 and s_st[idx2] == 2:
                pass
            elif resample and idx2 >= 0 and s_st[idx2] == 1 and s_tau[idx2] > sched:
                diff = g - s_code[src]
                axis = 0
                step = 1
                for i in range(D):
                    if diff == pws[i]:
                        axis = i
                        step = 1
                        break
                    if diff == -pws[i]:
                        axis = i
                        step = -1
                        break
                if step > 0:
                    cst = s_hs[src]
                else:
                    cst = s_hs[idx2]
                es = lattice_edge_state(cst, np.int64(axis))
                dt = exp_from_u64(state_hash(es, np.uint64(T3_TAG)), lam)
                if hn + 1 > ht.shape[0]:
                    ht = _grow_f8(ht); hg = _grow_i8(hg); hm = _grow_i8(hm); hs = _grow_f8(hs)
                hn = _heap_push(ht, hg, hm, hs, hn, s_tau[idx2] + dt, g, m, s_tau[idx2])
            else:
                do_make2 = True
        else:
            idx2 = smap[g]
            if s_st[idx2] == 1:
                do_make2 = True
                by_conv = True

        if do_make2:
            if idx2 >= 0:
                if s_st[idx2] == 1:
                    n1 -= 1
                s_st[idx2] = 2
                hv = s_hs[idx2]
                idx = idx2
            else:
                hv = _lat_site_state(base, g, side, target, D, scratch)
                if ns >= s_code.shape[0]:
                    s_code = _grow_i8(s_code); s_st = _grow_b(s_st)
                    s_r = _grow_i2(s_r); s_hs = _grow_u8(s_hs); s_tau = _grow_f8(s_tau)
                idx = np.int64(ns)
                r = 0
                for i in range(D):
                    ci = int(scratch[i])
                    if ci < 0:
                        ci = -ci
                    if ci > r:
                        r = ci
                s_code[idx] = g
                s_st[idx] = 2
                s_r[idx] = r
                s_hs[idx] = hv
                s_tau[idx] = np.inf
                smap[g] = idx
                ns += 1
                nocc += 1
            if by_conv:
                convs += 1
            for axis in range(D):
                for step in range(-1, 2, 2):
                    ci = _lat_coord(g, pws[axis], side, target)
                    nc = ci + step
                    if nc > target or nc < -target:
                        continue
                    gcode = g + step * pws[axis]
                    cidx = smap[gcode] if gcode in smap else np.int64(-1)
                    if cidx >= 0 and s_st[cidx] == 2:
                        continue
                    if step > 0:
                        cst = hv
                    else:
                        cst = _lat_site_state(base, gcode, side, target, D, scratch)
                    es = lattice_edge_state(cst, np.int64(axis))
                    dt = exp_from_u64(state_hash(es, np.uint64(T2_TAG)), lam)
                    if hn + 1 > ht.shape[0]:
                        ht = _grow_f8(ht); hg = _grow_i8(hg)
                        hm = _grow_i8(hm); hs = _grow_f8(hs)
                    hn = _heap_push(ht, hg, hm, hs, hn, t + dt, gcode,
                                    np.int64((K_ARR2 << 56) | idx), t)

        if verdict < 0 and n1 == 0:
            verdict = EXTINCT
            stopt = clock

    return (verdict, stopt, maxr, events, convs, nocc,
            s_code[:ns], s_st[:ns], s_tau[:ns])


def run_trial_fast(params, field, target, caps, prune_gap=0):
    """Dispatch one trial to the compiled core matching `params`."""
    from .engine import TrialOutcome, Verdict
    from .model import ClockMode, Topology

    if params.topology is Topology.TREE:
        res = tree_trial_core(
            np.uint64(field.base), params.d, params.lam, params.rho, target,
            caps.max_sites, caps.max_events, caps.horizon, prune_gap)
    else:
        trunc = params.truncation
        res = lattice_trial_core(
            np.uint64(field.base), params.d, params.lam, params.rho, target,
            caps.max_sites, caps.max_events, caps.horizon,
            params.clock_mode is ClockMode.RESAMPLE,
            trunc.q if trunc is not None else -1.0,
            trunc.K if trunc is not None else 0.0)
    verdict = (Verdict.SURVIVED, Verdict.EXTINCT, Verdict.CAPPED)[res[0]]
    return TrialOutcome(
        verdict=verdict,
        stop_time=float(res[1]),
        max_depth_or_radius=int(res[2]),
        events_processed=int(res[3]),
        conversions=int(res[4]),
        occupied_sites=int(res[5]),
        approximate=prune_gap > 0,
    )


# ---------------------------------------------------------------------------
# competing-growth percolation core (red / blue coloring on a finite graph)


@njit(cache=True, inline="always")
def _ring_less(t1, v1, u1, t2, v2, u2):
    if t1 != t2:
        return t1 < t2
    if v1 != v2:
        return v1 < v2
    return u1 < u2


@njit(cache=True)
def ssp_core(nbr, xr, kappa, seeds, clus, corder, cstart, origin, cap_value,
             boundary):
    """Red/blue coloring dynamics on an explicit neighbor table.

    nbr is (n, deg) with -1 for missing neighbors, xr the per-directed-edge
    red passage value, kappa the uniform blue passage value.  A blue seed
    colors its whole union cluster (clus labels, corder/cstart index the
    members) at the same instant.  cap_value > 0 turns on the runtime
    check that a red ring is never scheduled across an at-cap edge whose
    endpoints are not both seeds; violations are counted and returned.

    The run stops as soon as a red site is colored on a boundary site
    (the survived-to-target stopping rule of the trial engine) or when
    the ring queue empties.

    Returns (color, T, events, bad_cap) with color 0 uncolored, 1 red,
    2 blue and T the first-coloring times."""
    n, deg = nbr.shape
    color = np.zeros(n, np.uint8)
    T = np.full(n, np.inf)

    ht = np.empty(4096, np.float64)
    hu = np.empty(4096, np.int64)
    hv = np.empty(4096, np.int64)
    hn = 0

    stack = np.empty(256, np.int64)
    sp = 0
    events = np.int64(0)
    bad_cap = np.int64(0)

    color[origin] = 1
    T[origin] = 0.0
    stack[0] = origin
    sp = 1

    while True:
        while sp > 0:
            sp -= 1
            u = stack[sp]
            red = color[u] == 1
            for k in range(deg):
                v = nbr[u, k]
                if v < 0 or color[v] != 0:
                    continue
                if red:
                    dt = xr[u, k]
                    if cap_value > 0.0 and dt >= cap_value and not (seeds[u] and seeds[v]):
                        bad_cap += 1
                else:
                    dt = kappa
                t = T[u] + dt
                if hn + 1 > ht.shape[0]:
                    ht = _grow_f8(ht)
                    hu = _grow_i8(hu)
                    hv = _grow_i8(hv)
                i = hn
                hn += 1
                ht[i] = t
                hu[i] = u
                hv[i] = v
                while i > 0:
                    p = (i - 1) >> 1
                    if _ring_less(ht[i], hv[i], hu[i], ht[p], hv[p], hu[p]):
                        ht[i], ht[p] = ht[p], ht[i]
                        hu[i], hu[p] = hu[p], hu[i]
                        hv[i], hv[p] = hv[p], hv[i]
                        i = p
                    else:
                        break
        if hn == 0:
            break
        t = ht[0]
        u = hu[0]
        v = hv[0]
        hn -= 1
        m = hn
        ht[0] = ht[m]
        hu[0] = hu[m]
        hv[0] = hv[m]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= m:
                break
            r = l + 1
            c = l
            if r < m and _ring_less(ht[r], hv[r], hu[r], ht[l], hv[l], hu[l]):
                c = r
            if _ring_less(ht[c], hv[c], hu[c], ht[i], hv[i], hu[i]):
                ht[i], ht[c] = ht[c], ht[i]
                hu[i], hu[c] = hu[c], hu[i]
                hv[i], hv[c] = hv[c], hv[i]
                i = c
            else:
                break
        events += 1
        if color[v] != 0:
            continue
        if color[u] == 1 and not seeds[v]:
            color[v] = 1
        else:
            color[v] = 2
        T[v] = t
        if color[v] == 1 and boundary[v]:
            break
        if sp + 1 > stack.shape[0]:
            stack = _grow_i8(stack)
        stack[sp] = v
        sp += 1
        if color[v] == 2 and seeds[v]:
            c = clus[v]
            for idx in range(cstart[c], cstart[c + 1]):
                w = corder[idx]
                if color[w] == 0:
                    color[w] = 2
                    T[w] = t
                    if sp + 1 > stack.shape[0]:
                        stack = _grow_i8(stack)
                    stack[sp] = w
                    sp += 1
    return color, T, events, bad_cap
