"""Compiled kernels: keyed pseudorandom mixing and the event-driven trial cores.

The clock field is generated lazily from 64-bit keyed hashing
(splitmix64-style finalizer).  Every vertex carries a 64-bit chain state
derived from its label path (tree) or its coordinates (lattice); an edge
clock hashes the chain state of the deeper / canonical endpoint together
with a per-kind tag.  The same derivation is implemented three times --
here (njit scalar), in field.py (pure python) and as numpy vectors in
treelab -- and cross-checked by tests.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

MASK64 = 0xFFFFFFFFFFFFFFFF

GOLD = 0x9E3779B97F4A7C15
MIX_A = 0xBF58476D1CE4E5B9
MIX_B = 0x94D049BB133111EB

# per-kind tags, arbitrary distinct odd constants
T1_TAG = 0xA24BAED4963EE407
TU_TAG = 0x9FB21C651E98DF25
TD_TAG = 0xB4B82E39C6FBD5B9
T2_TAG = 0xC873DE8CF9641B4F
T3_TAG = 0xD1B54A32D192ED03
CONV_TAG = 0xE7037ED1A0B428DB
SEMI_TAG = 0x8EBC6AF09C88C6E3
SEED_TAG = 0x589965CC75374CC3
RED_TAG = 0x1D8E4E27C47D124F
TREE_TAG = 0xEB44ACCAB455D165
LAT_TAG = 0x6C9C7BF0A374F16B
AXIS_C = 0x3C79AC492BA7B653

KIND_TAGS = (T1_TAG, TU_TAG, TD_TAG, T2_TAG, T3_TAG, CONV_TAG)

U64_INV = 1.0 / 18446744073709551616.0  # 2**-64


@njit(cache=True, inline="always")
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_B)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def u64_to_unit(h):
    # (h + 0.5) * 2^-64, strictly inside (0, 1)
    return (np.float64(h) + 0.5) * U64_INV


@njit(cache=True, inline="always")
def exp_from_u64(h, rate):
    return -math.log(u64_to_unit(h)) / rate


@njit(cache=True)
def vexp_from_u64(h, rate):
    # elementwise exp_from_u64 over a flat u64 array; a plain loop keeps
    # the libm log, so values stay bitwise equal to the scalar draws
    # (numpy's vectorized log rounds differently on a few inputs)
    out = np.empty(h.shape[0], np.float64)
    for i in range(h.shape[0]):
        out[i] = exp_from_u64(h[i], rate)
    return out


@njit(cache=True)
def field_base(master_seed, trial_index):
    a = mix64(np.uint64(master_seed) * np.uint64(GOLD) ^ np.uint64(T3_TAG))
    b = mix64(np.uint64(trial_index) * np.uint64(MIX_A) ^ np.uint64(MIX_B))
    return mix64(a ^ b)


@njit(cache=True, inline="always")
def tree_root_state(base):
    return mix64(np.uint64(base) ^ np.uint64(TREE_TAG))


@njit(cache=True, inline="always")
def child_state(state, label):
    return mix64(np.uint64(state) ^ (np.uint64(label + 1) * np.uint64(GOLD)))


@njit(cache=True, inline="always")
def state_hash(state, tag):
    return mix64(np.uint64(state) ^ np.uint64(tag))


@njit(cache=True)
def lattice_site_state(base, coords):
    s = np.uint64(base) ^ np.uint64(LAT_TAG)
    for c in coords:
        s = mix64(s ^ (np.uint64(c) * np.uint64(MIX_B)))
    return s


@njit(cache=True, inline="always")
def lattice_edge_state(canon_state, axis):
    return mix64(np.uint64(canon_state) ^ (np.uint64(axis + 1) * np.uint64(AXIS_C)))


# ---------------------------------------------------------------------------
# keyed-tree search kernels
#
# All three walk the virtual subtree below a chain state: the first level
# has first_nch children with labels starting at first_lab, every deeper
# level has d-1 children labeled 0..d-2.  Edge clocks hash the child
# state with the given kind tag, exactly like the trial engines.


@njit(cache=True)
def greedy_path_time(root_state, d, n, first_nch, first_lab, tag, rate):
    """Total clock time of the greedy descent (cheapest child each step)."""
    state = np.uint64(root_state)
    total = 0.0
    for depth in range(n):
        nch = first_nch if depth == 0 else d - 1
        lab0 = first_lab if depth == 0 else 0
        best = np.inf
        best_state = state
        for j in range(nch):
            cs = child_state(state, np.int64(lab0 + j))
            dt = exp_from_u64(state_hash(cs, np.uint64(tag)), rate)
            if dt < best:
                best = dt
                best_state = cs
        total += best
        state = best_state
    return total


@njit(cache=True)
def min_path_time(root_state, d, n, first_nch, first_lab, tag, rate, incumbent):
    """Exact minimum of the summed clocks over all depth-n descents,
    except that values >= incumbent are reported as incumbent (the search
    prunes any partial path reaching it, which is what makes the
    branch-and-bound affordable)."""
    if n == 0:
        return 0.0
    st_state = np.empty(n, np.uint64)
    st_time = np.empty(n, np.float64)
    st_lab = np.empty(n, np.int64)
    best = incumbent
    depth = 0
    st_state[0] = np.uint64(root_state)
    st_time[0] = 0.0
    st_lab[0] = 0
    while depth >= 0:
        nch = first_nch if depth == 0 else d - 1
        lab0 = first_lab if depth == 0 else 0
        j = st_lab[depth]
        if j >= nch:
            depth -= 1
            continue
        st_lab[depth] += 1
        cs = child_state(st_state[depth], np.int64(lab0 + j))
        t = st_time[depth] + exp_from_u64(state_hash(cs, np.uint64(tag)), rate)
        if t >= best:
            continue
        if depth + 1 == n:
            best = t
            continue
        depth += 1
        st_state[depth] = cs
        st_time[depth] = t
        st_lab[depth] = 0
    return best


@njit(cache=True)
def subbox_scan(root_state, d, k, thr1, thr_d, lam, max_wit, h1_cap,
                wit_states, wit_labels):
    """Enumerate leaves of the depth-k subtree with T1 <= thr1, pruning on
    the partial type-1 time.  A qualifying leaf is a witness when its
    downward type-2 time is >= thr_d.  Fills wit_states/wit_labels with up
    to max_wit witnesses; stops early once max_wit witnesses are found and
    h1_cap qualifying leaves are counted.  Returns (n_h1, n_wit)."""
    st_state = np.empty(k, np.uint64)
    st_t1 = np.empty(k, np.float64)
    st_td = np.empty(k, np.float64)
    st_lab = np.empty(k, np.int64)
    labs = np.empty(k, np.int64)
    n_h1 = 0
    n_wit = 0
    depth = 0
    st_state[0] = np.uint64(root_state)
    st_t1[0] = 0.0
    st_td[0] = 0.0
    st_lab[0] = 0
    while depth >= 0:
        j = st_lab[depth]
        if j >= d - 1:
            depth -= 1
            continue
        st_lab[depth] += 1
        cs = child_state(st_state[depth], np.int64(j))
        t1 = st_t1[depth] + exp_from_u64(state_hash(cs, np.uint64(T1_TAG)), 1.0)
        if t1 > thr1:
            continue
        td = st_td[depth] + exp_from_u64(state_hash(cs, np.uint64(TD_TAG)), lam)
        labs[depth] = j
        if depth + 1 == k:
            n_h1 += 1
            if td >= thr_d and n_wit < max_wit:
                wit_states[n_wit] = cs
                for i in range(k):
                    wit_labels[n_wit, i] = labs[i]
                n_wit += 1
            if n_wit >= max_wit and n_h1 >= h1_cap:
                break
            continue
        depth += 1
        st_state[depth] = cs
        st_t1[depth] = t1
        st_td[depth] = td
        st_lab[depth] = 0
    return n_h1, n_wit
