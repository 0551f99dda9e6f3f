"""Deterministic lazy clock field.

Every clock value is a pure function of (master_seed, trial_index, key),
so trials are replayable and evaluation order never matters.  Rates:
type-1 clocks are Exp(1), type-2 clocks (upward / downward / lattice /
resample) are Exp(lambda), conversion clocks are Exp(rho).

The scalar derivation here is plain-python and bit-identical to the njit
version in _fast.py (tests enforce this).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _fast
from .model import (
    ConfigurationError,
    LatticeSite,
    ModelParams,
    PathError,
    SiteId,
    Topology,
    TreeSite,
    make_topology,
    tree_depth,
    tree_label,
    tree_labels,
)

_M = _fast.MASK64


def _mix64(z: int) -> int:
    z &= _M
    z = ((z ^ (z >> 30)) * _fast.MIX_A) & _M
    z = ((z ^ (z >> 27)) * _fast.MIX_B) & _M
    return z ^ (z >> 31)


def _u64_to_unit(h: int) -> float:
    return (h + 0.5) * _fast.U64_INV


class ClockKind(enum.IntEnum):
    T1 = 0  # type-1 passage, rate 1
    TU = 1  # type-2 upward (tree), rate lambda
    TD = 2  # type-2 downward (tree), rate lambda
    T2 = 3  # type-2 (lattice), rate lambda
    T3 = 4  # type-2 resample (lattice), rate lambda
    CONV = 5  # conversion, rate rho, keyed by site


_TAGS = _fast.KIND_TAGS
_TREE_KINDS = (ClockKind.T1, ClockKind.TU, ClockKind.TD, ClockKind.CONV)
_LATTICE_KINDS = (ClockKind.T1, ClockKind.T2, ClockKind.T3, ClockKind.CONV)


@dataclass(frozen=True)
class ClockKey:
    """(edge, kind) address of one clock.  Edge clocks take the two
    endpoint sites (order irrelevant, canonicalized internally);
    conversion clocks take the site alone."""

    kind: ClockKind
    a: SiteId
    b: Union[SiteId, None] = None


class RandomField:
    """Keyed counter-based clock field for one trial."""

    def __init__(self, params: ModelParams, master_seed: int, trial_index: int = 0):
        self.params = params
        self.master_seed = int(master_seed)
        self.trial_index = int(trial_index)
        self.base = int(_fast.field_base(np.uint64(self.master_seed & _M),
                                         np.uint64(self.trial_index & _M)))
        self._topology = make_topology(params)

    # -- chain states ------------------------------------------------------

    def tree_root_state(self) -> int:
        return _mix64(self.base ^ _fast.TREE_TAG)

    def tree_child_state(self, state: int, label: int) -> int:
        return _mix64(state ^ ((label + 1) * _fast.GOLD) & _M)

    def tree_site_state(self, site: TreeSite) -> int:
        state = self.tree_root_state()
        for lab in tree_labels(site, self.params.d):
            state = self.tree_child_state(state, lab)
        return state

    def lattice_site_state(self, coords: LatticeSite) -> int:
        s = self.base ^ _fast.LAT_TAG
        for c in coords:
            s = _mix64(s ^ ((c & _M) * _fast.MIX_B) & _M)
        return s

    # -- clocks ------------------------------------------------------------

    def _rate(self, kind: ClockKind) -> float:
        if kind is ClockKind.T1:
            return 1.0
        if kind is ClockKind.CONV:
            return self.params.rho
        return self.params.lam

    def state_clock(self, state: int, kind: ClockKind) -> float:
        """Exponential clock keyed by a chain state and a kind tag."""
        rate = self._rate(kind)
        if rate == 0.0:
            return math.inf
        h = _mix64(state ^ _TAGS[kind])
        return -math.log(_u64_to_unit(h)) / rate

    def tree_edge_clock(self, kind: ClockKind, deeper_site: TreeSite,
                        deeper_state: int | None = None) -> float:
        """Clock of the edge between a tree vertex and its parent; the
        edge is keyed by the deeper endpoint."""
        if deeper_state is None:
            deeper_state = self.tree_site_state(deeper_site)
        return self.state_clock(deeper_state, kind)

    def lattice_edge_state(self, x: LatticeSite, y: LatticeSite) -> int:
        dx = [b - a for a, b in zip(x, y)]
        axes = [i for i, v in enumerate(dx) if v != 0]
        if len(axes) != 1 or abs(dx[axes[0]]) != 1:
            raise PathError(f"{x} and {y} are not lattice neighbors")
        axis = axes[0]
        canon = x if dx[axis] > 0 else y
        cs = self.lattice_site_state(canon)
        return _mix64(cs ^ ((axis + 1) * _fast.AXIS_C) & _M)

    def lattice_edge_clock(self, kind: ClockKind, x: LatticeSite, y: LatticeSite) -> float:
        es = self.lattice_edge_state(x, y)
        value = self.state_clock(es, kind)
        if kind is ClockKind.T1 and self.params.truncation is not None:
            trunc = self.params.truncation
            semi = _u64_to_unit(_mix64(es ^ _fast.SEMI_TAG)) < trunc.q
            if semi and value > trunc.K:
                return math.inf
        return value

    def conv_clock(self, site: SiteId) -> float:
        if self.params.topology is Topology.TREE:
            state = self.tree_site_state(site)
        else:
            state = self.lattice_site_state(site)
        return self.state_clock(state, ClockKind.CONV)


def sample_clock(field: RandomField, key: ClockKey) -> float:
    """Clock value for a key; deterministic in (seed, trial, key)."""
    params = field.params
    tree = params.topology is Topology.TREE
    valid = _TREE_KINDS if tree else _LATTICE_KINDS
    if key.kind not in valid:
        raise ConfigurationError(
            f"clock kind {key.kind.name} is invalid on {params.topology.value} topology")
    if key.kind is ClockKind.CONV:
        if key.b is not None:
            raise ConfigurationError("conversion clocks are keyed by a single site")
        return field.conv_clock(key.a)
    if key.b is None:
        raise ConfigurationError("edge clocks need both endpoints")
    if tree:
        a, b = key.a, key.b
        d = params.d
        if a // d == b:
            deeper = a
        elif b // d == a:
            deeper = b
        else:
            raise PathError(f"tree sites {a} and {b} are not adjacent")
        return field.tree_edge_clock(key.kind, deeper)
    return field.lattice_edge_clock(key.kind, key.a, key.b)


def path_time(field: RandomField, path: Sequence[SiteId], kind: ClockKind) -> float:
    """Sum of per-edge clocks along a path of adjacent sites.

    On the tree the upward/downward distinction is a property of how the
    edge is traversed, not of the edge itself, so the requested kind is
    applied to every edge as given.
    """
    total = 0.0
    for a, b in zip(path, path[1:]):
        total += sample_clock(field, ClockKey(kind, a, b))
    return total
