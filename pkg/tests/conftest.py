"""Shared oracles and forced-clock helpers for the test suite."""

from __future__ import annotations

import heapq
import math
from typing import Dict, Optional, Tuple

import numpy as np

from convfpp import ClockKind, ModelParams, RandomField, Topology
from convfpp.model import tree_children, tree_depth


class OverrideField(RandomField):
    """Clock field with hand-forced values and a constant fallback.

    Overrides are keyed by (kind, frozenset of endpoints) for edge
    clocks and (kind, site) for conversion clocks; anything not listed
    falls back to `default` per kind, which keeps forced scenarios free
    of random interference.  The fast core refuses subclassed fields,
    so trials with an OverrideField always run the reference engine.
    """

    def __init__(self, params: ModelParams, master_seed: int = 0,
                 trial_index: int = 0,
                 edge_overrides: Optional[Dict] = None,
                 conv_overrides: Optional[Dict] = None,
                 defaults: Optional[Dict[ClockKind, float]] = None):
        super().__init__(params, master_seed, trial_index)
        self.edge_overrides = edge_overrides or {}
        self.conv_overrides = conv_overrides or {}
        self.defaults = defaults or {}

    def _edge_value(self, kind: ClockKind, a, b) -> float:
        key = (kind, frozenset((a, b)))
        if key in self.edge_overrides:
            return self.edge_overrides[key]
        return self.defaults.get(kind, 100.0)

    def lattice_edge_clock(self, kind, x, y):
        return self._edge_value(kind, x, y)

    def tree_edge_clock(self, kind, deeper_site, deeper_state=None):
        parent = deeper_site // self.params.d
        return self._edge_value(kind, deeper_site, parent)

    def conv_clock(self, site):
        if site in self.conv_overrides:
            return self.conv_overrides[site]
        return self.defaults.get(ClockKind.CONV, 100.0)


def dijkstra_lattice(field: RandomField, R: int, kind=ClockKind.T1,
                     rate_cap: Optional[float] = None,
                     horizon: float = math.inf) -> Dict[Tuple[int, ...], float]:
    """Exact first-passage times from the origin inside the sup-norm box
    of radius R, restricted to paths staying in the box."""
    d = field.params.d
    origin = (0,) * d
    dist = {origin: 0.0}
    pq = [(0.0, origin)]
    done = set()
    while pq:
        t0, x = heapq.heappop(pq)
        if x in done:
            continue
        done.add(x)
        for axis in range(d):
            for step in (-1, 1):
                y = tuple(c + (step if i == axis else 0) for i, c in enumerate(x))
                if max(abs(c) for c in y) > R:
                    continue
                w = field.lattice_edge_clock(kind, x, y)
                if rate_cap is not None:
                    w = min(w, rate_cap)
                nt = t0 + w
                if nt <= horizon and nt < dist.get(y, math.inf):
                    dist[y] = nt
                    heapq.heappush(pq, (nt, y))
    return dist


def dijkstra_tree(field: RandomField, depth: int,
                  horizon: float = math.inf) -> Dict[int, float]:
    """Exact type-1 first-passage times from the root of the tree down
    to the given depth (every tree path is unique, so this is a plain
    sum along root paths, computed breadth-first)."""
    d = field.params.d
    dist = {1: 0.0}
    frontier = [1]
    while frontier:
        nxt = []
        for site in frontier:
            if tree_depth(site, d) >= depth:
                continue
            for child in tree_children(site, d):
                t = dist[site] + field.tree_edge_clock(ClockKind.T1, child)
                if t <= horizon:
                    dist[child] = t
                    nxt.append(child)
        frontier = nxt
    return dist
