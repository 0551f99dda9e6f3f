"""Model parameters, topologies and site addressing.

Two topologies are supported:

* the d-ary tree (every vertex has degree d: the root has d children,
  every other vertex has a parent and d-1 children), and
* the Z^d lattice, simulated inside a finite centered box.

Tree sites are packed label sequences: the root is the integer 1 and the
i-th child of a vertex v is v*d + i.  The leading 1 acts as a sentinel so
depth and labels can be recovered by repeated division.  Python integers
make the encoding depth-unbounded (depths far beyond 512 are fine); the
compiled trial cores additionally require the packed id to fit in int64
and guard for that separately.

Lattice sites are plain tuples of integer coordinates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

TreeSite = int
LatticeSite = Tuple[int, ...]
SiteId = Union[TreeSite, LatticeSite]

TREE_ROOT: TreeSite = 1


class Topology(enum.Enum):
    TREE = "tree"
    LATTICE = "lattice"


class ClockMode(enum.Enum):
    STATIC = "static"
    RESAMPLE = "resample"


@dataclass(frozen=True)
class Truncation:
    """Truncated type-1 clock mode: edges are independently semi-marked
    with probability q and a semi-marked edge whose candidate clock
    exceeds K gets an infinite passage time."""

    K: float
    q: float

    def __post_init__(self) -> None:
        if self.K <= 0:
            raise ConfigurationError("truncation cutoff K must be positive")
        if not (0.0 <= self.q <= 1.0):
            raise ConfigurationError("semi-mark probability q must be in [0, 1]")


class ConfigurationError(ValueError):
    """Invalid parameter combination."""


class PathError(ValueError):
    """A site sequence is not a path of adjacent sites."""


@dataclass(frozen=True)
class ModelParams:
    """The (d, lambda, rho) triple plus topology and clock-mode flags.

    lambda is the type-2 spread rate, rho the conversion rate; type 1
    always spreads at rate 1.
    """

    d: int
    lam: float
    rho: float
    topology: Topology = Topology.TREE
    clock_mode: ClockMode = ClockMode.STATIC
    truncation: Optional[Truncation] = None

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ConfigurationError("lambda must be positive")
        if self.rho < 0:
            raise ConfigurationError("rho must be nonnegative")
        if self.topology is Topology.TREE:
            if self.d < 3:
                raise ConfigurationError("tree topology requires degree d >= 3")
            if self.clock_mode is ClockMode.RESAMPLE:
                raise ConfigurationError("resample clock mode is lattice-only")
            if self.truncation is not None:
                raise ConfigurationError("truncated clocks are lattice-only")
        else:
            if self.d < 1:
                raise ConfigurationError("lattice dimension must be >= 1")


# ---------------------------------------------------------------------------
# d-ary tree site operations


def tree_depth(site: TreeSite, d: int) -> int:
    if site < 1:
        raise ValueError(f"invalid tree site {site}")
    depth = 0
    while site > 1:
        site //= d
        depth += 1
    return depth


def tree_parent(site: TreeSite, d: int) -> TreeSite:
    if site <= 1:
        raise ValueError("the root has no parent")
    return site // d


def tree_label(site: TreeSite, d: int) -> int:
    """Label of the edge from parent(site) to site."""
    if site <= 1:
        raise ValueError("the root has no incoming edge")
    return site % d


def tree_child(site: TreeSite, d: int, label: int) -> TreeSite:
    n = d if site == TREE_ROOT else d - 1
    if not (0 <= label < n):
        raise ValueError(f"child label {label} out of range for this vertex")
    return site * d + label


def tree_children(site: TreeSite, d: int) -> list[TreeSite]:
    n = d if site == TREE_ROOT else d - 1
    return [site * d + i for i in range(n)]


def tree_site_from_labels(labels: Tuple[int, ...] | list[int], d: int) -> TreeSite:
    site = TREE_ROOT
    for lab in labels:
        site = tree_child(site, d, lab)
    return site


def tree_labels(site: TreeSite, d: int) -> Tuple[int, ...]:
    labels = []
    while site > 1:
        labels.append(site % d)
        site //= d
    return tuple(reversed(labels))


def is_tree_descendant(anc: TreeSite, desc: TreeSite, d: int) -> bool:
    while desc > anc:
        desc //= d
    return desc == anc


# ---------------------------------------------------------------------------
# Topology objects


class TreeTopology:
    def __init__(self, d: int):
        if d < 3:
            raise ConfigurationError("tree topology requires degree d >= 3")
        self.d = d

    def depth(self, site: TreeSite) -> int:
        return tree_depth(site, self.d)

    def parent(self, site: TreeSite) -> TreeSite:
        return tree_parent(site, self.d)

    def children(self, site: TreeSite) -> list[TreeSite]:
        return tree_children(site, self.d)

    def neighbors(self, site: TreeSite) -> list[TreeSite]:
        if site == TREE_ROOT:
            return self.children(site)
        return [self.parent(site)] + self.children(site)

    def adjacent(self, a: TreeSite, b: TreeSite) -> bool:
        return a // self.d == b or b // self.d == a


class LatticeTopology:
    """Z^d with unit steps; distance and boxes use the sup norm."""

    def __init__(self, d: int):
        if d < 1:
            raise ConfigurationError("lattice dimension must be >= 1")
        self.d = d

    def origin(self) -> LatticeSite:
        return (0,) * self.d

    def radius(self, site: LatticeSite) -> int:
        return max(abs(c) for c in site)

    def neighbors(self, site: LatticeSite) -> list[LatticeSite]:
        out = []
        for axis in range(self.d):
            for step in (1, -1):
                n = list(site)
                n[axis] += step
                out.append(tuple(n))
        return out

    def adjacent(self, a: LatticeSite, b: LatticeSite) -> bool:
        return sum(abs(x - y) for x, y in zip(a, b)) == 1

    def box_sites(self, R: int) -> Iterator[LatticeSite]:
        """All sites of the centered box of sup-norm radius R."""
        if self.d == 1:
            for x in range(-R, R + 1):
                yield (x,)
            return
        import itertools

        yield from itertools.product(range(-R, R + 1), repeat=self.d)


def make_topology(params: ModelParams):
    if params.topology is Topology.TREE:
        return TreeTopology(params.d)
    return LatticeTopology(params.d)
