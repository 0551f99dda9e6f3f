"""Event-driven evolution of the two-type competition process.

Semantics (shared by this reference engine and the compiled cores in
_fast.py):

* A type-1 occupation attempt along an edge fires t1 after the source
  became type 1 and succeeds iff the target is vacant AND the source is
  still type 1 when the attempt fires.  A site that converted (or was
  taken over) before the attempt no longer passes type 1 -- this is what
  makes "closed" sites (conversion clock below every incident type-1
  clock) unable to spread, and it makes extinction exact: type 1 is dead
  as soon as its live count reaches zero.
* Type-2 attempts always fire (a type-2 site stays type 2 forever) and
  succeed on vacant or type-1 targets.
* Conversion turns a type-1 site into type 2 (its own progenitor).
* In resample mode (lattice) a type-2 attempt whose target became type 1
  strictly after the attempt was scheduled is pushed back to
  tau1(target) + t3(edge), once per directed edge.

Ties are broken by (time, Convert < Arrive2 < Arrive1, target id), so
replays are bitwise deterministic even with forced clock values.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

from .field import ClockKind, RandomField
from .model import (
    ClockMode,
    LatticeTopology,
    ModelParams,
    SiteId,
    Topology,
    TreeTopology,
    TREE_ROOT,
    make_topology,
)


class InternalInvariantError(RuntimeError):
    """The engine reached a state its invariants forbid; the trial is a bug."""


class SiteState(enum.IntEnum):
    VACANT = 0
    TYPE1 = 1
    TYPE2 = 2


class EventKind(enum.IntEnum):
    CONVERT = 0
    ARRIVE2 = 1
    ARRIVE1 = 2


class Verdict(enum.Enum):
    SURVIVED = "survived"
    EXTINCT = "extinct"
    CAPPED = "capped"


class SiteRecord:
    """Occupation record of one visited site."""

    __slots__ = ("state", "tau1", "tau2", "parent", "reach", "hstate")

    def __init__(self, state, tau1, tau2, parent, reach, hstate):
        self.state = state
        self.tau1 = tau1
        self.tau2 = tau2
        self.parent = parent
        self.reach = reach  # depth (tree) or sup-norm radius (lattice)
        self.hstate = hstate


@dataclass(frozen=True)
class Caps:
    max_sites: int = 20_000_000
    max_events: int = 100_000_000
    horizon: float = 10_000.0

    def __post_init__(self):
        if self.max_sites <= 0 or self.max_events <= 0 or self.horizon <= 0:
            raise ValueError("caps must be positive")


@dataclass(frozen=True)
class TrialOutcome:
    verdict: Verdict
    stop_time: float
    max_depth_or_radius: int
    events_processed: int
    conversions: int
    occupied_sites: int
    approximate: bool = False


# Event heap entries: (time, kind, target, source, sched_time)


class WorldState:
    """Occupation map, pending-event queue and running counters of one trial."""

    def __init__(self, params: ModelParams, field: RandomField, target: int, caps: Caps,
                 prune_gap: int = 0):
        self.params = params
        self.field = field
        self.target = target
        self.caps = caps
        self.prune_gap = prune_gap
        self.topology = make_topology(params)
        self.occupation: dict[SiteId, SiteRecord] = {}
        self.queue: list = []
        self.clock = 0.0
        self.n_type1 = 0
        self.n_occupied = 0
        self.events_processed = 0
        self.conversions = 0
        self.max_reach = 0
        self.verdict: Optional[Verdict] = None
        self.stop_time = 0.0

    # -- helpers -----------------------------------------------------------

    def _is_tree(self) -> bool:
        return self.params.topology is Topology.TREE

    def _reach(self, site: SiteId) -> int:
        if self._is_tree():
            return self.topology.depth(site)
        return max(abs(c) for c in site) if site else 0

    def _state_of(self, site: SiteId) -> int:
        rec = self.occupation.get(site)
        return rec.state if rec is not None else SiteState.VACANT

    def _hstate(self, site: SiteId, parent_rec: Optional[SiteRecord]) -> int:
        fld = self.field
        if not self._is_tree():
            return fld.lattice_site_state(site)
        if site == TREE_ROOT:
            return fld.tree_root_state()
        if parent_rec is not None:
            return fld.tree_child_state(parent_rec.hstate, site % self.params.d)
        return fld.tree_site_state(site)

    def _push(self, time: float, kind: EventKind, target: SiteId, source: SiteId,
              sched: float) -> None:
        heapq.heappush(self.queue, (time, int(kind), target, source, sched))

    # -- occupation transitions -------------------------------------------

    def _occupy_type1(self, site: SiteId, t: float, parent: SiteId) -> None:
        parent_rec = self.occupation.get(parent) if site != parent else None
        reach = self._reach(site)
        rec = SiteRecord(SiteState.TYPE1, t, None, parent, reach, self._hstate(site, parent_rec))
        self.occupation[site] = rec
        self.n_type1 += 1
        self.n_occupied += 1
        if reach > self.max_reach:
            self.max_reach = reach
        if reach >= self.target:
            self.verdict = Verdict.SURVIVED
            self.stop_time = t
            return
        if self.params.rho > 0:
            self._push(t + self.field.conv_clock(site), EventKind.CONVERT, site, site, t)
        self._schedule_spread(site, rec, t, type1=True)

    def _make_type2(self, site: SiteId, t: float, parent: SiteId, by_conversion: bool) -> None:
        rec = self.occupation.get(site)
        if rec is None:
            reach = self._reach(site)
            parent_rec = self.occupation.get(parent)
            rec = SiteRecord(SiteState.TYPE2, None, t, parent, reach,
                             self._hstate(site, parent_rec))
            self.occupation[site] = rec
            self.n_occupied += 1
        else:
            if rec.state == SiteState.TYPE1:
                self.n_type1 -= 1
            rec.state = SiteState.TYPE2
            rec.tau2 = t
            rec.parent = parent
        if by_conversion:
            self.conversions += 1
        self._schedule_spread(site, rec, t, type1=False)

    def _schedule_spread(self, site: SiteId, rec: SiteRecord, t: float, type1: bool) -> None:
        fld = self.field
        if self._is_tree():
            topo: TreeTopology = self.topology
            d = self.params.d
            # type-2 attempts are scheduled only toward sites currently
            # holding type 1.  On a tree this is exact: a vacant neighbor
            # of a type-2 site can never become type 1 (the unique path
            # into its subtree is blocked), so spread into vacant
            # territory cannot influence the race in any way
            for child in topo.children(site):
                cst = self._state_of(child)
                if (cst != SiteState.VACANT) if type1 else (cst != SiteState.TYPE1):
                    continue
                cstate = fld.tree_child_state(rec.hstate, child % d)
                kind = ClockKind.T1 if type1 else ClockKind.TD
                dt = fld.tree_edge_clock(kind, child, cstate)
                self._push(t + dt, EventKind.ARRIVE1 if type1 else EventKind.ARRIVE2,
                           child, site, t)
            if site != TREE_ROOT:
                par = topo.parent(site)
                pst = self._state_of(par)
                if (pst == SiteState.VACANT) if type1 else (pst == SiteState.TYPE1):
                    kind = ClockKind.T1 if type1 else ClockKind.TU
                    dt = fld.tree_edge_clock(kind, site, rec.hstate)
                    self._push(t + dt, EventKind.ARRIVE1 if type1 else EventKind.ARRIVE2,
                               par, site, t)
        else:
            topo: LatticeTopology = self.topology
            for nbr in topo.neighbors(site):
                if max(abs(c) for c in nbr) > self.target:
                    continue  # absorbing box boundary
                if self._state_of(nbr) >= (SiteState.TYPE1 if type1 else SiteState.TYPE2):
                    continue
                kind = ClockKind.T1 if type1 else ClockKind.T2
                dt = fld.lattice_edge_clock(kind, site, nbr)
                if math.isinf(dt):
                    continue
                self._push(t + dt, EventKind.ARRIVE1 if type1 else EventKind.ARRIVE2,
                           nbr, site, t)


def init_trial(params: ModelParams, field: RandomField, target: int,
               caps: Caps = Caps(), prune_gap: int = 0) -> WorldState:
    """Fresh world with the root/origin occupied by type 1 at time 0."""
    state = WorldState(params, field, target, caps, prune_gap)
    start = TREE_ROOT if params.topology is Topology.TREE else (0,) * params.d
    state._occupy_type1(start, 0.0, start)
    return state


def process_next_event(state: WorldState) -> str:
    """Pop and apply the earliest pending event; returns an effect tag."""
    if not state.queue:
        raise InternalInvariantError("event queue is empty")
    t, kind, target, source, sched = heapq.heappop(state.queue)
    state.clock = t
    state.events_processed += 1
    kind = EventKind(kind)
    if kind == EventKind.ARRIVE1:
        src = state.occupation.get(source)
        if src is None or src.state != SiteState.TYPE1:
            return "arrive1-source-gone"
        if state._state_of(target) != SiteState.VACANT:
            return "arrive1-suppressed"
        if state.prune_gap and state.params.topology is Topology.TREE:
            if state._reach(target) < state.max_reach - state.prune_gap:
                return "arrive1-pruned"
        state._occupy_type1(target, t, source)
        return "arrive1-success"
    if kind == EventKind.ARRIVE2:
        rec = state.occupation.get(target)
        if rec is not None and rec.state == SiteState.TYPE2:
            return "arrive2-suppressed"
        if (state.params.clock_mode is ClockMode.RESAMPLE
                and rec is not None and rec.state == SiteState.TYPE1
                and rec.tau1 > sched):
            dt = state.field.lattice_edge_clock(ClockKind.T3, source, target)
            state._push(rec.tau1 + dt, EventKind.ARRIVE2, target, source, rec.tau1)
            return "arrive2-rescheduled"
        state._make_type2(target, t, source, by_conversion=False)
        return "arrive2-success"
    # conversion
    rec = state.occupation.get(target)
    if rec is None:
        raise InternalInvariantError("conversion fired at a vacant site")
    if rec.state == SiteState.TYPE2:
        return "convert-noop"
    state._make_type2(target, t, target, by_conversion=True)
    return "convert-success"


def _finish(state: WorldState) -> TrialOutcome:
    return TrialOutcome(
        verdict=state.verdict,
        stop_time=state.stop_time,
        max_depth_or_radius=state.max_reach,
        events_processed=state.events_processed,
        conversions=state.conversions,
        occupied_sites=state.n_occupied,
        approximate=state.prune_gap > 0,
    )


def run_trial_state(params: ModelParams, field: RandomField, target: int,
                    caps: Caps = Caps(), prune_gap: int = 0) -> tuple[TrialOutcome, WorldState]:
    """Run a full trial in the reference engine, returning the final world."""
    state = init_trial(params, field, target, caps, prune_gap)
    while state.verdict is None:
        if not state.queue:
            if state.n_type1 != 0:
                raise InternalInvariantError("queue drained with live type-1 sites")
            state.verdict = Verdict.EXTINCT
            state.stop_time = state.clock
            break
        if state.events_processed >= caps.max_events or state.n_occupied >= caps.max_sites:
            state.verdict = Verdict.CAPPED
            state.stop_time = state.clock
            break
        if state.queue[0][0] > caps.horizon:
            state.verdict = Verdict.CAPPED
            state.stop_time = caps.horizon
            break
        process_next_event(state)
        if state.verdict is None and state.n_type1 == 0:
            state.verdict = Verdict.EXTINCT
            state.stop_time = state.clock
    return _finish(state), state


def run_trial(params: ModelParams, field: RandomField, target: int,
              caps: Caps = Caps(), prune_gap: int = 0,
              engine: str = "auto") -> TrialOutcome:
    """Run one trial to a verdict.

    engine="fast" uses the compiled core (requires packed int64 site ids
    and an unmodified RandomField); "python" forces the reference
    implementation; "auto" picks the fast core when it applies.
    """
    if engine not in ("auto", "fast", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    use_fast = False
    if engine in ("auto", "fast"):
        use_fast = _fast_core_applies(params, field, target)
        if engine == "fast" and not use_fast:
            raise ValueError("fast core does not apply to this configuration")
    if use_fast:
        from . import _cores

        return _cores.run_trial_fast(params, field, target, caps, prune_gap)
    outcome, _ = run_trial_state(params, field, target, caps, prune_gap)
    return outcome


def _fast_core_applies(params: ModelParams, field: RandomField, target: int) -> bool:
    if type(field) is not RandomField:
        return False  # forced/overridden clock fields need the reference engine
    if params.topology is Topology.TREE:
        # packed ids must fit int64
        return (target + 1) * math.log2(params.d) <= 62
    return (2 * target + 1) ** params.d < 2 ** 62


def progenitor_of(state: WorldState, site: SiteId) -> SiteId:
    """Walk type-2 parent links back to the conversion that started the chain."""
    rec = state.occupation.get(site)
    if rec is None or rec.state != SiteState.TYPE2:
        raise ValueError("progenitors are defined for type-2 sites only")
    seen = set()
    while rec.parent != site:
        if site in seen:
            raise InternalInvariantError("progenitor chain has a cycle")
        seen.add(site)
        site = rec.parent
        rec = state.occupation[site]
        if rec.state != SiteState.TYPE2:
            raise InternalInvariantError("progenitor chain left the type-2 region")
    return site
