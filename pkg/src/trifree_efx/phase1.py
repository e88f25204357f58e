"""Stage one: build a picking order and an initial partial orientation.

The picking order is grown from both ends.  Each round starts by moving the
lowest-id unplaced agent to the *back* of the order (she will pick late) and
then follows a chain of "most tempting partner" links: whenever the partner
an agent most wants to take goods from is itself unplaced, that partner is
placed at the *front* (picking early) and gets to claim first, possibly
redirecting the chain.  Every round places at least one agent and hands each
newly placed agent her claimable bundle from exactly one pair.

Between rounds the state keeps seven invariants (checkable one by one via
``check_invariants``): placed agents hold goods only among themselves (1),
unplaced agents hold nothing (2), the allocation is an orientation (3),
placed agents have no strong envy toward anyone (4), front agents envy
nobody (5), back agents do not envy each other (6), and the pair-structure
and free-bundle-preference properties hold for placed agents (7).

When no agents remain unplaced, the allocation satisfies the numbered
properties (1)-(4) of :mod:`.verify`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .cuts import CutTable, PickOrder, claimable
from .errors import InternalSolverError, StateError
from .model import Allocation, Instance
from .verify import check_properties, envy_graph, strong_envy_witness

TraceFn = Optional[Callable[[dict], None]]

INVARIANT_NAMES = {
    1: "placed agents hold goods only between placed agents",
    2: "unplaced agents hold nothing",
    3: "allocation is an orientation",
    4: "placed agents have no strong envy",
    5: "front agents envy nobody",
    6: "back agents do not envy each other",
    7: "pair structure and free-bundle preference hold for placed agents",
}


@dataclass
class SolverState:
    """Allocation, picking order and memoised pair splits, threaded through
    all three stages."""

    instance: Instance
    alloc: Allocation
    order: PickOrder
    cuts: CutTable

    @classmethod
    def fresh(cls, instance: Instance) -> "SolverState":
        return cls(
            instance=instance,
            alloc=Allocation(instance.n),
            order=PickOrder(instance.n),
            cuts=CutTable(instance),
        )

    def sigma(self) -> list[int]:
        return self.order.full_order()

    def claimable(self, i: int, j: int):
        return claimable(self.instance, self.alloc, self.order, self.cuts, i, j)


@dataclass
class InvariantViolation:
    code: int
    witness: tuple

    def __str__(self) -> str:
        return f"invariant ({self.code}) broken: {INVARIANT_NAMES[self.code]} at {self.witness}"


def _best_partner_on(instance, alloc, order, cuts, i) -> int:
    """The partner whose claimable bundle agent ``i`` values most.

    Runs over every agent: non-neighbours (and ``i`` herself) contribute an
    empty bundle worth 0, and ties go to the lowest id, so an agent with
    nothing of value to take resolves to herself and picks nothing.
    """
    best_j = -1
    best_val = -1
    value = instance.valuations[i].value
    for j in range(instance.n):
        val = value(claimable(instance, alloc, order, cuts, i, j))
        if val > best_val:
            best_j, best_val = j, val
    return best_j


def _best_partner(state: SolverState, i: int) -> Optional[int]:
    return _best_partner_on(state.instance, state.alloc, state.order, state.cuts, i)


@dataclass
class Phase1Stats:
    augment_calls: int = 0
    empty_picks: int = 0
    placements: int = 0


def augment(state: SolverState, *, stats: Optional[Phase1Stats] = None, trace: TraceFn = None) -> None:
    """Place at least one unplaced agent and hand new agents their bundles."""
    order, alloc = state.order, state.alloc
    if not order.unplaced:
        raise StateError("augment called with every agent already placed")
    if stats is not None:
        stats.augment_calls += 1

    def give(agent: int, goods) -> None:
        alloc.set_bundle(agent, goods)
        if stats is not None:
            stats.placements += 1
            if not goods:
                stats.empty_picks += 1
        if trace is not None:
            trace({"phase": 1, "event": "pick", "agent": agent, "goods": sorted(goods)})

    def round_snapshot() -> None:
        if trace is not None:
            trace(
                {
                    "phase": 1,
                    "event": "round",
                    "front": list(order.front),
                    "back": order.back,
                    "unplaced": sorted(order.unplaced),
                    "bundles": [
                        sorted(alloc.bundle(p)) for p in range(state.instance.n)
                    ],
                }
            )

    i = min(order.unplaced)
    order.prepend_back(i)
    j = _best_partner(state, i)
    while j in order.unplaced:
        order.append_front(j)
        k = _best_partner(state, j)
        if k == i:
            give(j, state.claimable(j, i))
            j = _best_partner(state, i)
        elif k not in order.unplaced:
            give(j, state.claimable(j, k))
            break
        else:
            give(j, state.claimable(j, k))
            give(i, state.claimable(i, j))
            i = k
            order.prepend_back(i)
            j = _best_partner(state, i)
    give(i, state.claimable(i, j))
    round_snapshot()


def check_invariants(state: SolverState) -> list[InvariantViolation]:
    """Check all seven between-round invariants; empty list means all hold."""
    instance, alloc, order = state.instance, state.alloc, state.order
    unplaced = order.unplaced
    placed = [p for p in range(instance.n) if p not in unplaced]
    out: list[InvariantViolation] = []

    for p in placed:
        for g in sorted(alloc.bundle(p)):
            good = instance.goods[g]
            if good.u in unplaced or good.v in unplaced:
                out.append(InvariantViolation(1, (p, g)))
    for u in sorted(unplaced):
        if alloc.bundle(u):
            out.append(InvariantViolation(2, (u, min(alloc.bundle(u)))))
    for i in range(instance.n):
        stray = alloc.bundle(i) - instance.incident_goods(i)
        if stray:
            out.append(InvariantViolation(3, (i, min(stray))))

    graph = envy_graph(instance, alloc)
    front = set(order.front)
    back = set(order.back)
    for edge in graph.edges:
        if edge.strong and edge.src in front | back:
            g = strong_envy_witness(
                instance, edge.src, alloc.bundle(edge.src), alloc.bundle(edge.dst)
            )
            out.append(InvariantViolation(4, (edge.src, edge.dst, g)))
        if edge.src in front:
            out.append(InvariantViolation(5, (edge.src, edge.dst)))
        if edge.src in back and edge.dst in back:
            out.append(InvariantViolation(6, (edge.src, edge.dst)))

    report = check_properties(
        instance, alloc, order, state.cuts, which={2, 3}, agents=placed
    )
    for prop, violations in report.failures.items():
        for v in violations:
            out.append(InvariantViolation(7, (prop,) + tuple(v)))
    return out


def run_phase1(
    instance: Instance,
    *,
    state: Optional[SolverState] = None,
    validate: bool = True,
    stats: Optional[Phase1Stats] = None,
    trace: TraceFn = None,
) -> SolverState:
    """Drive augmentation until every agent is placed.

    With ``validate`` set, the seven invariants are re-checked after every
    round and the numbered properties (1)-(4) are asserted on the result;
    the final allocation is also replayed greedily along the finished order,
    which must reproduce it exactly.
    """
    if state is None:
        state = SolverState.fresh(instance)
    stats = stats if stats is not None else Phase1Stats()
    while state.order.unplaced:
        before = len(state.order.unplaced)
        augment(state, stats=stats, trace=trace)
        if len(state.order.unplaced) >= before:
            raise InternalSolverError("a round failed to place any agent")
        if validate:
            bad = check_invariants(state)
            if bad:
                raise InternalSolverError(
                    "; ".join(str(v) for v in bad)
                )
    if stats.augment_calls > instance.n:
        raise InternalSolverError(
            f"{stats.augment_calls} rounds for {instance.n} agents"
        )
    report = check_properties(instance, state.alloc, state.order, state.cuts, which={1, 2, 3, 4})
    if not report.ok:
        raise InternalSolverError(f"stage-one output: {report.summary()}")
    if validate:
        replay = greedy_replay(state)
        if replay != state.alloc:
            raise InternalSolverError(
                "greedy replay along the finished order diverged from the allocation"
            )
    return state


def greedy_replay(state: SolverState) -> Allocation:
    """Re-pick along the finished order with the same fixed pair splits.

    Each agent takes the claimable bundle she values most at her turn; the
    result must coincide with the stage-one allocation.
    """
    instance = state.instance
    replay = Allocation(instance.n)
    for i in state.sigma():
        j = _best_partner_on(instance, replay, state.order, state.cuts, i)
        replay.set_bundle(
            i, claimable(instance, replay, state.order, state.cuts, i, j)
        )
    return replay
