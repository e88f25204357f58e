"""Two-way EFX splits of shared good sets, and the bookkeeping around them.

For every adjacent pair of agents the goods they share are split once, by a
designated endpoint (the *cutter*), into two parts such that the cutter does
not strongly envy either part against the other.  The two parts are the
pair's *unit bundles*: they are fixed for the rest of a solver run and are
always allocated atomically.

The split itself is computed by local search: starting from a deterministic
initial partition, while some part contains a good whose removal leaves that
part strictly more valuable than the other part, move such a good across.
A violation can only come from the strictly more valuable part, so each move
either raises the value of the lighter part or strictly shrinks the heavier
part while the lighter part's value stays put; the iteration count is
therefore at most ``len(goods) * (max value + 1)``.

For additive (and transformed-additive) valuations the initial partition is
a largest-first greedy split, which is already feasible, so the local search
performs zero moves; this is monitored rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import InternalSolverError, StateError
from .model import (
    EMPTY_BUNDLE,
    AdditiveValuation,
    Allocation,
    Bundle,
    Instance,
    MonotoneTableValuation,
)


@dataclass(frozen=True)
class PairCut:
    """The fixed two-way split of one pair's shared goods."""

    a: int  # endpoint, a < b
    b: int
    cutter: int  # in {a, b}
    first: Bundle
    second: Bundle

    def parts(self) -> tuple[Bundle, Bundle]:
        return (self.first, self.second)

    def other_part(self, part: Bundle) -> Bundle:
        return self.second if part == self.first else self.first


@dataclass
class CutStats:
    pair: tuple[int, int]
    cutter: int
    size: int
    moves: int
    additive: bool
    distinct_values: Optional[int] = None


def _feasibility_witness(value, p1: Bundle, p2: Bundle) -> Optional[tuple[int, int]]:
    """Return (part index, good) breaking the two-way EFX condition, if any."""
    for idx, (own, other) in enumerate(((p1, p2), (p2, p1))):
        v_own = value(own)
        for g in other:
            if value(other - {g}) > v_own:
                return (1 - idx, g)
    return None


def _largest_first_split(weights: dict[int, int], goods: Bundle) -> tuple[set[int], set[int]]:
    part1: set[int] = set()
    part2: set[int] = set()
    s1 = s2 = 0
    for g in sorted(goods, key=lambda g: (-weights[g], g)):
        if s1 <= s2:
            part1.add(g)
            s1 += weights[g]
        else:
            part2.add(g)
            s2 += weights[g]
    return part1, part2


def _rebalance(value, p1: set[int], p2: set[int], cap: int) -> int:
    """Local-search until both parts are feasible; returns the move count."""
    moves = 0
    while True:
        v1, v2 = value(p1), value(p2)
        ordered = ((p1, p2, v2), (p2, p1, v1)) if v1 >= v2 else ((p2, p1, v1), (p1, p2, v2))
        best = None  # (remainder value, -good) maximised
        src = dst = None
        for a, b, v_other in ordered:
            for g in a:
                rem = value(a - {g})
                if rem > v_other and (best is None or (rem, -g) > best):
                    best = (rem, -g)
                    src, dst = a, b
            if best is not None:
                break
        if best is None:
            return moves
        g = -best[1]
        src.discard(g)
        dst.add(g)
        moves += 1
        if moves > cap:
            raise InternalSolverError(
                f"two-way split local search exceeded its move cap of {cap}"
            )


def efx_cut(instance: Instance, cutter: int, goods: Bundle) -> tuple[Bundle, Bundle]:
    """Split ``goods`` (incident to ``cutter``) into two EFX-feasible parts."""
    parts, _ = _efx_cut_with_moves(instance, cutter, goods)
    return parts


def _efx_cut_with_moves(
    instance: Instance, cutter: int, goods: Bundle
) -> tuple[tuple[Bundle, Bundle], int]:
    if not goods <= instance.incident_goods(cutter):
        raise StateError(
            f"cut request for agent {cutter} contains non-incident goods"
        )
    valuation = instance.valuations[cutter]
    value = valuation.value
    if not goods:
        return (EMPTY_BUNDLE, EMPTY_BUNDLE), 0
    if isinstance(valuation, AdditiveValuation):
        # covers transformed_additive too: the transform preserves order,
        # so greedy placement by raw weight is unchanged
        p1, p2 = _largest_first_split(valuation.weights, goods)
    else:
        p1, p2 = set(goods), set()
    cap = len(goods) * (value(goods) + 1) + 1
    moves = _rebalance(value, p1, p2, cap)
    f1, f2 = frozenset(p1), frozenset(p2)
    witness = _feasibility_witness(value, f1, f2)
    if witness is not None:
        raise InternalSolverError(
            f"cut for agent {cutter} failed its feasibility post-check "
            f"at part {witness[0]}, good {witness[1]}"
        )
    return (f1, f2), moves


class CutTable:
    """Memoised pair splits for one solver run (single writer)."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self._memo: dict[tuple[int, int, int], PairCut] = {}
        self.stats: list[CutStats] = []

    def cut(self, i: int, j: int, cutter: int) -> PairCut:
        a, b = (i, j) if i < j else (j, i)
        if cutter not in (a, b):
            raise StateError(f"cutter {cutter} is not an endpoint of pair ({a},{b})")
        key = (a, b, cutter)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        goods = self.instance.pair_goods(a, b)
        (first, second), moves = _efx_cut_with_moves(self.instance, cutter, goods)
        cut = PairCut(a, b, cutter, first, second)
        self._memo[key] = cut
        valuation = self.instance.valuations[cutter]
        distinct = None
        if isinstance(valuation, MonotoneTableValuation) and len(goods) <= 16:
            distinct = len(_distinct_subset_values(valuation, goods))
        self.stats.append(
            CutStats(
                pair=(a, b),
                cutter=cutter,
                size=len(goods),
                moves=moves,
                additive=isinstance(valuation, AdditiveValuation),
                distinct_values=distinct,
            )
        )
        return cut

    def fixed_cuts(self) -> list[PairCut]:
        return list(self._memo.values())


def _distinct_subset_values(valuation, goods: Bundle) -> set[int]:
    order = sorted(goods)
    vals = set()
    for mask in range(1 << len(order)):
        subset = frozenset(order[k] for k in range(len(order)) if mask >> k & 1)
        vals.add(valuation.value(subset))
    return vals


class PickOrder:
    """A picking order under construction.

    The order is built from both ends: a fixed ``front`` (earliest picks), a
    fixed ``back`` (latest picks), and an undetermined middle of unplaced
    agents.  The relative position of two agents is known unless both are
    still unplaced.
    """

    def __init__(self, n: int):
        self.n = n
        self.front: list[int] = []
        self._back_rev: list[int] = []  # placement order; sigma order is reversed
        self.unplaced: set[int] = set(range(n))
        self._front_pos: dict[int, int] = {}
        self._back_pos: dict[int, int] = {}

    @classmethod
    def complete(cls, order: Sequence[int]) -> "PickOrder":
        po = cls(len(order))
        if sorted(order) != list(range(len(order))):
            raise StateError("a complete order must be a permutation of the agents")
        for i in order:
            po.append_front(i)
        return po

    def append_front(self, i: int) -> None:
        self.unplaced.remove(i)
        self._front_pos[i] = len(self.front)
        self.front.append(i)

    def prepend_back(self, i: int) -> None:
        self.unplaced.remove(i)
        self._back_pos[i] = len(self._back_rev)
        self._back_rev.append(i)

    @property
    def back(self) -> list[int]:
        return list(reversed(self._back_rev))

    def determined(self, a: int, b: int) -> bool:
        return not (a in self.unplaced and b in self.unplaced)

    def _rank(self, i: int) -> tuple[int, int]:
        if i in self._front_pos:
            return (0, self._front_pos[i])
        if i in self._back_pos:
            # later placements into the back come earlier in the order
            return (2, -self._back_pos[i])
        return (1, 0)

    def precedes(self, a: int, b: int) -> bool:
        if not self.determined(a, b):
            raise StateError(
                f"relative order of agents {a} and {b} is not determined yet"
            )
        return self._rank(a) < self._rank(b)

    def later(self, a: int, b: int) -> int:
        return b if self.precedes(a, b) else a

    def full_order(self) -> list[int]:
        if self.unplaced:
            raise StateError("order is not complete yet")
        return self.front + self.back


def pair_configuration(
    instance: Instance, order: PickOrder, cuts: CutTable, i: int, j: int
) -> PairCut:
    """The pair's fixed split: cut by whichever endpoint picks later."""
    return cuts.cut(i, j, order.later(i, j))


def claimable(
    instance: Instance,
    alloc: Allocation,
    order: PickOrder,
    cuts: CutTable,
    i: int,
    j: int,
) -> Bundle:
    """Goods of the pair ``(i, j)`` that agent ``i`` may still take.

    * nothing of the pair allocated: the unit bundle ``i`` values most
      (ties prefer the split's first part);
    * only ``j`` holds from the pair: the remaining unit bundle;
    * ``i`` already holds from the pair (or both do): nothing.

    Any other pair state (a torn unit bundle, a third party holding pair
    goods) never arises in a valid run and raises ``StateError``.
    """
    goods = instance.pair_goods(i, j)
    if not goods:
        return EMPTY_BUNDLE
    cut = pair_configuration(instance, order, cuts, i, j)
    held_i = alloc.bundle(i) & goods
    held_j = alloc.bundle(j) & goods
    taken = {g for g in goods if alloc.is_allocated(g)}
    if taken != held_i | held_j:
        raise StateError(
            f"goods of pair ({i},{j}) are held by an agent outside the pair"
        )
    for held, who in ((held_i, i), (held_j, j)):
        if held and held not in cut.parts():
            raise StateError(
                f"agent {who} holds a torn unit bundle of pair ({cut.a},{cut.b})"
            )
    if not taken:
        vi = instance.valuations[i].value
        return cut.first if vi(cut.first) >= vi(cut.second) else cut.second
    if not held_i and held_j:
        return goods - held_j
    return EMPTY_BUNDLE


@dataclass
class FreeUnits:
    """Per-agent labelling of the unallocated unit bundles beside her.

    For each adjacent pair exactly one of these cases applies:

    * the agent holds one of the pair's unit bundles: both labels are empty;
    * both unit bundles are free: one becomes the agent's primary label and
      the other her secondary, assigned so that the two endpoints' labels
      cross (the lower-id endpoint's primary is the split's first part);
    * exactly one unit bundle is free (and not hers): both labels name it;
    * everything of the pair is taken by others: both labels are empty.
    """

    primary: dict[int, dict[int, Bundle]] = field(default_factory=dict)
    secondary: dict[int, dict[int, Bundle]] = field(default_factory=dict)

    def primary_of(self, i: int, j: int) -> Bundle:
        return self.primary.get(i, {}).get(j, EMPTY_BUNDLE)

    def secondary_of(self, i: int, j: int) -> Bundle:
        return self.secondary.get(i, {}).get(j, EMPTY_BUNDLE)

    def primary_union(self, i: int) -> Bundle:
        return frozenset().union(*self.primary.get(i, {}).values() or (EMPTY_BUNDLE,))

    def secondary_union(self, i: int) -> Bundle:
        return frozenset().union(*self.secondary.get(i, {}).values() or (EMPTY_BUNDLE,))


def free_units(
    instance: Instance,
    alloc: Allocation,
    order: PickOrder,
    cuts: CutTable,
    *,
    strict: bool = True,
) -> FreeUnits:
    """Compute the free-unit labelling for every adjacent ordered pair.

    With ``strict`` set, pair goods held by a third party are rejected
    (they cannot appear while the allocation is still an orientation).
    """
    units = FreeUnits()
    for a, b in instance.skeleton_edges():
        goods = instance.pair_goods(a, b)
        cut = cuts.cut(a, b, order.later(a, b))
        held_a = alloc.bundle(a) & goods
        held_b = alloc.bundle(b) & goods
        taken = {g for g in goods if alloc.is_allocated(g)}
        if strict and taken != held_a | held_b:
            raise StateError(
                f"goods of pair ({a},{b}) are held by an agent outside the pair"
            )
        free_first = not (cut.first & taken)
        free_second = not (cut.second & taken)
        for i, j, held in ((a, b, held_a), (b, a, held_b)):
            if held:
                primary = secondary = EMPTY_BUNDLE
            elif free_first and free_second:
                if i < j:
                    primary, secondary = cut.first, cut.second
                else:
                    primary, secondary = cut.second, cut.first
            elif free_first:
                primary = secondary = cut.first
            elif free_second:
                primary = secondary = cut.second
            else:
                primary = secondary = EMPTY_BUNDLE
            units.primary.setdefault(i, {})[j] = primary
            units.secondary.setdefault(i, {})[j] = secondary
    return units
