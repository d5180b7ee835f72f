"""Constraint library.

Each propagator pairs a filtering routine (domain-reducing, run inside the
engine's fixpoint loop) with a semantic ground checker over total
assignments. Filtering levels are fixed: eq_offset and element are domain
consistent on their pruned side, less_than and sum_leq are bounds
consistent, all_different does forward checking plus a pigeonhole test.
Positions and values are 1-based throughout.

`weight` is the failure counter used by weighted-degree heuristics: it
starts at 1 and is incremented by the engine each time this propagator
reports a failure.
"""

from __future__ import annotations

from typing import Sequence


class Propagator:
    kind = "abstract"
    cost_tier = 0  # heavy propagators use 1: queued after cheap ones settle

    __slots__ = ("scope", "weight")

    def __init__(self, scope: Sequence[int]):
        self.scope = tuple(scope)
        self.weight = 1

    def filter(self, store) -> bool:
        """Reduce domains; False on wipeout or detected inconsistency."""
        raise NotImplementedError

    def check(self, values: Sequence[int]) -> bool:
        """True iff the total assignment (indexed by VarId) satisfies the
        constraint's relation."""
        raise NotImplementedError

    def wake_spec(self) -> list:
        """(var, mask) wake conditions: requeue when a removal from `var`
        intersects `mask` (None = any removal)."""
        return [(v, None) for v in self.scope]

    def wake_on_assign(self) -> tuple:
        """(var, mask) pairs: requeue when `var` becomes assigned to a value
        in `mask` (None = any value), on top of the wake_spec conditions."""
        return ()

    def describe(self) -> str:
        return f"{self.kind}({', '.join(map(str, self.scope))})"


class EqOffset(Propagator):
    """x = y + c, domain consistent."""

    kind = "eq_offset"
    __slots__ = ("x", "y", "c")

    def __init__(self, x: int, y: int, c: int):
        super().__init__((x, y))
        self.x = x
        self.y = y
        self.c = c

    def filter(self, store) -> bool:
        doms = store.doms
        c = self.c
        dy = doms[self.y]
        shifted = dy << c if c >= 0 else dy >> -c
        dx = doms[self.x]
        nd = dx & shifted
        if nd != dx and not store.commit(self.x, nd):
            return False
        dx = doms[self.x]
        shifted = dx >> c if c >= 0 else dx << -c
        nd = dy & shifted
        if nd != dy and not store.commit(self.y, nd):
            return False
        return True

    def check(self, values) -> bool:
        return values[self.x] == values[self.y] + self.c


class LessThan(Propagator):
    """x < y, bounds consistent."""

    kind = "less_than"
    __slots__ = ("x", "y")

    def __init__(self, x: int, y: int):
        super().__init__((x, y))
        self.x = x
        self.y = y

    def filter(self, store) -> bool:
        doms = store.doms
        dy = doms[self.y]
        dx = doms[self.x]
        nd = dx & ((1 << (dy.bit_length() - 1)) - 1)  # keep v < max(y)
        if nd != dx and not store.commit(self.x, nd):
            return False
        dx = doms[self.x]
        min_x = (dx & -dx).bit_length() - 1
        nd = dy & ~((1 << (min_x + 1)) - 1)  # keep v > min(x)
        if nd != dy and not store.commit(self.y, nd):
            return False
        return True

    def check(self, values) -> bool:
        return values[self.x] < values[self.y]


class SumLeq(Propagator):
    """x + y <= c, bounds consistent."""

    kind = "sum_leq"
    __slots__ = ("x", "y", "c")

    def __init__(self, x: int, y: int, c: int):
        super().__init__((x, y))
        self.x = x
        self.y = y
        self.c = c

    def filter(self, store) -> bool:
        doms = store.doms
        dy = doms[self.y]
        limit = self.c - ((dy & -dy).bit_length() - 1)
        dx = doms[self.x]
        nd = dx & ((1 << (limit + 1)) - 1) if limit >= 0 else 0
        if nd != dx and not store.commit(self.x, nd):
            return False
        dx = doms[self.x]
        limit = self.c - ((dx & -dx).bit_length() - 1)
        nd = dy & ((1 << (limit + 1)) - 1) if limit >= 0 else 0
        if nd != dy and not store.commit(self.y, nd):
            return False
        return True

    def check(self, values) -> bool:
        return values[self.x] + values[self.y] <= self.c


class AllDifferent(Propagator):
    """Pairwise-distinct values; forward checking plus a pigeonhole test."""

    kind = "all_different"
    __slots__ = ()

    def __init__(self, variables: Sequence[int]):
        if len(variables) < 2:
            raise ValueError("all_different needs at least two variables")
        super().__init__(variables)

    def filter(self, store) -> bool:
        doms = store.doms
        scope = self.scope
        while True:
            assigned = 0
            for v in scope:
                d = doms[v]
                if d & (d - 1) == 0:
                    if d & assigned:
                        return False  # two variables share one value
                    assigned |= d
            progressed = False
            for v in scope:
                d = doms[v]
                if d & (d - 1):
                    nd = d & ~assigned
                    if nd != d:
                        if not store.commit(v, nd):
                            return False
                        progressed = True
            if not progressed:
                break
        union = 0
        for v in scope:
            union |= doms[v]
        return union.bit_count() >= len(scope)

    def check(self, values) -> bool:
        seen = set()
        for v in self.scope:
            if values[v] in seen:
                return False
            seen.add(values[v])
        return True


class ElementOffsetConst(Propagator):
    """array[index + offset] = c, with 1-based positions into `array`.

    Prunes index positions whose target cell cannot hold c (or falls outside
    the array); once the index is assigned, fixes the target cell to c.
    """

    kind = "element_offset_const"
    __slots__ = ("array", "index", "offset", "value", "targets")

    def __init__(self, array: Sequence[int], index: int, offset: int, value: int):
        super().__init__((*array, index))
        self.array = tuple(array)
        self.index = index
        self.offset = offset
        self.value = value
        # targets[p] = cell holding position p + offset, -1 when out of range;
        # sized so every in-range p fits even for negative offsets
        highest = len(array) - min(offset, 0)
        targets = [-1] * (highest + 1)
        for p in range(1, highest + 1):
            pos = p + offset
            if 1 <= pos <= len(array):
                targets[p] = array[pos - 1]
        self.targets = tuple(targets)

    def filter(self, store) -> bool:
        doms = store.doms
        targets = self.targets
        num_targets = len(targets)
        value_bit = 1 << self.value
        d = doms[self.index]
        if d & (d - 1) == 0:  # index assigned: only the target cell matters
            p = d.bit_length() - 1
            tv = targets[p] if p < num_targets else -1
            if tv < 0:
                return store.commit(self.index, 0)
            dt = doms[tv]
            if dt & value_bit:
                return dt == value_bit or store.commit(tv, value_bit)
            return store.commit(self.index, 0)
        allowed = 0
        rest = d
        while rest:
            low = rest & -rest
            rest ^= low
            p = low.bit_length() - 1
            if p < num_targets:
                tv = targets[p]
                if tv >= 0 and doms[tv] & value_bit:
                    allowed |= low
        if allowed != d and not store.commit(self.index, allowed):
            return False
        if allowed & (allowed - 1) == 0:  # index newly assigned
            target = self.targets[allowed.bit_length() - 1]
            dt = doms[target]
            if dt != value_bit and not store.commit(target, dt & value_bit):
                return False
        return True

    def check(self, values) -> bool:
        pos = values[self.index] + self.offset
        return 1 <= pos <= len(self.array) and values[self.array[pos - 1]] == self.value

    def wake_spec(self) -> list:
        # Array cells matter only when they lose this constraint's value.
        # Index positions never lose support by leaving the index domain, so
        # plain index shrinkage needs no rescan, only full assignment does.
        bit = 1 << self.value
        return [(cell, bit) for cell in self.array]

    def wake_on_assign(self) -> tuple:
        return ((self.index, None),)


class Occurrence(Propagator):
    """Exactly `count` of the variables take `value`."""

    kind = "occurrence"
    __slots__ = ("value", "count")

    def __init__(self, variables: Sequence[int], value: int, count: int):
        if count < 0:
            raise ValueError("occurrence count must be non-negative")
        super().__init__(variables)
        self.value = value
        self.count = count

    def filter(self, store) -> bool:
        doms = store.doms
        bit = 1 << self.value
        assigned = 0
        possible = 0
        for v in self.scope:
            d = doms[v]
            if d & bit:
                possible += 1
                if d == bit:
                    assigned += 1
        if assigned > self.count or possible < self.count:
            return False
        if assigned == self.count and possible > assigned:
            for v in self.scope:
                d = doms[v]
                if d & bit and d != bit:
                    if not store.commit(v, d & ~bit):
                        return False
        elif possible == self.count and assigned < possible:
            for v in self.scope:
                d = doms[v]
                if d & bit and d != bit:
                    if not store.commit(v, bit):
                        return False
        return True

    def check(self, values) -> bool:
        return sum(1 for v in self.scope if values[v] == self.value) == self.count

    def wake_spec(self) -> list:
        # The possible-count only moves when this value is removed somewhere;
        # the assigned-count only moves when a variable lands on this value.
        bit = 1 << self.value
        return [(v, bit) for v in self.scope]

    def wake_on_assign(self) -> tuple:
        bit = 1 << self.value
        return tuple((v, bit) for v in self.scope)


class InverseChannel(Propagator):
    """Two-way link between sequence cells and per-(number, repetition)
    position slots.

    With slots[m][j] holding the position of the j-th copy of number m and
    seq[i] the number at position i, maintains:
      (a) a number survives in seq[i] only while some of its slots can be i,
      (b) a slot keeps position i only while seq[i] can hold its number,
      (c) an assigned slot fixes its sequence cell,
      (d) an assigned cell with a single supporting slot fixes that slot.
    """

    kind = "inverse_channel"
    cost_tier = 1
    __slots__ = ("slots", "seq", "n", "k")

    def __init__(self, slots: Sequence[Sequence[int]], seq: Sequence[int]):
        n = len(slots)
        k = len(slots[0]) if n else 0
        if any(len(row) != k for row in slots):
            raise ValueError("slot matrix must be rectangular")
        if len(seq) != n * k:
            raise ValueError("sequence length must be n*k")
        flat = [v for row in slots for v in row]
        super().__init__((*flat, *seq))
        self.slots = tuple(tuple(row) for row in slots)
        self.seq = tuple(seq)
        self.n = n
        self.k = k

    def filter(self, store) -> bool:
        doms = store.doms
        n = self.n
        seq = self.seq
        slots = self.slots
        kn = len(seq)

        unions = []
        for row in slots:
            u = 0
            for sv in row:
                u |= doms[sv]
            unions.append(u)
        for i in range(1, kn + 1):
            cell = seq[i - 1]
            d = doms[cell]
            allowed = 0
            number_bit = 2
            for u in unions:
                if (u >> i) & 1:
                    allowed |= number_bit
                number_bit <<= 1
            nd = d & allowed
            if nd != d and not store.commit(cell, nd):
                return False

        number_bit = 2
        for row in slots:
            positions = 0
            position_bit = 2
            for cell in seq:
                if doms[cell] & number_bit:
                    positions |= position_bit
                position_bit <<= 1
            for sv in row:
                d = doms[sv]
                nd = d & positions
                if nd != d and not store.commit(sv, nd):
                    return False
            number_bit <<= 1

        number_bit = 2
        for row in slots:
            for sv in row:
                d = doms[sv]
                if d and d & (d - 1) == 0:
                    cell = seq[d.bit_length() - 2]
                    dc = doms[cell]
                    if dc != number_bit and not store.commit(cell, dc & number_bit):
                        return False
            number_bit <<= 1

        for i in range(1, kn + 1):
            d = doms[seq[i - 1]]
            if d and d & (d - 1) == 0:
                row = slots[d.bit_length() - 2]
                support = -1
                for sv in row:
                    if (doms[sv] >> i) & 1:
                        if support >= 0:
                            support = -2  # more than one slot still open
                            break
                        support = sv
                if support == -1:
                    return False
                if support >= 0:
                    ds = doms[support]
                    bit = 1 << i
                    if ds != bit and not store.commit(support, ds & bit):
                        return False
        return True

    def check(self, values) -> bool:
        kn = self.n * self.k
        for m0, row in enumerate(self.slots):
            for sv in row:
                i = values[sv]
                if not (1 <= i <= kn) or values[self.seq[i - 1]] != m0 + 1:
                    return False
        for i in range(1, kn + 1):
            m = values[self.seq[i - 1]]
            if not (1 <= m <= self.n):
                return False
            if all(values[sv] != i for sv in self.slots[m - 1]):
                return False
        return True
