"""Finite-domain backtracking core.

Bitmask domains, a trailed store with bit-exact restore, propagation to
fixpoint over a propagator queue, and all-solution depth-first search with
2-way (assign / remove-min) branching.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .heuristics import HeuristicKind, select_variable

FIXPOINT = -1

Solution = tuple  # dense assignment, indexed by VarId


class DomainSet:
    """Finite set of small non-negative ints backed by a bitmask.

    Bit v is set iff value v is in the set. Removing an absent value is a
    no-op. Callers never leave a domain empty except transiently inside a
    propagation step that then reports failure.
    """

    __slots__ = ("mask",)

    def __init__(self, values: Iterable[int] = (), mask: Optional[int] = None):
        if mask is not None:
            self.mask = mask
        else:
            m = 0
            for v in values:
                if v < 0:
                    raise ValueError("domain values must be non-negative")
                m |= 1 << v
            self.mask = m

    @classmethod
    def range(cls, lo: int, hi: int) -> "DomainSet":
        """Inclusive integer interval [lo, hi]; empty when hi < lo."""
        if hi < lo:
            return cls(mask=0)
        return cls(mask=((1 << (hi - lo + 1)) - 1) << lo)

    def __contains__(self, v: int) -> bool:
        return v >= 0 and (self.mask >> v) & 1 == 1

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __iter__(self):
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def __eq__(self, other) -> bool:
        return isinstance(other, DomainSet) and self.mask == other.mask

    def __hash__(self) -> int:
        return hash(self.mask)

    def __repr__(self) -> str:
        return f"DomainSet({{{', '.join(map(str, self))}}})"

    def min(self) -> int:
        if not self.mask:
            raise ValueError("empty domain has no min")
        return (self.mask & -self.mask).bit_length() - 1

    def max(self) -> int:
        if not self.mask:
            raise ValueError("empty domain has no max")
        return self.mask.bit_length() - 1

    def is_singleton(self) -> bool:
        m = self.mask
        return m != 0 and m & (m - 1) == 0

    def remove(self, v: int) -> None:
        if v >= 0:
            self.mask &= ~(1 << v)

    def copy(self) -> "DomainSet":
        return DomainSet(mask=self.mask)


class Store:
    """Trailed domain store.

    Domains are raw bitmasks for speed. Every reduction is trailed as a
    (var, removed-bits) record; undoing to a mark restores each domain
    bit-exactly. Vars whose domain changed since the last drain are kept in
    `changed` so the propagation loop can wake watchers.
    """

    __slots__ = ("doms", "trail", "trail_bits", "marks", "changed", "changed_bits")

    def __init__(self, domains: Sequence):
        self.doms = [d.mask if isinstance(d, DomainSet) else int(d) for d in domains]
        # parallel lists, one removal event each: the var and the bits removed
        self.trail: list[int] = []
        self.trail_bits: list[int] = []
        self.marks: list[int] = []
        self.changed: list[int] = []
        self.changed_bits: list[int] = []

    def commit(self, var: int, new_mask: int) -> bool:
        """Install a reduced domain, trailing the removed bits.

        Returns False on wipeout; the empty domain is left in place for the
        caller to unwind.
        """
        removed = self.doms[var] ^ new_mask
        self.trail.append(var)
        self.trail_bits.append(removed)
        self.doms[var] = new_mask
        self.changed.append(var)
        self.changed_bits.append(removed)
        return new_mask != 0

    def intersect(self, var: int, mask: int) -> bool:
        d = self.doms[var]
        nd = d & mask
        if nd == d:
            return True
        return self.commit(var, nd)

    def remove_value(self, var: int, v: int) -> bool:
        return self.intersect(var, ~(1 << v))

    def assign(self, var: int, v: int) -> bool:
        return self.intersect(var, 1 << v)

    def push_mark(self) -> None:
        self.marks.append(len(self.trail))

    def undo_to_mark(self) -> None:
        depth = self.marks.pop()
        trail = self.trail
        bits = self.trail_bits
        doms = self.doms
        while len(trail) > depth:
            doms[trail.pop()] |= bits.pop()
        self.changed.clear()
        self.changed_bits.clear()

    def drain_changed(self) -> tuple[list[int], list[int]]:
        vars_, bits = self.changed, self.changed_bits
        if vars_:
            self.changed = []
            self.changed_bits = []
        return vars_, bits

    def domain(self, var: int) -> DomainSet:
        return DomainSet(mask=self.doms[var])

    def min_value(self, var: int) -> int:
        d = self.doms[var]
        return (d & -d).bit_length() - 1

    def is_assigned(self, var: int) -> bool:
        d = self.doms[var]
        return d != 0 and d & (d - 1) == 0

    def value(self, var: int) -> int:
        d = self.doms[var]
        if d == 0 or d & (d - 1):
            raise ValueError(f"var {var} is not assigned")
        return d.bit_length() - 1


@dataclass
class SearchStats:
    """Search counters; all monotone during a run, elapsed excluded from
    determinism guarantees."""

    nodes: int = 0
    failures: int = 0
    solutions: int = 0
    elapsed_ms: int = 0
    timed_out: bool = False


class Watchers:
    """Wake tables: which propagators to queue when a domain changes.

    A propagator may watch a variable unconditionally, for the removal of
    specific values (an element constraint only cares about its target value
    disappearing from an array cell), or for the variable becoming assigned.
    Wake conditions are conservative: a propagator is requeued whenever its
    filter could still act, so the fixpoint reached is independent of the
    wake bookkeeping. Heavy propagators are queued behind cheap ones; that
    ordering does not change the fixpoint either.
    """

    __slots__ = ("any_of", "value_of", "assign_any_of", "assign_value_of", "priority")

    def __init__(self, num_vars: int, propagators: Sequence):
        self.any_of: list[list[int]] = [[] for _ in range(num_vars)]
        self.value_of: list = [None] * num_vars
        self.assign_any_of: list = [None] * num_vars
        self.assign_value_of: list = [None] * num_vars
        self.priority = bytearray(len(propagators))
        max_value = 0
        removal_specs = []
        assign_specs = []
        for pid, p in enumerate(propagators):
            self.priority[pid] = p.cost_tier
            removal_specs.append(p.wake_spec())
            assign_specs.append(p.wake_on_assign())
            for spec in (removal_specs[-1], assign_specs[-1]):
                for _, mask in spec:
                    if mask is not None:
                        max_value = max(max_value, mask.bit_length())

        def add_to_table(tables, var, mask, pid):
            table = tables[var]
            if table is None:
                table = [None] * (max_value + 1)
                tables[var] = table
            rest = mask
            while rest:
                low = rest & -rest
                rest ^= low
                v = low.bit_length() - 1
                if table[v] is None:
                    table[v] = []
                table[v].append(pid)

        for pid, spec in enumerate(removal_specs):
            for var, mask in spec:
                if mask is None:
                    self.any_of[var].append(pid)
                else:
                    add_to_table(self.value_of, var, mask, pid)
        for pid, spec in enumerate(assign_specs):
            for var, mask in spec:
                if mask is None:
                    if self.assign_any_of[var] is None:
                        self.assign_any_of[var] = []
                    self.assign_any_of[var].append(pid)
                else:
                    add_to_table(self.assign_value_of, var, mask, pid)


def build_watchers(num_vars: int, propagators: Sequence) -> Watchers:
    return Watchers(num_vars, propagators)


class _Queue:
    """Reusable two-tier propagator queue; left empty after every
    propagate_to_fixpoint call, including failing ones."""

    __slots__ = ("cheap", "heavy", "in_queue")

    def __init__(self, num_propagators: int):
        self.cheap: deque[int] = deque()
        self.heavy: deque[int] = deque()
        self.in_queue = bytearray(num_propagators)

    def clear(self) -> None:
        while self.cheap:
            self.in_queue[self.cheap.popleft()] = 0
        while self.heavy:
            self.in_queue[self.heavy.popleft()] = 0


def propagate_to_fixpoint(
    store: Store,
    propagators: Sequence,
    watchers: Watchers,
    queue_pids=None,
    queue: Optional[_Queue] = None,
) -> int:
    """Run queued propagators until no domain changes or one fails.

    Pending `store.changed` entries are absorbed into the queue first, so a
    freshly committed branching step seeds its own wake set. Returns
    FIXPOINT, or the failing propagator's id after bumping its weight.
    """
    if queue is None:
        queue = _Queue(len(propagators))
    cheap = queue.cheap
    heavy = queue.heavy
    in_queue = queue.in_queue
    priority = watchers.priority
    any_of = watchers.any_of
    value_of = watchers.value_of
    assign_any_of = watchers.assign_any_of
    assign_value_of = watchers.assign_value_of
    doms = store.doms
    changed, changed_bits = store.drain_changed()
    if queue_pids is not None:
        for pid in queue_pids:
            if not in_queue[pid]:
                in_queue[pid] = 1
                (heavy if priority[pid] else cheap).append(pid)
    while True:
        for event, var in enumerate(changed):
            for pid in any_of[var]:
                if not in_queue[pid]:
                    in_queue[pid] = 1
                    (heavy if priority[pid] else cheap).append(pid)
            table = value_of[var]
            if table is not None:
                rest = changed_bits[event]
                while rest:
                    low = rest & -rest
                    rest ^= low
                    pids = table[low.bit_length() - 1]
                    if pids:
                        for pid in pids:
                            if not in_queue[pid]:
                                in_queue[pid] = 1
                                (heavy if priority[pid] else cheap).append(pid)
            if assign_any_of[var] is not None or assign_value_of[var] is not None:
                d = doms[var]
                if d & (d - 1) == 0:
                    pids = assign_any_of[var]
                    if pids:
                        for pid in pids:
                            if not in_queue[pid]:
                                in_queue[pid] = 1
                                (heavy if priority[pid] else cheap).append(pid)
                    table = assign_value_of[var]
                    if table is not None:
                        pids = table[d.bit_length() - 1]
                        if pids:
                            for pid in pids:
                                if not in_queue[pid]:
                                    in_queue[pid] = 1
                                    (heavy if priority[pid] else cheap).append(pid)
        if cheap:
            pid = cheap.popleft()
        elif heavy:
            pid = heavy.popleft()
        else:
            return FIXPOINT
        in_queue[pid] = 0
        prop = propagators[pid]
        ok = prop.filter(store)
        changed, changed_bits = store.drain_changed()
        if not ok:
            prop.weight += 1
            queue.clear()
            return pid


def validate_model(model) -> None:
    """Reject models whose propagators reference unknown variables."""
    num_vars = len(model.initial_domains)
    for pid, p in enumerate(model.propagators):
        if not p.scope:
            raise ValueError(f"propagator {pid} has an empty scope")
        for v in p.scope:
            if not (0 <= v < num_vars):
                raise ValueError(f"propagator {pid} references unknown var {v}")
    for v in model.branch_order:
        if not (0 <= v < num_vars):
            raise ValueError(f"branching order references unknown var {v}")


def solve_all(
    model,
    heuristic: HeuristicKind = HeuristicKind.STATIC,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
) -> tuple[list[Solution], SearchStats]:
    """Enumerate every solution of `model`, depth first.

    2-way branching: the left child assigns the selected variable its
    minimum value, the right child removes that value. Each committed child
    counts one node. A wipeout during a commit's propagation counts one
    failure. On hitting a node or time limit the partial solution list is
    returned with `timed_out` set.
    """
    validate_model(model)
    propagators = model.propagators
    for p in propagators:
        p.weight = 1
    num_vars = len(model.initial_domains)
    store = Store(model.initial_domains)
    watchers = build_watchers(num_vars, propagators)
    queue = _Queue(len(propagators))
    stats = SearchStats()
    solutions: list[Solution] = []
    t0 = time.monotonic()
    deadline = None if time_limit is None else t0 + time_limit

    def budget_hit() -> bool:
        if node_limit is not None and stats.nodes >= node_limit:
            return True
        if deadline is not None and time.monotonic() >= deadline:
            return True
        return False

    try:
        if budget_hit():
            stats.timed_out = True
            return solutions, stats
        if propagate_to_fixpoint(store, propagators, watchers, range(len(propagators)), queue) != FIXPOINT:
            stats.failures += 1
            return solutions, stats

        # Frames track committed children: phase 1 = in left subtree,
        # phase 2 = in right subtree. One mark per committed child.
        frames: list[tuple[int, int, int]] = []
        descend = True
        while True:
            if descend:
                var = select_variable(store, model, heuristic)
                if var is None:
                    solutions.append(tuple(store.value(v) for v in range(num_vars)))
                    stats.solutions += 1
                    descend = False
                    continue
                value = store.min_value(var)
                if budget_hit():
                    stats.timed_out = True
                    break
                store.push_mark()
                stats.nodes += 1
                frames.append((var, value, 1))
                store.assign(var, value)
                if propagate_to_fixpoint(store, propagators, watchers, None, queue) != FIXPOINT:
                    stats.failures += 1
                    descend = False
            else:
                if not frames:
                    break
                var, value, phase = frames.pop()
                store.undo_to_mark()
                if phase == 1:
                    if budget_hit():
                        stats.timed_out = True
                        break
                    store.push_mark()
                    stats.nodes += 1
                    frames.append((var, value, 2))
                    store.remove_value(var, value)
                    if propagate_to_fixpoint(store, propagators, watchers, None, queue) == FIXPOINT:
                        descend = True
                    else:
                        stats.failures += 1
                # phase 2 finished: keep unwinding
    finally:
        stats.elapsed_ms = int((time.monotonic() - t0) * 1000)
    return solutions, stats
