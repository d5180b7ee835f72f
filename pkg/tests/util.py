"""Shared test helpers: ad-hoc models, independent fixpoint and support
oracles, and randomized propagator cases."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from langford.engine import DomainSet, Store, solve_all
from langford.heuristics import HeuristicKind
from langford.propagators import (
    AllDifferent,
    ElementOffsetConst,
    EqOffset,
    InverseChannel,
    LessThan,
    Occurrence,
    SumLeq,
)

PROPAGATOR_KINDS = (
    "eq_offset",
    "less_than",
    "sum_leq",
    "all_different",
    "element_offset_const",
    "occurrence",
    "inverse_channel",
)


@dataclass
class TinyModel:
    """Bare model for engine-level tests: domains, propagators, order."""

    initial_domains: list
    propagators: list
    branch_order: list = field(default_factory=list)
    names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.branch_order:
            self.branch_order = list(range(len(self.initial_domains)))
        if not self.names:
            self.names = [f"v{i}" for i in range(len(self.initial_domains))]


def doms(*value_sets) -> list[DomainSet]:
    return [DomainSet(values) for values in value_sets]


def naive_fixpoint(store: Store, propagators) -> int:
    """Round-robin every filter until none changes anything; -1 at fixpoint,
    else the failing propagator's position. Independent of the engine's
    queue and wake bookkeeping."""
    while True:
        before = list(store.doms)
        for pid, p in enumerate(propagators):
            if not p.filter(store):
                return pid
        store.drain_changed()
        if store.doms == before:
            return -1


def pos_sym_keeps(arr) -> bool:
    """Reflection filter of the positional viewpoint: the first copy of 1
    sits closer to the start than the last copy does to the end."""
    kn = len(arr)
    first = arr.index(1) + 1
    last = kn - tuple(reversed(arr)).index(1)
    return (first - 1) < (kn - last)


def solution_sequences(model, heuristic=HeuristicKind.STATIC) -> frozenset:
    solutions, stats = solve_all(model, heuristic)
    assert not stats.timed_out
    return frozenset(model.sequence_of(s) for s in solutions)


def supported_sets(domains: list[DomainSet], prop) -> list[set[int]]:
    """Per-variable sets of values taking part in some satisfying total
    assignment over `domains` (exhaustive enumeration)."""
    scope = prop.scope
    num_vars = len(domains)
    value_lists = [sorted(domains[v]) for v in range(num_vars)]
    scratch = [0] * num_vars
    supported: list[set[int]] = [set() for _ in range(num_vars)]
    for combo in itertools.product(*value_lists):
        for v, value in enumerate(combo):
            scratch[v] = value
        if prop.check(scratch):
            for v, value in enumerate(combo):
                supported[v].add(value)
    return supported


def random_domain(rng: random.Random, lo: int, hi: int) -> DomainSet:
    values = [v for v in range(lo, hi + 1) if rng.random() < 0.7]
    if not values:
        values = [rng.randint(lo, hi)]
    return DomainSet(values)


def random_case(rng: random.Random, kind: str):
    """(domains, propagator) with variables 0..len(domains)-1."""
    if kind == "eq_offset":
        domains = [random_domain(rng, 1, 8), random_domain(rng, 1, 8)]
        return domains, EqOffset(0, 1, rng.randint(-3, 5))
    if kind == "less_than":
        domains = [random_domain(rng, 1, 8), random_domain(rng, 1, 8)]
        return domains, LessThan(0, 1)
    if kind == "sum_leq":
        domains = [random_domain(rng, 1, 8), random_domain(rng, 1, 8)]
        return domains, SumLeq(0, 1, rng.randint(2, 12))
    if kind == "all_different":
        count = rng.randint(2, 5)
        domains = [random_domain(rng, 1, 6) for _ in range(count)]
        return domains, AllDifferent(list(range(count)))
    if kind == "element_offset_const":
        length = rng.randint(2, 4)
        domains = [random_domain(rng, 1, 4) for _ in range(length)]
        domains.append(random_domain(rng, 1, 6))  # index may run off the end
        return domains, ElementOffsetConst(
            list(range(length)), length, rng.randint(-2, 2), rng.randint(1, 4)
        )
    if kind == "occurrence":
        count = rng.randint(3, 6)
        domains = [random_domain(rng, 1, 4) for _ in range(count)]
        return domains, Occurrence(list(range(count)), rng.randint(1, 4), rng.randint(0, 3))
    if kind == "inverse_channel":
        slots = [[0, 1], [2, 3]]
        seq = [4, 5, 6, 7]
        domains = [random_domain(rng, 1, 4) for _ in range(4)]
        domains += [random_domain(rng, 1, 2) for _ in range(4)]
        return domains, InverseChannel(slots, seq)
    raise ValueError(kind)


def assert_filter_sound(domains: list[DomainSet], prop) -> None:
    """One filtering step never drops a value that some satisfying total
    assignment (within the pre-filter domains) uses."""
    store = Store(domains)
    ok = prop.filter(store)
    supported = supported_sets(domains, prop)
    if not ok:
        assert all(not s for s in supported), (
            f"{prop.describe()} failed although supports exist: {supported}"
        )
        return
    for v in range(len(domains)):
        after = set(store.domain(v))
        assert supported[v] <= after, (
            f"{prop.describe()} dropped supported values "
            f"{supported[v] - after} from var {v}"
        )


def assert_checker_agreement(rng: random.Random, domains: list[DomainSet], prop) -> None:
    """Total assignments survive a filtering step iff the checker accepts."""
    assignment = [rng.choice(sorted(d)) for d in domains]
    store = Store([DomainSet((value,)) for value in assignment])
    surviving = prop.filter(store)
    assert surviving == prop.check(assignment), (
        f"{prop.describe()} filter/checker disagree on {assignment}"
    )


def assert_monotone(rng: random.Random, domains: list[DomainSet], prop) -> None:
    """Filtering from sub-domains keeps no value that filtering from the
    wider domains removed."""
    subs = []
    for d in domains:
        values = sorted(d)
        keep = [v for v in values if rng.random() < 0.8]
        if not keep:
            keep = [rng.choice(values)]
        subs.append(DomainSet(keep))
    wide = Store(domains)
    narrow = Store(subs)
    ok_wide = prop.filter(wide)
    ok_narrow = prop.filter(narrow)
    if not ok_narrow:
        return  # empty result set is a subset of anything
    assert ok_wide, f"{prop.describe()} failed on wider domains but not narrower"
    for v in range(len(domains)):
        assert narrow.doms[v] & ~wide.doms[v] == 0, (
            f"{prop.describe()} not monotone on var {v}"
        )
