from __future__ import annotations

import random

import pytest

from langford.engine import (
    FIXPOINT,
    DomainSet,
    Store,
    build_watchers,
    propagate_to_fixpoint,
    solve_all,
    validate_model,
)
from langford.heuristics import HeuristicKind
from langford.models import Instance, VariantConfig, build_channelled, build_direct, build_positional
from langford.oracle import enumerate_bruteforce
from langford.propagators import EqOffset, LessThan

from util import TinyModel, doms, naive_fixpoint


def run_fixpoint(store, props):
    watchers = build_watchers(len(store.doms), props)
    return propagate_to_fixpoint(store, props, watchers, range(len(props)))


class TestDomainSet:
    def test_range_and_membership(self):
        d = DomainSet.range(2, 5)
        assert sorted(d) == [2, 3, 4, 5]
        assert 2 in d and 5 in d and 1 not in d and 6 not in d
        assert len(d) == 4
        assert d.min() == 2 and d.max() == 5

    def test_remove_absent_value_is_noop(self):
        d = DomainSet((1, 3))
        d.remove(2)
        assert sorted(d) == [1, 3]
        d.remove(3)
        assert sorted(d) == [1]

    def test_min_max_agree_with_membership(self):
        rng = random.Random(7)
        for _ in range(200):
            values = sorted({rng.randint(0, 40) for _ in range(rng.randint(1, 12))})
            d = DomainSet(values)
            assert d.min() == values[0]
            assert d.max() == values[-1]
            assert sorted(d) == values

    def test_empty_range(self):
        assert len(DomainSet.range(3, 2)) == 0

    def test_singleton(self):
        assert DomainSet((4,)).is_singleton()
        assert not DomainSet((4, 5)).is_singleton()


class TestStore:
    def test_assign_and_value(self):
        store = Store(doms({1, 2, 3}))
        assert store.assign(0, 2)
        assert store.is_assigned(0)
        assert store.value(0) == 2

    def test_wipeout_reported(self):
        store = Store(doms({1, 2}))
        assert not store.intersect(0, 0b1000)

    def test_undo_restores_bit_exactly(self):
        rng = random.Random(13)
        for _ in range(100):
            masks = [DomainSet(rng.sample(range(1, 12), rng.randint(2, 8))) for _ in range(5)]
            store = Store(masks)
            snapshot = list(store.doms)
            store.push_mark()
            for _ in range(rng.randint(1, 12)):
                var = rng.randrange(5)
                d = store.doms[var]
                if d and not (d & (d - 1)):
                    continue
                values = [v for v in DomainSet(mask=d)]
                store.remove_value(var, rng.choice(values))
            store.undo_to_mark()
            assert store.doms == snapshot

    def test_nested_marks(self):
        store = Store(doms({1, 2, 3, 4}))
        store.push_mark()
        store.remove_value(0, 1)
        inner = list(store.doms)
        store.push_mark()
        store.remove_value(0, 2)
        store.remove_value(0, 3)
        store.undo_to_mark()
        assert store.doms == inner
        store.undo_to_mark()
        assert store.doms == [DomainSet({1, 2, 3, 4}).mask]


class TestPropagateToFixpoint:
    def test_eq_offset_chain(self):
        # x = y + 2 over 1..3 leaves the single supported pair
        store = Store(doms({1, 2, 3}, {1, 2, 3}))
        props = [EqOffset(0, 1, 2)]
        assert run_fixpoint(store, props) == FIXPOINT
        assert sorted(store.domain(0)) == [3]
        assert sorted(store.domain(1)) == [1]

    def test_failure_increments_weight(self):
        store = Store(doms({1}, {1}))
        props = [LessThan(0, 1)]
        assert props[0].weight == 1
        assert run_fixpoint(store, props) == 0
        assert props[0].weight == 2

    def test_channelled_root_matches_naive_fixpoint(self):
        # queue-driven fixpoint must agree with plain round-robin filtering
        for cons in ("both", "d", "p"):
            cfg = VariantConfig("channelled", branch="d", sym="d", cons=cons)
            model = build_channelled(Instance(2, 3), cfg)
            fast = Store(model.initial_domains)
            assert run_fixpoint(fast, model.propagators) == FIXPOINT
            slow = Store(model.initial_domains)
            assert naive_fixpoint(slow, model.propagators) == -1
            assert fast.doms == slow.doms

    def test_idempotent_at_fixpoint(self):
        cfg = VariantConfig("channelled", branch="d", sym="d", cons="both")
        model = build_channelled(Instance(2, 4), cfg)
        store = Store(model.initial_domains)
        assert run_fixpoint(store, model.propagators) == FIXPOINT
        settled = list(store.doms)
        trail_depth = len(store.trail)
        assert run_fixpoint(store, model.propagators) == FIXPOINT
        assert store.doms == settled
        assert len(store.trail) == trail_depth  # zero removals the second time

    def test_naive_agreement_on_random_restrictions(self):
        rng = random.Random(99)
        cfg = VariantConfig("channelled", branch="d", sym="d", cons="both")
        model = build_channelled(Instance(2, 4), cfg)
        for _ in range(40):
            base = [d.copy() for d in model.initial_domains]
            for d in base:
                values = sorted(d)
                for v in values:
                    if len(d) > 1 and rng.random() < 0.2:
                        d.remove(v)
            fast = Store(base)
            slow = Store(base)
            got = run_fixpoint(fast, model.propagators)
            ref = naive_fixpoint(slow, model.propagators)
            if ref == -1:
                assert got == FIXPOINT
                assert fast.doms == slow.doms
            else:
                assert got != FIXPOINT


class TestSolveAll:
    def test_direct_2_3(self):
        model = build_direct(Instance(2, 3))
        solutions, stats = solve_all(model)
        assert [model.sequence_of(s) for s in solutions] == [(2, 3, 1, 2, 1, 3)]
        assert stats.solutions == 1

    def test_direct_2_5_unsat(self):
        model = build_direct(Instance(2, 5))
        solutions, stats = solve_all(model)
        assert solutions == []
        assert stats.failures > 0

    def test_positional_2_4_keeps_its_own_representative(self):
        model = build_positional(Instance(2, 4))
        solutions, stats = solve_all(model)
        sequences = [model.sequence_of(s) for s in solutions]
        # the reflection filter of this viewpoint keeps the arrangement whose
        # first 1 hugs the start, i.e. the mirror of the first-less-last one
        assert sequences == [(4, 1, 3, 1, 2, 4, 3, 2)]
        assert tuple(reversed(sequences[0])) in enumerate_bruteforce(2, 4, "first-less-last")

    def test_node_limit_zero(self):
        model = build_direct(Instance(2, 3))
        solutions, stats = solve_all(model, node_limit=0)
        assert solutions == []
        assert stats.timed_out
        assert stats.nodes == 0

    def test_node_limit_truncates(self):
        model = build_direct(Instance(2, 7), sym=False)
        full, full_stats = solve_all(model)
        cut, cut_stats = solve_all(model, node_limit=full_stats.nodes // 2)
        assert cut_stats.timed_out
        assert cut_stats.nodes == full_stats.nodes // 2
        assert cut == full[: len(cut)]  # prefix of the full enumeration

    def test_time_limit(self):
        cfg = VariantConfig("channelled", branch="p", sym="p", cons="both")
        model = build_channelled(Instance(3, 11), cfg)
        solutions, stats = solve_all(model, time_limit=0.2)
        assert stats.timed_out

    def test_malformed_model_rejected(self):
        model = TinyModel(doms({1, 2}), [LessThan(0, 7)])
        with pytest.raises(ValueError):
            solve_all(model)
        validate_model(TinyModel(doms({1, 2}, {1, 2}), [LessThan(0, 1)]))

    def test_min_value_two_way_branching(self):
        # one variable {2,5,7}: assign 2 | remove 2, assign 5 | remove 5 -> {7}
        model = TinyModel(doms({2, 5, 7}), [])
        solutions, stats = solve_all(model)
        assert [s[0] for s in solutions] == [2, 5, 7]
        assert stats.nodes == 4  # the {7} leaf needs no branching
        assert stats.failures == 0

    def test_determinism(self):
        cfg = VariantConfig("channelled", branch="d", sym="d", cons="both")
        for heuristic in HeuristicKind:
            model = build_channelled(Instance(2, 6), cfg)
            first_solutions, first_stats = solve_all(model, heuristic)
            again_solutions, again_stats = solve_all(model, heuristic)
            assert first_solutions == again_solutions
            assert (first_stats.nodes, first_stats.failures, first_stats.solutions) == (
                again_stats.nodes,
                again_stats.failures,
                again_stats.solutions,
            )

    def test_trail_soundness_through_search(self):
        model = build_direct(Instance(2, 4), sym=False)
        store = Store(model.initial_domains)
        watchers = build_watchers(model.num_vars, model.propagators)
        snapshot = list(store.doms)
        rng = random.Random(5)
        for _ in range(50):
            store.push_mark()
            var = rng.randrange(model.num_vars)
            d = store.domain(var)
            store.assign(var, rng.choice(sorted(d)))
            propagate_to_fixpoint(store, model.propagators, watchers)
            store.undo_to_mark()
            assert store.doms == snapshot

    def test_left_spine_consistent_with_oracle(self):
        # walk the leftmost branch of the direct model; each propagation
        # outcome must match the brute-force classification of the partial
        # sequence assignment
        model = build_direct(Instance(2, 3))
        arrangements = enumerate_bruteforce(2, 3, "first-less-last")
        store = Store(model.initial_domains)
        watchers = build_watchers(model.num_vars, model.propagators)
        assert propagate_to_fixpoint(store, model.propagators, watchers, range(len(model.propagators))) == FIXPOINT
        while True:
            var = next((v for v in model.branch_order if not store.is_assigned(v)), None)
            if var is None:
                break
            store.assign(var, store.min_value(var))
            failed = propagate_to_fixpoint(store, model.propagators, watchers) != FIXPOINT
            fixed = {
                i: store.value(v)
                for i, v in enumerate(model.seq_vars)
                if store.is_assigned(v)
            }
            extensible = any(
                all(arr[i] == value for i, value in fixed.items()) for arr in arrangements
            )
            if failed:
                assert not extensible
                break
            # propagation succeeding makes no promise, but a fully assigned
            # sequence must be a real arrangement
            if len(fixed) == len(model.seq_vars):
                assert extensible

    def test_weights_reset_between_runs(self):
        model = build_direct(Instance(2, 5))
        solve_all(model)
        weights_first = [p.weight for p in model.propagators]
        solve_all(model)
        assert [p.weight for p in model.propagators] == weights_first

    def test_failure_count_matches_weights(self):
        model = build_positional(Instance(2, 6))
        _, stats = solve_all(model)
        assert sum(p.weight - 1 for p in model.propagators) == stats.failures
