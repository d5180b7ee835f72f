"""Langford model builders.

Two viewpoints of L(k, n) and their channelled combination:

* direct: one variable per sequence cell (value = the number written
  there), plus one auxiliary start variable per number anchoring its
  chain of evenly spaced copies.
* positional: one variable per (number, repetition) holding the position
  of that copy; injectivity becomes an all_different.
* channelled: both variable sets linked by element constraints and an
  inverse channel, with either, both, or one side's problem constraints
  and exactly one reflection-breaking constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .engine import DomainSet
from .heuristics import HeuristicKind
from .propagators import (
    AllDifferent,
    ElementOffsetConst,
    EqOffset,
    InverseChannel,
    LessThan,
    Occurrence,
    Propagator,
    SumLeq,
)

MODEL_KINDS = ("direct", "positional", "channelled")
SYM_CHOICES = ("d", "p", "none")
CONS_CHOICES = ("both", "d", "p")
BRANCH_CHOICES = ("d", "p")


@dataclass(frozen=True)
class Instance:
    """An L(k, n) instance: k copies of each number 1..n in k*n cells."""

    k: int
    n: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def seq_length(self) -> int:
        return self.k * self.n

    @property
    def label(self) -> str:
        return f"{self.k:02d}_{self.n:02d}"


@dataclass(frozen=True)
class VariantConfig:
    """One point of the model/search variant space.

    `branch` and `cons` apply to channelled models only. `implied` toggles
    the redundant per-number occurrence constraints wherever the direct
    constraints are posted.
    """

    model: str
    branch: Optional[str] = None
    sym: str = "none"
    cons: Optional[str] = None
    heuristic: HeuristicKind = HeuristicKind.STATIC
    implied: bool = True

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model!r}")
        if self.sym not in SYM_CHOICES:
            raise ValueError(f"unknown sym choice {self.sym!r}")
        if not isinstance(self.heuristic, HeuristicKind):
            object.__setattr__(self, "heuristic", HeuristicKind(self.heuristic))
        if self.model == "channelled":
            if self.branch not in BRANCH_CHOICES:
                raise ValueError("channelled models need branch 'd' or 'p'")
            if self.cons not in CONS_CHOICES:
                raise ValueError("channelled models need cons 'both', 'd' or 'p'")
        else:
            if self.branch is not None or self.cons is not None:
                raise ValueError("branch/cons only apply to channelled models")
            if self.model == "direct" and self.sym == "p":
                raise ValueError("sym 'p' needs position variables")
            if self.model == "positional" and self.sym == "d":
                raise ValueError("sym 'd' needs sequence variables")

    def key(self) -> tuple:
        return (
            self.model,
            self.branch or "",
            self.sym,
            self.cons or "",
            self.heuristic.value,
        )

    def label(self) -> str:
        if self.model == "channelled":
            return (
                f"channelled branch:{self.branch.upper()} sym:{self.sym.upper()} "
                f"cons:{self.cons.capitalize()} {self.heuristic.value}"
            )
        return f"{self.model} sym:{self.sym.upper()} {self.heuristic.value}"


@dataclass
class Model:
    """Variables, propagators and branching order for one variant.

    Variable ids are dense and assigned in construction order, which defines
    order of appearance. `initial_domains` is never mutated by the engine;
    searches copy it into a store.
    """

    instance: Instance
    config: VariantConfig
    names: list[str]
    initial_domains: list[DomainSet]
    propagators: list[Propagator]
    branch_order: list[int]
    seq_vars: Optional[list[int]] = None
    pos_vars: Optional[list[list[int]]] = None
    first_occ: Optional[list[int]] = None

    @property
    def num_vars(self) -> int:
        return len(self.initial_domains)

    def sequence_of(self, solution: Sequence[int]) -> tuple[int, ...]:
        """Project a solution to the arrangement it denotes."""
        if self.seq_vars is not None:
            return tuple(solution[v] for v in self.seq_vars)
        out = [0] * self.instance.seq_length
        for m0, row in enumerate(self.pos_vars):
            for v in row:
                out[solution[v] - 1] = m0 + 1
        return tuple(out)


class _Builder:
    def __init__(self):
        self.names: list[str] = []
        self.domains: list[DomainSet] = []

    def var(self, name: str, lo: int, hi: int) -> int:
        self.names.append(name)
        self.domains.append(DomainSet.range(lo, hi))
        return len(self.names) - 1


def _make_seq_vars(b: _Builder, instance: Instance) -> list[int]:
    return [b.var(f"seq_{i}", 1, instance.n) for i in range(1, instance.seq_length + 1)]


def _make_pos_vars(b: _Builder, instance: Instance) -> list[list[int]]:
    kn = instance.seq_length
    return [
        [b.var(f"pos_{m}_{j}", 1, kn) for j in range(1, instance.k + 1)]
        for m in range(1, instance.n + 1)
    ]


def _make_first_vars(b: _Builder, instance: Instance) -> list[int]:
    k, n, kn = instance.k, instance.n, instance.seq_length
    out = []
    for m in range(1, n + 1):
        # Latest start still fitting the whole chain; when the chain cannot
        # fit at all (n < k) the placeholder {1} is wiped at root by the
        # element bounds rule.
        hi = kn - (k - 1) * (m + 1)
        out.append(b.var(f"first_{m}", 1, max(hi, 1)))
    return out


def _direct_constraints(instance, seq, first, implied: bool) -> list[Propagator]:
    k, n = instance.k, instance.n
    props: list[Propagator] = []
    for m in range(1, n + 1):
        for t in range(k):
            props.append(ElementOffsetConst(seq, first[m - 1], t * (m + 1), m))
    if implied:
        for m in range(1, n + 1):
            props.append(Occurrence(seq, m, k))
    return props


def _positional_constraints(instance, pos) -> list[Propagator]:
    k, n = instance.k, instance.n
    flat = [v for row in pos for v in row]
    props: list[Propagator] = [AllDifferent(flat)]
    for m in range(1, n + 1):
        for j in range(2, k + 1):
            props.append(EqOffset(pos[m - 1][j - 1], pos[m - 1][j - 2], m + 1))
    return props


def build_direct(
    instance: Instance,
    sym: bool = True,
    implied: bool = True,
    heuristic: HeuristicKind = HeuristicKind.STATIC,
) -> Model:
    """Sequence-cell viewpoint with per-number chain start auxiliaries."""
    b = _Builder()
    seq = _make_seq_vars(b, instance)
    first = _make_first_vars(b, instance)
    props: list[Propagator] = []
    k, n = instance.k, instance.n
    for m in range(1, n + 1):
        for t in range(k):
            props.append(ElementOffsetConst(seq, first[m - 1], t * (m + 1), m))
    if sym:
        props.append(LessThan(seq[0], seq[-1]))
    if implied:
        for m in range(1, n + 1):
            props.append(Occurrence(seq, m, k))
    config = VariantConfig(
        "direct", sym="d" if sym else "none", heuristic=heuristic, implied=implied
    )
    return Model(
        instance=instance,
        config=config,
        names=b.names,
        initial_domains=b.domains,
        propagators=props,
        branch_order=seq + first,
        seq_vars=seq,
        first_occ=first,
    )


def build_positional(
    instance: Instance,
    sym: bool = True,
    heuristic: HeuristicKind = HeuristicKind.STATIC,
) -> Model:
    """Position-per-copy viewpoint: injective slots plus fixed gaps."""
    b = _Builder()
    pos = _make_pos_vars(b, instance)
    props = _positional_constraints(instance, pos)
    if sym:
        props.append(SumLeq(pos[0][0], pos[0][-1], instance.seq_length))
    flat = [v for row in pos for v in row]
    config = VariantConfig("positional", sym="p" if sym else "none", heuristic=heuristic)
    return Model(
        instance=instance,
        config=config,
        names=b.names,
        initial_domains=b.domains,
        propagators=props,
        branch_order=flat,
        pos_vars=pos,
    )


def build_channelled(instance: Instance, config: VariantConfig) -> Model:
    """Both viewpoints, linked tightly; problem constraints per `config.cons`."""
    if config.model != "channelled":
        raise ValueError("config.model must be 'channelled'")
    k, n, kn = instance.k, instance.n, instance.seq_length
    with_direct = config.cons in ("both", "d")
    with_positional = config.cons in ("both", "p")

    b = _Builder()
    seq = _make_seq_vars(b, instance)
    pos = _make_pos_vars(b, instance)
    first = _make_first_vars(b, instance) if with_direct else None

    props: list[Propagator] = []
    for m in range(1, n + 1):
        for j in range(1, k + 1):
            props.append(ElementOffsetConst(seq, pos[m - 1][j - 1], 0, m))
    props.append(InverseChannel(pos, seq))
    for m in range(1, n + 1):
        for j in range(2, k + 1):
            props.append(LessThan(pos[m - 1][j - 2], pos[m - 1][j - 1]))
    if with_direct:
        props.extend(_direct_constraints(instance, seq, first, config.implied))
    if with_positional:
        props.extend(_positional_constraints(instance, pos))
    if config.sym == "d":
        props.append(LessThan(seq[0], seq[-1]))
    elif config.sym == "p":
        props.append(SumLeq(pos[0][0], pos[0][-1], kn))

    flat = [v for row in pos for v in row]
    if config.branch == "d":
        order = seq + flat
    else:
        order = flat + seq
    if first is not None:
        order = order + first
    return Model(
        instance=instance,
        config=config,
        names=b.names,
        initial_domains=b.domains,
        propagators=props,
        branch_order=order,
        seq_vars=seq,
        pos_vars=pos,
        first_occ=first,
    )


def build_model(instance: Instance, config: VariantConfig) -> Model:
    """Dispatch on `config.model`."""
    if config.model == "direct":
        return build_direct(
            instance,
            sym=config.sym == "d",
            implied=config.implied,
            heuristic=config.heuristic,
        )
    if config.model == "positional":
        return build_positional(instance, sym=config.sym == "p", heuristic=config.heuristic)
    return build_channelled(instance, config)
