"""Finite filtered probability spaces.

Random variables are plain numpy arrays whose first axis runs over the
outcomes of a :class:`FiniteProbSpace` in their declared order. σ-algebras are
represented only through their atoms, i.e. by a :class:`Partition`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _numeric as nm
from .errors import HorizonMismatch, InvalidFiltration, InvalidMeasure, InvalidPartition, MismatchedSpace


def _is_rational_literal(x) -> bool:
    return isinstance(x, (Fraction, int, np.integer, str)) and not isinstance(x, bool)


class FiniteProbSpace:
    """Outcome labels with strictly positive weights summing to one.

    ``exact`` selects rational arithmetic; by default it is inferred from the
    weights (all ``Fraction``/``int``/numeric-string means exact).
    """

    def __init__(self, outcomes: Sequence, weights, *, exact: bool | None = None, tol=None):
        outcomes = tuple(outcomes)
        if len(set(outcomes)) != len(outcomes):
            raise InvalidMeasure("outcome labels must be unique")
        if not outcomes:
            raise InvalidMeasure("outcome set is empty")
        if isinstance(weights, dict):
            missing = [o for o in outcomes if o not in weights]
            if missing:
                raise InvalidMeasure(f"no weight for outcomes {missing!r}")
            weights = [weights[o] for o in outcomes]
        weights = list(weights)
        if len(weights) != len(outcomes):
            raise InvalidMeasure("weights and outcomes differ in length")
        if exact is None:
            exact = all(_is_rational_literal(w) for w in weights)
        self.outcomes = outcomes
        self.exact = bool(exact)
        self.index = {o: i for i, o in enumerate(outcomes)}
        self.measure = Measure(self, nm.as_array(weights, self.exact), tol=tol)

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights

    def tol(self, tol=None):
        return nm.resolve_tol(tol, self.exact)

    def indices(self, labels: Iterable) -> np.ndarray:
        try:
            return np.array([self.index[o] for o in labels], dtype=int)
        except KeyError as exc:
            raise MismatchedSpace(f"unknown outcome {exc.args[0]!r}") from None

    def zeros(self, *shape) -> np.ndarray:
        return nm.zeros((self.n,) + shape, self.exact)

    def asarray(self, values) -> np.ndarray:
        return nm.as_array(values, self.exact)

    @classmethod
    def uniform(cls, outcomes: Sequence, exact: bool = True) -> "FiniteProbSpace":
        outcomes = tuple(outcomes)
        w = Fraction(1, len(outcomes))
        return cls(outcomes, [w if exact else float(w)] * len(outcomes), exact=exact)

    def __repr__(self) -> str:
        mode = "exact" if self.exact else "float"
        return f"FiniteProbSpace(n={self.n}, {mode})"


def check_same_space(a: FiniteProbSpace, b: FiniteProbSpace) -> None:
    if a is not b and a.outcomes != b.outcomes:
        raise MismatchedSpace("objects live on different outcome sets")


class Measure:
    """Strictly positive probability weights on a space's outcomes."""

    def __init__(self, space: FiniteProbSpace, weights, tol=None):
        w = nm.as_array(weights, space.exact)
        if w.shape != (space.n,):
            raise MismatchedSpace(f"expected {space.n} weights, got shape {w.shape}")
        if any(x <= 0 for x in w):
            raise InvalidMeasure("every outcome weight must be strictly positive")
        total = w.sum()
        if abs(total - 1) > nm.resolve_tol(tol, space.exact):
            raise InvalidMeasure(f"weights sum to {total}, not 1")
        self.space = space
        self.weights = w

    @property
    def exact(self) -> bool:
        return self.space.exact

    def expect(self, rv: np.ndarray):
        rv = np.asarray(rv)
        if rv.shape[0] != self.space.n:
            raise MismatchedSpace("random variable length differs from the outcome count")
        w = self.weights.reshape((-1,) + (1,) * (rv.ndim - 1))
        return (w * rv).sum(axis=0)

    def prob(self, idx) -> object:
        return self.weights[idx].sum()

    def inner(self, u: np.ndarray, v: np.ndarray):
        return (self.weights * u * v).sum()

    def reweight(self, density: np.ndarray, tol=None) -> "Measure":
        return Measure(self.space, self.weights * np.asarray(density), tol=tol)

    def __repr__(self) -> str:
        return f"Measure({list(self.weights)!r})"


class Partition:
    """Atoms of a σ-algebra, stored as a block label per outcome.

    Labels are canonical: blocks are numbered in order of their first outcome,
    so two partitions are equal iff their label arrays are equal.
    """

    def __init__(self, space: FiniteProbSpace, labels):
        labels = np.asarray(labels)
        if labels.shape != (space.n,):
            raise InvalidPartition("one block label per outcome is required")
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        self.space = space
        self.labels = rank[inverse.reshape(-1)].astype(int)
        self.nblocks = len(order)
        self._blocks = None

    @classmethod
    def from_blocks(cls, space: FiniteProbSpace, blocks: Sequence[Iterable]) -> "Partition":
        labels = np.full(space.n, -1, dtype=int)
        for b, block in enumerate(blocks):
            members = list(block)
            if not members:
                raise InvalidPartition(f"block {b} is empty")
            idx = space.indices(members)
            if (labels[idx] >= 0).any():
                raise InvalidPartition(f"block {b} overlaps an earlier block")
            labels[idx] = b
        if (labels < 0).any():
            missing = [space.outcomes[i] for i in np.flatnonzero(labels < 0)]
            raise InvalidPartition(f"blocks do not cover outcomes {missing!r}")
        return cls(space, labels)

    @classmethod
    def trivial(cls, space: FiniteProbSpace) -> "Partition":
        return cls(space, np.zeros(space.n, dtype=int))

    @classmethod
    def discrete(cls, space: FiniteProbSpace) -> "Partition":
        return cls(space, np.arange(space.n))

    @property
    def blocks(self) -> tuple[np.ndarray, ...]:
        if self._blocks is None:
            order = np.argsort(self.labels, kind="stable")
            bounds = np.searchsorted(self.labels[order], np.arange(self.nblocks + 1))
            self._blocks = tuple(order[bounds[b] : bounds[b + 1]] for b in range(self.nblocks))
        return self._blocks

    def block_outcomes(self, b: int) -> tuple:
        return tuple(self.space.outcomes[i] for i in self.blocks[b])

    def refines(self, coarse: "Partition") -> bool:
        """True when every block of ``self`` lies inside one block of ``coarse``."""
        check_same_space(self.space, coarse.space)
        firsts = np.array([blk[0] for blk in self.blocks], dtype=int)
        return bool(np.array_equal(coarse.labels, coarse.labels[firsts][self.labels]))

    def meet(self, other: "Partition") -> "Partition":
        """Common refinement: blocks are the nonempty pairwise intersections."""
        check_same_space(self.space, other.space)
        return Partition(self.space, self.labels * other.nblocks + other.labels)

    def is_constant(self, values: np.ndarray, tol) -> tuple[bool, int | None]:
        """Whether ``values`` is constant on every block; returns a failing block."""
        firsts = np.array([blk[0] for blk in self.blocks], dtype=int)
        ref = values[firsts][self.labels]
        diff = np.abs(values - ref)
        if diff.ndim > 1:
            diff = diff.reshape(diff.shape[0], -1).max(axis=1)
        bad = np.flatnonzero(diff > tol)
        if bad.size:
            return False, int(self.labels[bad[0]])
        return True, None

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.space.outcomes == other.space.outcomes and bool(
            np.array_equal(self.labels, other.labels)
        )

    def __hash__(self):
        return hash(tuple(self.labels))

    def __repr__(self) -> str:
        return f"Partition({[list(self.block_outcomes(b)) for b in range(self.nblocks)]!r})"


class Filtration:
    """Refining partitions P_0, ..., P_T with P_0 trivial."""

    def __init__(self, space: FiniteProbSpace, partitions: Sequence[Partition], name: str = ""):
        partitions = tuple(partitions)
        if len(partitions) < 2:
            raise InvalidFiltration("a filtration needs horizon T >= 1")
        for t, p in enumerate(partitions):
            check_same_space(space, p.space)
        if partitions[0].nblocks != 1:
            raise InvalidFiltration("time 0: the initial partition must be trivial", {"t": 0})
        for t in range(1, len(partitions)):
            if not partitions[t].refines(partitions[t - 1]):
                raise InvalidFiltration(f"time {t}: partition does not refine time {t - 1}", {"t": t})
        self.space = space
        self.partitions = partitions
        self.name = name

    @property
    def horizon(self) -> int:
        return len(self.partitions) - 1

    def __getitem__(self, t: int) -> Partition:
        return self.partitions[t]

    def __len__(self) -> int:
        return len(self.partitions)

    def __eq__(self, other) -> bool:
        return isinstance(other, Filtration) and self.partitions == other.partitions

    def __hash__(self):
        return hash(self.partitions)

    def atoms(self, t: int | None = None) -> int:
        return self.partitions[self.horizon if t is None else t].nblocks

    def refines(self, coarse: "Filtration") -> bool:
        return self.horizon == coarse.horizon and all(
            p.refines(q) for p, q in zip(self.partitions, coarse.partitions)
        )

    @classmethod
    def trivial(cls, space: FiniteProbSpace, horizon: int) -> "Filtration":
        p = Partition.trivial(space)
        return cls(space, [p] * (horizon + 1), name="trivial")

    def __repr__(self) -> str:
        return f"Filtration({self.name or '?'}, T={self.horizon}, atoms={[p.nblocks for p in self.partitions]})"


# ---------------------------------------------------------------------------
# operations


def conditional_expectation(rv: np.ndarray, part: Partition, mu: Measure) -> np.ndarray:
    """E^mu[rv | σ(part)], returned outcome-wise (constant on blocks)."""
    check_same_space(part.space, mu.space)
    rv = np.asarray(rv)
    if rv.shape[0] != mu.space.n:
        raise MismatchedSpace("random variable length differs from the outcome count")
    w = mu.weights.reshape((-1,) + (1,) * (rv.ndim - 1))
    num = nm.block_sums(w * rv, part.labels, part.nblocks)
    den = nm.block_sums(mu.weights, part.labels, part.nblocks)
    den = den.reshape((-1,) + (1,) * (rv.ndim - 1))
    return (num / den)[part.labels]


def join(f: Filtration, h: Filtration, *more: Filtration) -> Filtration:
    """Smallest filtration containing all arguments: timewise common refinement."""
    out = f
    for g in (h,) + more:
        check_same_space(out.space, g.space)
        if g.horizon != out.horizon:
            raise HorizonMismatch(f"horizons {out.horizon} and {g.horizon} differ")
        if g is out or g == out:
            continue
        parts = [p.meet(q) for p, q in zip(out.partitions, g.partitions)]
        names = "∨".join(n for n in (out.name, g.name) if n)
        out = Filtration(out.space, parts, name=names)
    return out


@dataclass
class CheckResult:
    """Boolean verdict with an optional counterexample."""

    ok: bool
    witness: dict | None = None
    max_violation: object = 0

    def __bool__(self) -> bool:
        return self.ok


def independent(f: Filtration, h: Filtration, mu: Measure, t: int | None = None, tol=None) -> CheckResult:
    """Independence of the time-``t`` σ-algebras of two filtrations (default t = T).

    Checks every atom pair of the π-system ``{A ∩ B}``.
    """
    return independent_partitions([f[f.horizon if t is None else t], h[h.horizon if t is None else t]], mu, tol)


def independent_partitions(parts: Sequence[Partition], mu: Measure, tol=None) -> CheckResult:
    """Mutual independence of several atom partitions (all atom tuples factorise)."""
    for p in parts:
        check_same_space(p.space, mu.space)
    tol = nm.resolve_tol(tol, mu.exact)
    marg = [nm.block_sums(mu.weights, p.labels, p.nblocks) for p in parts]
    joint_label = np.zeros(mu.space.n, dtype=np.int64)
    for p in parts:
        joint_label = joint_label * p.nblocks + p.labels
    # enumerate all atom tuples, including empty intersections
    shape = tuple(p.nblocks for p in parts)
    joint = {}
    for lab, w in zip(joint_label, mu.weights):
        joint[int(lab)] = joint.get(int(lab), 0) + w
    worst = nm.ZERO if mu.exact else 0.0
    witness = None
    for multi in np.ndindex(*shape):
        lab = 0
        prod = nm.ONE if mu.exact else 1.0
        for p, m, k in zip(parts, marg, multi):
            lab = lab * p.nblocks + k
            prod = prod * m[k]
        gap = abs(joint.get(lab, 0) - prod)
        if gap > worst:
            worst = gap
        if gap > tol and witness is None:
            witness = {
                "blocks": [list(p.block_outcomes(k)) for p, k in zip(parts, multi)],
                "joint": joint.get(lab, 0),
                "product": prod,
            }
    return CheckResult(witness is None, witness, worst)


def radon_nikodym(q: Measure, p: Measure) -> np.ndarray:
    """dq/dp on the full outcome set."""
    check_same_space(q.space, p.space)
    return q.weights / p.weights


def density_process(q: Measure, p: Measure, f: Filtration):
    """L_t = E^p[dq/dp | F_t] as an adapted process."""
    from .process import AdaptedProcess

    d = radon_nikodym(q, p)
    values = np.stack([conditional_expectation(d, f[t], p) for t in range(f.horizon + 1)])
    return AdaptedProcess(f, values, name="L")
