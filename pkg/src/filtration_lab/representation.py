"""Stochastic integrals, stable spaces and martingale representation.

On a finite grid the stable space generated by martingales μ¹..μʳ is spanned
by the terminal values ``1_b ΔM^i_t`` of indicator integrands, one per time
``t``, block ``b`` of P_{t-1} and generator ``i``. Vectors attached to
different nodes ``(t, b)`` are orthogonal (disjoint supports at equal ``t``,
the martingale property across distinct ``t``), so orthogonalisation and
least-squares solves run node by node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _numeric as nm
from .errors import DimMismatch, NotMartingale, NotStronglyOrthogonal
from .process import (
    AdaptedProcess,
    PredictableProcess,
    covariation_increments,
    is_martingale,
    orthogonality_scan,
)
from .space import Filtration, Measure, check_same_space, conditional_expectation, join

Integrand = PredictableProcess


def flatten_generators(generators) -> list[AdaptedProcess]:
    """Split vector processes into scalar components, keeping order."""
    if isinstance(generators, AdaptedProcess):
        generators = [generators]
    out = []
    for g in generators:
        out.extend(g.components() if g.dim > 1 else [g])
    return out


def _require_martingales(generators, mu: Measure, f: Filtration, tol) -> None:
    for g in generators:
        chk = is_martingale(g, mu, f, tol)
        if not chk:
            raise NotMartingale(f"generator {g.name or '?'} is not a martingale", chk.witness)


def vector_integral(xi: PredictableProcess | np.ndarray, m: AdaptedProcess) -> AdaptedProcess:
    """(ξ • M)_t = Σ_{s≤t} ξ_s · ΔM_s, a scalar process null at 0."""
    if not isinstance(xi, PredictableProcess):
        xi = PredictableProcess(m.filtration, xi, name="xi")
    check_same_space(xi.filtration.space, m.space)
    if xi.dim != m.dim:
        raise DimMismatch(f"integrand has dimension {xi.dim}, integrator {m.dim}")
    if xi.horizon != m.horizon:
        raise DimMismatch("integrand and integrator live on different grids")
    inc = (nm.as_array(xi.values, m.exact) * m.increments()).sum(axis=2)
    f = xi.filtration if xi.filtration is m.filtration else join(xi.filtration, m.filtration)
    return AdaptedProcess(f, np.cumsum(inc, axis=0), name=f"({xi.name}•{m.name})", validate=False)


def integral_norm(xi: PredictableProcess, m: AdaptedProcess, mu: Measure, f: Filtration | None = None):
    """E[Σ_t ξ_tᵀ C_t ξ_t ΔB_t] with clock ΔB = Σ_i Δ⟨M^i⟩ and C = Δ⟨M^i, M^j⟩ / ΔB."""
    if xi.dim != m.dim:
        raise DimMismatch(f"integrand has dimension {xi.dim}, integrator {m.dim}")
    f = join(xi.filtration, m.filtration) if f is None else f
    cov = covariation_increments(m, mu, f)
    clock = np.trace(cov, axis1=2, axis2=3)
    safe = np.where(clock == 0, 1, clock)
    gram = cov / safe[:, :, None, None]
    x = nm.as_array(xi.values, m.exact)
    quad = np.einsum("tni,tnij,tnj->tn", x, gram, x) if not m.exact else _exact_quad(x, gram)
    per_time = np.where(clock == 0, 0, quad * clock)
    return mu.expect(per_time.sum(axis=0))


def _exact_quad(x, gram):
    # einsum refuses object dtype
    return (x[:, :, :, None] * gram * x[:, :, None, :]).sum(axis=(2, 3))


@dataclass
class BasisElement:
    """One orthogonal basis vector, supported on a single node ``(t, block)``."""

    t: int
    block: int
    support: np.ndarray
    values: np.ndarray
    sqnorm: object


@dataclass
class StableSpace:
    generators: list
    mu: Measure
    filtration: Filtration
    elements: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.elements)

    @property
    def labels(self) -> list[str]:
        return [g.name for g in self.generators]

    def dense(self, normalized: bool = False) -> np.ndarray:
        """Basis as a (dim, n) matrix; normalisation is float-valued."""
        n = self.mu.space.n
        exact = self.mu.exact and not normalized
        out = nm.zeros((self.dim, n), exact)
        for k, e in enumerate(self.elements):
            vals = e.values
            if normalized:
                vals = np.asarray(vals, dtype=float) / np.sqrt(float(e.sqnorm))
            out[k, e.support] = vals
        return out

    def projection(self, h: np.ndarray) -> np.ndarray:
        """Orthogonal L²(mu) projection of ``h`` onto the space."""
        out = self.mu.space.zeros()
        w = self.mu.weights
        for e in self.elements:
            c = (w[e.support] * h[e.support] * e.values).sum() / e.sqnorm
            out[e.support] = out[e.support] + c * e.values
        return out

    def by_node(self) -> dict:
        nodes: dict = {}
        for e in self.elements:
            nodes.setdefault((e.t, e.block), []).append(e)
        return nodes


def stable_space(generators, mu: Measure, f: Filtration, tol=None) -> StableSpace:
    """Orthogonal basis of {(ξ • μ)_T : ξ predictable} from indicator integrands."""
    gens = flatten_generators(generators)
    tol = mu.space.tol(tol)
    _require_martingales(gens, mu, f, tol)
    incs = [g.scalar_increments() for g in gens]
    space = StableSpace(gens, mu, f)
    w = mu.weights
    for t in range(1, f.horizon + 1):
        part = f[t - 1]
        for b, support in enumerate(part.blocks):
            vecs = [inc[t][support] for inc in incs]
            basis, sqn = nm.orthogonalize_local(vecs, w[support], tol)
            for v, s in zip(basis, sqn):
                space.elements.append(BasisElement(t, b, support, v, s))
    return space


@dataclass
class Representation:
    """h = constant + Σ_k (ξ_k • family_k)_T + unexplained residual."""

    constant: object
    integrands: list
    integrals: list
    residual_sq: object
    residual: float
    families: list

    @property
    def parts(self) -> list[np.ndarray]:
        return [p.terminal for p in self.integrals]


def represent(h: np.ndarray, families: Sequence, mu: Measure, f: Filtration, tol=None) -> Representation:
    """Least-squares representation of ``h`` over stacked families of generators.

    Each node ``(t, b)`` solves the normal equations of the martingale
    increment of E[h | F_t] against the generator increments, taking the
    minimum-norm solution; integrands therefore vanish on zero-variance blocks.
    """
    return represent_many([h], families, mu, f, tol)[0]


def represent_many(targets: Sequence[np.ndarray], families: Sequence, mu: Measure, f: Filtration, tol=None) -> list[Representation]:
    """:func:`represent` for several targets, sharing one factorisation per node."""
    tol = mu.space.tol(tol)
    fams = [flatten_generators(fam) for fam in families]
    gens = [g for fam in fams for g in fam]
    exact = mu.exact
    _require_martingales(gens, mu, f, tol)
    hs = [nm.as_array(h, exact) for h in targets]
    if not hs:
        return []
    T, n, K, p = f.horizon, mu.space.n, len(gens), len(hs)
    hmat = np.stack(hs, axis=1)  # (n, p)
    cond = [conditional_expectation(hmat, f[t], mu) for t in range(T + 1)]
    xi = nm.zeros((T + 1, n, K, p), exact)
    if K:
        incs = np.stack([g.scalar_increments() for g in gens], axis=2)  # (T+1, n, K)
        w = mu.weights
        for t in range(1, T + 1):
            dw = cond[t] - cond[t - 1]
            for support in f[t - 1].blocks:
                v = incs[t][support]
                vw = (v * w[support][:, None]).T
                c = nm.min_norm_solve(vw @ v, vw @ dw[support], tol)
                xi[t, support] = nm.as_array(c, exact)
    out = []
    for j, h in enumerate(hs):
        const = cond[0][0, j]
        integrands, integrals = [], []
        col = 0
        for k, fam in enumerate(fams):
            width = len(fam)
            itg = PredictableProcess(f, xi[:, :, col : col + width, j], name=f"xi{k}", validate=False)
            integrands.append(itg)
            if width:
                integrals.append(vector_integral(itg, AdaptedProcess.stack(fam)))
            else:
                integrals.append(AdaptedProcess.constant(f, 0, name="0"))
            col += width
        resid = h - const
        for q in integrals:
            resid = resid - q.terminal
        rsq = mu.expect(resid * resid)
        out.append(Representation(const, integrands, integrals, rsq, float(np.sqrt(float(rsq))), fams))
    return out


@dataclass
class PRPResult:
    ok: bool
    dim: int
    target: int

    def __bool__(self) -> bool:
        return self.ok


def prp_check(generators, mu: Measure, f: Filtration, tol=None) -> PRPResult:
    """PRP holds iff the stable space has dimension |atoms of F_T| - 1."""
    space = stable_space(generators, mu, f, tol)
    target = f.atoms() - 1
    return PRPResult(space.dim == target, space.dim, target)


@dataclass
class DirectSumReport:
    ok: bool
    dims: list
    joint_dim: int
    max_cross: object
    spaces: list = field(default_factory=list, repr=False)


def direct_sum_check(families: Sequence, mu: Measure, f: Filtration, tol=None) -> DirectSumReport:
    """Verify that the family stable spaces are orthogonal and add up to the joint one."""
    tol = mu.space.tol(tol)
    fams = [flatten_generators(fam) for fam in families]
    gens = [g for fam in fams for g in fam]
    owner = [k for k, fam in enumerate(fams) for _ in fam]
    pairs = [(a, b) for a in range(len(gens)) for b in range(a + 1, len(gens)) if owner[a] != owner[b]]
    bad, witness, _ = orthogonality_scan(gens, mu, f, pairs, tol)
    if bad is not None:
        x, y = gens[bad[0]], gens[bad[1]]
        raise NotStronglyOrthogonal(
            f"{x.name} and {y.name} are not strongly orthogonal",
            {"pair": [x.name, y.name], **witness},
        )
    spaces = [stable_space(fam, mu, f, tol) for fam in fams]
    joint = stable_space([g for fam in fams for g in fam], mu, f, tol)
    worst = _max_cross_cosine(spaces, mu)
    dims = [s.dim for s in spaces]
    ok = sum(dims) == joint.dim and worst <= tol
    return DirectSumReport(ok, dims, joint.dim, worst, spaces)


def _max_cross_cosine(spaces: list[StableSpace], mu: Measure):
    # only elements at the same node can fail orthogonality: other pairs have
    # disjoint supports or are separated by the already-verified martingale property
    exact = mu.exact
    worst_sq = nm.ZERO if exact else 0.0
    nodes = [s.by_node() for s in spaces]
    w = mu.weights
    for a in range(len(spaces)):
        for b in range(a + 1, len(spaces)):
            for key, elems in nodes[a].items():
                for u in elems:
                    for v in nodes[b].get(key, ()):
                        ip = (w[u.support] * u.values * v.values).sum()
                        c2 = ip * ip / (u.sqnorm * v.sqnorm)
                        if c2 > worst_sq:
                            worst_sq = c2
    return nm.sqrt(worst_sq) if exact else float(np.sqrt(worst_sq))


def spanning_indicators(f: Filtration, limit: int | None = None) -> list[np.ndarray]:
    """Indicators of all F_T atoms but the last: they span L² modulo constants."""
    part = f[f.horizon]
    exact = f.space.exact
    idx = range(part.nblocks - 1)
    if limit is not None and part.nblocks - 1 > limit:
        idx = np.linspace(0, part.nblocks - 2, limit).astype(int)
    out = []
    for b in idx:
        v = nm.zeros(f.space.n, exact)
        v[part.blocks[b]] = nm.as_array(1, exact)
        out.append(v)
    return out
