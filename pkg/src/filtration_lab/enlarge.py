"""Bases of martingales for joins of filtrations.

* :func:`theorem34_verify` checks the two-filtration representation: with
  martingale parts M (over F) and N (over H), the triple
  ``(M, N, [M, N]^V)`` is a basis under (P, F ∨ H), and
  ``(X, Y, [X, Y]^V)`` is a basis under the decoupling measure
  ``dQ/dP = L^X L^Y``.
* :func:`theorem42_verify` checks the d-filtration case where the
  ``2^d - 1`` iterated brackets form a basis.
* :func:`multiplicity` computes the maximal branching minus one, with an
  explicit certificate family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _numeric as nm
from .errors import (
    BadIndexSet,
    CapExceeded,
    DimMismatch,
    HypothesisFailed,
    MinimalMeasureNotPositive,
    NotMartingale,
    NotStronglyOrthogonal,
    StructureConditionFails,
)
from .process import (
    AdaptedProcess,
    doob_decomposition,
    is_martingale,
    orthogonality_scan,
    quadratic_covariation,
    strongly_orthogonal,
)
from .report import VerificationReport
from .representation import (
    DirectSumReport,
    direct_sum_check,
    flatten_generators,
    prp_check,
    represent,
    represent_many,
    spanning_indicators,
)
from .semimart import minimal_martingale_measure
from .space import (
    FiniteProbSpace,
    Filtration,
    Measure,
    independent,
    independent_partitions,
    join,
    radon_nikodym,
)

DEFAULT_D_CAP = 6
MAX_REPRESENTATION_TARGETS = 256


@dataclass
class EnlargementScenario:
    space: FiniteProbSpace
    filtrations: list
    drivers: list
    measure: Measure | None = None
    names: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.filtrations) < 2:
            raise ValueError("an enlargement needs at least two filtrations")
        if len(self.drivers) != len(self.filtrations):
            raise ValueError("one driver per filtration is required")
        if self.measure is None:
            self.measure = self.space.measure
        horizons = {f.horizon for f in self.filtrations}
        if len(horizons) != 1:
            raise ValueError(f"filtrations have different horizons {sorted(horizons)}")
        # each driver must be adapted to its own filtration
        self.drivers = [d.on(f) for d, f in zip(self.drivers, self.filtrations)]
        if not self.names:
            self.names = [d.name or f"X{i + 1}" for i, d in enumerate(self.drivers)]

    @property
    def d(self) -> int:
        return len(self.filtrations)

    @property
    def joint(self) -> Filtration:
        return join(*self.filtrations)


@dataclass
class BracketFamily:
    """Keyed brackets; ``keys[k]`` identifies ``processes[k]``."""

    keys: list
    processes: list

    def __getitem__(self, key) -> AdaptedProcess:
        return self.processes[self.keys.index(tuple(key) if not isinstance(key, tuple) else key)]

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self):
        return iter(self.processes)


def _check_increment_identity(bracket: AdaptedProcess, factors: Sequence[AdaptedProcess]) -> None:
    prod = factors[0].scalar_increments()
    for p in factors[1:]:
        prod = prod * p.scalar_increments()
    diff = nm.abs_max(bracket.scalar_increments() - prod)
    if diff > bracket.space.tol():
        raise AssertionError(f"bracket increments differ from the increment product by {diff}")


def bracket_vector(m, n, mu: Measure, g: Filtration, tol=None) -> BracketFamily:
    """[M, N]^V in row-major order ([M¹,N¹], …, [M¹,Nⁿ], [M²,N¹], …)."""
    ms, ns = flatten_generators(m), flatten_generators(n)
    for p in ms + ns:
        chk = is_martingale(p, mu, g, tol)
        if not chk:
            raise NotMartingale(f"{p.name or 'process'} is not a martingale", chk.witness)
    keys, procs = [], []
    for i, mi in enumerate(ms):
        for j, nj in enumerate(ns):
            b = quadratic_covariation(mi, nj)
            _check_increment_identity(b, [mi, nj])
            keys.append((i, j))
            procs.append(b)
    return BracketFamily(keys, procs)


def iterated_bracket(family: Sequence[AdaptedProcess], index_set: Sequence[int]) -> AdaptedProcess:
    """Left-nested bracket [[[M^{i1}, M^{i2}], M^{i3}], …, M^{ik}] (0-based indices)."""
    idx = list(index_set)
    if len(idx) < 2 or any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 0 or idx[-1] >= len(family):
        raise BadIndexSet(f"index set {idx} must be strictly increasing, of size >= 2, within 0..{len(family) - 1}")
    b = quadratic_covariation(family[idx[0]], family[idx[1]])
    for i in idx[2:]:
        b = quadratic_covariation(b, family[i])
    b.name = "[" * (len(idx) - 1) + ",".join(
        family[i].name + ("]" if k else "") for k, i in enumerate(idx)
    )
    _check_increment_identity(b, [family[i] for i in idx])
    return b


def bracket_family(family: Sequence[AdaptedProcess]) -> BracketFamily:
    """All 2^d - 1 nonempty index sets, by size then lexicographically; singletons are M^i - M^i_0."""
    d = len(family)
    keys, procs = [], []
    for size in range(1, d + 1):
        for s in itertools.combinations(range(d), size):
            keys.append(s)
            procs.append(family[s[0]].centered() if size == 1 else iterated_bracket(family, s))
    return BracketFamily(keys, procs)


def _fail(report: VerificationReport, hyp: str, message: str, witness=None, **evidence):
    report.add(hyp, False, witness=witness, note=message, **evidence)
    raise HypothesisFailed(hyp, message, witness, report)


def _max_residual(targets, families, mu, f, tol):
    worst = nm.ZERO if mu.exact else 0.0
    for r in represent_many(targets, families, mu, f, tol):
        if r.residual_sq > worst:
            worst = r.residual_sq
    return nm.sqrt(worst)


def _restriction(mu: Measure, part) -> np.ndarray:
    return nm.block_sums(mu.weights, part.labels, part.nblocks)


def theorem34_verify(scn: EnlargementScenario, tol=None) -> VerificationReport:
    if scn.d != 2:
        raise ValueError("the two-filtration theorem needs exactly two filtrations")
    report = VerificationReport("theorem34")
    P = scn.measure
    tol = P.space.tol(tol)
    F, H = scn.filtrations
    X, Y = scn.drivers
    G = scn.joint
    T = G.horizon

    # A1: unique martingale measure for each driver, via the minimal measure
    minimal = {}
    dims = {}
    for label, drv, filt in (("X", X, F), ("Y", Y, H)):
        try:
            mm = minimal_martingale_measure(drv, P, filt, tol)
        except (StructureConditionFails, MinimalMeasureNotPositive) as exc:
            _fail(report, "A1", f"{label}: {exc}", exc.witness, driver=label)
        prp = prp_check(drv.centered().components(), mm.measure, filt, tol)
        dims[label] = [prp.dim, prp.target]
        if not prp:
            _fail(report, "A1", f"{label} lacks the representation property under its martingale measure",
                  {"driver": label, "dim": prp.dim, "target": prp.target})
        minimal[label] = mm
    report.add("A1", True, dims=dims)
    report.add("A2", True, note="local square-integrability is automatic on a finite space")

    M = doob_decomposition(X, P, F, tol).martingale_part
    N = doob_decomposition(Y, P, H, tol).martingale_part
    Ms, Ns = M.components(), N.components()
    for k, p in enumerate(Ms):
        p.name = f"M{k + 1}" if len(Ms) > 1 else "M"
    for k, p in enumerate(Ns):
        p.name = f"N{k + 1}" if len(Ns) > 1 else "N"

    # A3: pairwise strong orthogonality under (P, G)
    worst = nm.ZERO if P.exact else 0.0
    for mi in Ms:
        for nj in Ns:
            try:
                chk = strongly_orthogonal(mi, nj, P, G, tol)
            except NotMartingale as exc:
                _fail(report, "A3", f"{exc}", exc.witness)
            worst = max(worst, chk.max_violation)
            if not chk:
                _fail(report, "A3", f"<{mi.name},{nj.name}> does not vanish", {"pair": [mi.name, nj.name], **chk.witness})
    report.add("A3", True, max_violation=worst)

    # i1
    ind = independent(F, H, P, T, tol)
    report.add("i1", ind.ok, witness=ind.witness, max_violation=ind.max_violation)
    report.add("i2", True, note="standard hypotheses hold vacuously on a finite grid")

    # i3
    brackets = bracket_vector(Ms, Ns, P, G, tol)
    for (i, j), b in zip(brackets.keys, brackets.processes):
        b.name = f"[{Ms[i].name},{Ns[j].name}]"
    families = [Ms, Ns, list(brackets.processes)]
    i3 = _basis_evidence(families, P, G, tol)
    step_b = nm.ZERO if P.exact else 0.0
    step_b_ok = True
    for b in brackets.processes:
        for g in Ms + Ns:
            chk = strongly_orthogonal(b, g, P, G, tol)
            step_b = max(step_b, chk.max_violation)
            step_b_ok = step_b_ok and chk.ok
    report.add("i3", i3.pop("ok") and step_b_ok, step_b_max_violation=step_b, **i3)

    # i4: decoupling measure Q = L^X L^Y P
    px, py = minimal["X"].measure, minimal["Y"].measure
    Q = P.reweight(radon_nikodym(px, P) * radon_nikodym(py, P), tol=tol)
    restr_f = nm.abs_max(_restriction(Q, F[T]) - _restriction(px, F[T]))
    restr_h = nm.abs_max(_restriction(Q, H[T]) - _restriction(py, H[T]))
    q_ind = independent(F, H, Q, T, tol)
    xs, ys = X.centered().components(), Y.centered().components()
    for k, p in enumerate(xs):
        p.name = f"X{k + 1}" if len(xs) > 1 else "X"
    for k, p in enumerate(ys):
        p.name = f"Y{k + 1}" if len(ys) > 1 else "Y"
    mart_ok = all(is_martingale(p, Q, G, tol).ok for p in xs + ys)
    i4_ok = restr_f <= tol and restr_h <= tol and q_ind.ok and mart_ok
    i4 = {}
    if mart_ok:
        orth = all(strongly_orthogonal(x, y, Q, G, tol).ok for x in xs for y in ys)
        qb = bracket_vector(xs, ys, Q, G, tol)
        i4 = _basis_evidence([xs, ys, list(qb.processes)], Q, G, tol)
        i4_ok = i4_ok and orth and i4.pop("ok")
    else:
        orth = False
    report.add(
        "i4", i4_ok,
        q_equals_p=bool(nm.abs_max(Q.weights - P.weights) <= tol),
        restriction_f_gap=restr_f, restriction_h_gap=restr_h,
        q_independent=q_ind.ok, drivers_q_martingales=mart_ok, q_strongly_orthogonal=orth, **i4,
    )
    return report


def _basis_evidence(families, mu: Measure, g: Filtration, tol) -> dict:
    """PRP, direct-sum and zero-residual evidence for a candidate basis."""
    gens = [p for fam in families for p in fam]
    prp = prp_check(gens, mu, g, tol)
    try:
        ds = direct_sum_check(families, mu, g, tol)
    except NotStronglyOrthogonal as exc:
        return {"ok": False, "dims": None, "joint_dim": prp.dim, "target": prp.target, "witness": exc.witness}
    targets = spanning_indicators(g, MAX_REPRESENTATION_TARGETS)
    resid = _max_residual(targets, families, mu, g, tol)
    # uniqueness: reversing the family order must give the same per-family integrals
    unique_gap = nm.ZERO if mu.exact else 0.0
    if targets:
        h = targets[0]
        fwd = represent(h, families, mu, g, tol)
        bwd = represent(h, families[::-1], mu, g, tol)
        for a, b in zip(fwd.integrals, bwd.integrals[::-1]):
            unique_gap = max(unique_gap, nm.abs_max(a.values - b.values))
    ok = prp.ok and ds.ok and sum(ds.dims) == prp.target and resid <= tol and unique_gap <= tol
    return {
        "ok": ok,
        "dims": ds.dims,
        "joint_dim": ds.joint_dim,
        "target": prp.target,
        "max_cross": ds.max_cross,
        "max_residual": resid,
        "targets": len(targets),
        "uniqueness_gap": unique_gap,
    }


def theorem42_verify(scn: EnlargementScenario, tol=None, d_cap: int = DEFAULT_D_CAP) -> VerificationReport:
    if scn.d > d_cap:
        raise CapExceeded(f"d = {scn.d} exceeds the cap {d_cap}")
    report = VerificationReport("theorem42")
    P = scn.measure
    tol = P.space.tol(tol)
    G = scn.joint
    T = G.horizon
    for drv in scn.drivers:
        if drv.dim != 1:
            raise DimMismatch("the d-filtration theorem takes scalar drivers")

    ms = []
    c1 = []
    for k, (drv, filt) in enumerate(zip(scn.drivers, scn.filtrations)):
        m = doob_decomposition(drv, P, filt, tol).martingale_part
        m.name = f"M{k + 1}"
        prp = prp_check([m], P, filt, tol)
        c1.append([prp.dim, prp.target])
        if not prp:
            _fail(report, "C1", f"M{k + 1} lacks the representation property",
                  {"driver": k + 1, "dim": prp.dim, "target": prp.target})
        ms.append(m)
    report.add("C1", True, dims=c1)

    fam = bracket_family(ms)
    for key, p in zip(fam.keys, fam.processes):
        chk = is_martingale(p, P, G, tol)
        if not chk:
            names = [ms[i].name for i in key]
            _fail(report, "C2", f"bracket over {names} is not a (P, G)-martingale", {"index_set": names, **chk.witness})
    report.add("C2", True, checked=len(fam), note="also covers the three-filtration condition B3")

    ind = independent_partitions([f[T] for f in scn.filtrations], P, tol)
    report.add("j1", ind.ok, witness=ind.witness, max_violation=ind.max_violation)
    report.add("j2", True, note="standard hypotheses hold vacuously on a finite grid")

    procs = fam.processes
    bad, witness, worst = orthogonality_scan(procs, P, G, tol=tol)
    if bad is not None:
        witness = {"pair": [procs[bad[0]].name, procs[bad[1]].name], **witness}
    ev = _basis_evidence([[p] for p in procs], P, G, tol)
    ok = ev.pop("ok") and witness is None
    report.add(
        "j3", ok, witness=witness, basis_size=len(procs), expected_size=2 ** scn.d - 1,
        max_orthogonality_violation=worst, total_dim=sum(ev["dims"] or []), **ev,
    )
    return report


@dataclass
class MultiplicityResult:
    value: int
    certificate: list
    direct_sum: DirectSumReport | None
    ok: bool

    def __int__(self) -> int:
        return self.value


def multiplicity(f: Filtration, mu: Measure, tol=None) -> MultiplicityResult:
    """Max over nodes of (children - 1), with a certifying orthogonal martingale family."""
    tol = mu.space.tol(tol)
    exact = mu.exact
    T, n = f.horizon, mu.space.n
    nodes = []
    k = 0
    for t in range(1, T + 1):
        for support in f[t - 1].blocks:
            kids = np.unique(f[t].labels[support])
            nodes.append((t, support, kids))
            k = max(k, len(kids) - 1)
    if k == 0:
        return MultiplicityResult(0, [], None, f.atoms() == 1)
    inc = nm.zeros((k, T + 1, n), exact)
    w = mu.weights
    for t, support, kids in nodes:
        if len(kids) < 2:
            continue
        child_w = nm.as_array([w[support][f[t].labels[support] == c].sum() for c in kids], exact)
        pc = child_w / child_w.sum()
        vecs = [nm.ones(len(kids), exact)]
        for j in range(len(kids) - 1):
            e = nm.zeros(len(kids), exact)
            e[j] = nm.as_array(1, exact)
            vecs.append(e)
        basis, _ = nm.orthogonalize_local(vecs, pc, tol)
        pos = {int(c): j for j, c in enumerate(kids)}
        local = np.array([pos[int(c)] for c in f[t].labels[support]])
        for j, v in enumerate(basis[1:]):
            inc[j, t, support] = v[local]
    cert = []
    for j in range(k):
        vals = np.cumsum(inc[j], axis=0) if not exact else _cumsum_exact(inc[j])
        cert.append(AdaptedProcess(f, vals, name=f"Z{j + 1}", validate=False))
    ds = direct_sum_check([[z] for z in cert], mu, f, tol)
    target = f.atoms() - 1
    return MultiplicityResult(k, cert, ds, ds.ok and sum(ds.dims) == target and ds.joint_dim == target)


def _cumsum_exact(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    for t in range(1, a.shape[0]):
        out[t] = out[t - 1] + a[t]
    return out


def multiplicity_report(f: Filtration, mu: Measure, tol=None) -> VerificationReport:
    res = multiplicity(f, mu, tol)
    report = VerificationReport("multiplicity")
    branching = 1 + res.value
    report.add(
        "multiplicity", res.ok, value=res.value, max_branching=branching,
        certificate_dims=res.direct_sum.dims if res.direct_sum else [],
        certificate_joint_dim=res.direct_sum.joint_dim if res.direct_sum else 0,
        target=f.atoms() - 1,
    )
    return report
