"""Progressive enlargement of a market filtration by a default time.

A :class:`DefaultModel` is a market (space, filtration, driver) together with
a joint weight table over (market outcome, default time). Default times live
on a grid ``Θ ⊆ {1..T} ∪ {∞}``; ``∞`` means no default by the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numeric as nm
from .enlarge import _basis_evidence, bracket_vector
from .errors import (
    CertainDefault,
    DensityHypothesisFails,
    HypothesisFailed,
    InvalidDefaultModel,
    MinimalMeasureNotPositive,
    StructureConditionFails,
    ZeroJointWeightInsideSupport,
)
from .process import AdaptedProcess, PredictableProcess, doob_decomposition, is_martingale, strongly_orthogonal
from .report import VerificationReport
from .representation import prp_check
from .semimart import girsanov_martingale_part, minimal_martingale_measure
from .space import (
    CheckResult,
    FiniteProbSpace,
    Filtration,
    Measure,
    Partition,
    independent_partitions,
    join,
)

INF = math.inf


def theta_label(theta) -> str:
    return "inf" if theta == INF else str(int(theta))


class DefaultModel:
    """Market plus the joint law of (market outcome, default time)."""

    def __init__(self, space: FiniteProbSpace, filtration: Filtration, driver: AdaptedProcess | None, theta, joint, *, tol=None):
        self.space = space
        self.filtration = filtration
        self.driver = driver.on(filtration) if driver is not None else None
        self.tol = space.tol(tol)
        T = filtration.horizon
        theta = [INF if (isinstance(th, str) and th.lower() in ("inf", "∞")) or th == INF else int(th) for th in theta]
        if len(set(theta)) != len(theta):
            raise InvalidDefaultModel("default times must be distinct")
        for th in theta:
            if th != INF and not 1 <= th <= T:
                raise InvalidDefaultModel(f"default time {th} is outside 1..{T}")
        order = sorted(range(len(theta)), key=lambda k: theta[k])
        self.theta = [theta[k] for k in order]
        joint = nm.as_array(joint, space.exact)
        if joint.shape != (space.n, len(theta)):
            raise InvalidDefaultModel(f"joint table has shape {joint.shape}, expected {(space.n, len(theta))}")
        self.joint = joint[:, order]
        if (self.joint < 0).any():
            raise InvalidDefaultModel("joint weights must be nonnegative")
        gap = nm.abs_max(self.joint.sum(axis=1) - space.weights)
        if gap > self.tol:
            raise InvalidDefaultModel(f"market marginal of the joint table differs from the market weights by {gap}")

    @property
    def horizon(self) -> int:
        return self.filtration.horizon

    @property
    def exact(self) -> bool:
        return self.space.exact

    def theta_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    def decoupled(self) -> "DefaultModel":
        """Same marginals, independent default time."""
        prod = self.space.weights[:, None] * self.theta_marginal()[None, :]
        return DefaultModel(self.space, self.filtration, self.driver, self.theta, prod, tol=self.tol)


@dataclass
class EnlargedSpace:
    model: DefaultModel
    space: FiniteProbSpace
    market_idx: np.ndarray
    theta_idx: np.ndarray
    tau: np.ndarray  # default time per enlarged outcome (float, inf for no default)
    F: Filtration  # market filtration embedded
    Hnat: Filtration  # natural filtration of τ ∧ t
    G: Filtration
    driver: AdaptedProcess | None

    @property
    def horizon(self) -> int:
        return self.G.horizon

    @property
    def P(self) -> Measure:
        return self.space.measure

    def lift(self, values: np.ndarray) -> np.ndarray:
        """Pull market arrays (outcome axis 1 for (T+1, n, ...) shapes) back to the product space."""
        return values[:, self.market_idx]

    def default_indicator(self) -> AdaptedProcess:
        T = self.horizon
        vals = np.array([[1 if th <= t else 0 for th in self.tau] for t in range(T + 1)], dtype=object)
        return AdaptedProcess(self.Hnat, nm.as_array(vals, self.space.exact), name="D", validate=False)


def support_violation(model: DefaultModel):
    """First (outcome, θ) pair with P(ω) P(τ=θ) > 0 but zero joint weight."""
    marg = model.theta_marginal()
    for i, w in enumerate(model.space.weights):
        for k, th in enumerate(model.theta):
            if w > 0 and marg[k] > 0 and model.joint[i, k] == 0:
                return {"outcome": model.space.outcomes[i], "theta": theta_label(th)}
    return None


def build_enlarged(model: DefaultModel, strict: bool = True) -> EnlargedSpace:
    """Product space of positive-weight (ω, θ) pairs with 𝓖_t = 𝓕_t ∨ σ(τ ∧ t).

    With ``strict`` every pair charged by the product of marginals must carry
    weight, as equivalence with the decoupling measure demands.
    """
    if strict:
        bad = support_violation(model)
        if bad is not None:
            raise ZeroJointWeightInsideSupport(
                f"pair {bad['outcome']}@{bad['theta']} has zero weight inside the support", bad
            )
    mi, ti = np.nonzero(model.joint != 0)
    outcomes = [f"{model.space.outcomes[i]}@{theta_label(model.theta[k])}" for i, k in zip(mi, ti)]
    weights = [model.joint[i, k] for i, k in zip(mi, ti)]
    space = FiniteProbSpace(outcomes, weights, exact=model.exact, tol=model.tol)
    tau = np.array([float(model.theta[k]) for k in ti])
    T = model.horizon
    f_parts = [Partition(space, model.filtration[t].labels[mi]) for t in range(T + 1)]
    F = Filtration(space, f_parts, name="F")
    h_parts = [Partition(space, [theta_label(th) if th <= t else "alive" for th in tau]) for t in range(T + 1)]
    Hnat = Filtration(space, h_parts, name="H")
    G = join(F, Hnat)
    G.name = "G"
    driver = None
    if model.driver is not None:
        driver = AdaptedProcess(F, model.driver.values[:, mi], name=model.driver.name or "X", validate=False)
    return EnlargedSpace(model, space, mi, ti, tau, F, Hnat, G, driver)


def _atom_labels(model: DefaultModel, part: Partition, b: int) -> list:
    return [model.space.outcomes[i] for i in part.blocks[b]]


def density_hypothesis_check(model: DefaultModel, tol=None) -> CheckResult:
    """Conditional law of τ given each 𝓕_t-atom has the support of the law of τ."""
    tol = model.space.tol(tol)
    marg = model.theta_marginal()
    charged = marg > tol
    for t in range(model.horizon + 1):
        part = model.filtration[t]
        mass = nm.block_sums(model.joint, part.labels, part.nblocks)
        for b in range(part.nblocks):
            cond = mass[b] > tol
            for k in np.flatnonzero(cond != charged):
                return CheckResult(
                    False,
                    {
                        "t": t,
                        "atom": _atom_labels(model, part, b),
                        "theta": theta_label(model.theta[k]),
                        "conditional_mass": mass[b][k] / mass[b].sum(),
                        "marginal_mass": marg[k],
                    },
                )
    return CheckResult(True)


@dataclass
class HazardProcess:
    """Hazard λ on 𝔾 and the compensated default martingale H."""

    lam: PredictableProcess
    survivors: np.ndarray  # (T+1, n) booleans: 1_{τ ≥ t}, row 0 unused
    H: AdaptedProcess
    enlarged: EnlargedSpace


def _hazard_on(E: EnlargedSpace, mu: Measure, tol) -> HazardProcess:
    G, T, n = E.G, E.horizon, E.space.n
    exact = E.space.exact
    lam = nm.zeros((T + 1, n, 1), exact)
    surv = np.zeros((T + 1, n), dtype=bool)
    w = mu.weights
    for t in range(1, T + 1):
        alive = E.tau >= t
        surv[t] = alive
        for support in G[t - 1].blocks:
            if not alive[support[0]]:
                continue
            num = w[support][E.tau[support] == t].sum()
            den = w[support].sum()
            val = num / den if num != 0 else nm.as_array(0, exact)[()]
            if val >= 1 - tol:
                raise CertainDefault(
                    f"default is certain at time {t} on a survivor block",
                    {"t": t, "block": [E.space.outcomes[i] for i in support], "lambda": val},
                )
            lam[t, support, 0] = val
    jump = nm.as_array(np.array([[1 if th <= t else 0 for th in E.tau] for t in range(T + 1)]), exact)
    comp = nm.zeros((T + 1, n), exact)
    for t in range(1, T + 1):
        comp[t] = comp[t - 1] + np.where(surv[t], lam[t, :, 0], 0)
    H = AdaptedProcess(G, jump - comp, name="H", validate=False)
    return HazardProcess(PredictableProcess(G, lam, name="lambda", validate=False), surv, H, E)


def hazard(model: DefaultModel, E: EnlargedSpace | None = None, tol=None) -> HazardProcess:
    """λ_t = P(τ = t | 𝓖_{t-1}) / P(τ ≥ t | 𝓖_{t-1}) on survivor blocks, zero after default."""
    tol = model.space.tol(tol)
    chk = density_hypothesis_check(model, tol)
    if not chk:
        raise DensityHypothesisFails("density hypothesis fails", chk.witness)
    E = build_enlarged(model) if E is None else E
    return _hazard_on(E, E.P, tol)


def compensator_gap(hz: HazardProcess, mu: Measure | None = None):
    """Distance between H and the default indicator minus its Doob compensator."""
    E = hz.enlarged
    mu = E.P if mu is None else mu
    d = E.default_indicator()
    m = doob_decomposition(d, mu, E.G).martingale_part
    return nm.abs_max(m.scalar_values() - hz.H.scalar_values())


def decoupling_pstar(model: DefaultModel, E: EnlargedSpace | None = None, tol=None) -> Measure:
    """P*(ω, θ) = P(ω) P(τ = θ) on the enlarged space."""
    tol = model.space.tol(tol)
    chk = density_hypothesis_check(model, tol)
    if not chk:
        raise DensityHypothesisFails("density hypothesis fails", chk.witness)
    E = build_enlarged(model) if E is None else E
    w = model.space.weights[E.market_idx] * model.theta_marginal()[E.theta_idx]
    return Measure(E.space, w, tol=tol)


def _tau_partition(E: EnlargedSpace) -> Partition:
    return E.Hnat[E.horizon]


def decoupling_check(model: DefaultModel, E: EnlargedSpace, pstar: Measure, M: list, tol) -> dict:
    """Evidence that P* decouples 𝔽 from τ while preserving both marginals."""
    P = E.P
    fT, hT = E.F[E.horizon], _tau_partition(E)
    gap_f = nm.abs_max(nm.block_sums(pstar.weights - P.weights, fT.labels, fT.nblocks))
    gap_h = nm.abs_max(nm.block_sums(pstar.weights - P.weights, hT.labels, hT.nblocks))
    ind = independent_partitions([fT, hT], pstar, tol)
    hz = _hazard_on(E, pstar, tol)
    orth = all(strongly_orthogonal(m, hz.H, pstar, E.G, tol).ok for m in M)
    ok = gap_f <= tol and gap_h <= tol and ind.ok and orth
    return {
        "ok": ok,
        "restriction_f_gap": gap_f,
        "restriction_tau_gap": gap_h,
        "independent": ind.ok,
        "strongly_orthogonal": orth,
        "hazard": hz,
    }


def _market_node_martingales(E: EnlargedSpace):
    """Indicator-increment martingales, one per (node, child) of the market tree."""
    model = E.model
    f, w = model.filtration, model.space.weights
    exact = model.exact
    T, n = f.horizon, model.space.n
    for t in range(1, T + 1):
        for b, support in enumerate(f[t - 1].blocks):
            kids = f[t].labels[support]
            total = w[support].sum()
            for c in np.unique(kids):
                inc = nm.zeros((T + 1, n, 1), exact)
                pc = w[support][kids == c].sum() / total
                inc[t, support, 0] = np.where(kids == c, 1, 0) - pc
                vals = np.cumsum(inc, axis=0)
                node = {"t": t, "block": [model.space.outcomes[i] for i in support], "child": int(c)}
                yield node, AdaptedProcess(E.F, vals[:, E.market_idx], name=f"Z{t}.{b}.{int(c)}", validate=False)


def immersion_check(model: DefaultModel, E: EnlargedSpace | None = None, tol=None) -> CheckResult:
    """Every (P, 𝔽)-martingale stays a (P, 𝔾)-martingale, tested on a spanning family."""
    tol = model.space.tol(tol)
    E = build_enlarged(model, strict=False) if E is None else E
    worst = nm.ZERO if model.exact else 0.0
    for node, z in _market_node_martingales(E):
        chk = is_martingale(z, E.P, E.G, tol)
        worst = max(worst, chk.max_violation)
        if not chk:
            return CheckResult(False, {**node, **chk.witness}, worst)
    return CheckResult(True, None, worst)


def _fail(report, claim, message, witness=None, **evidence):
    report.add(claim, False, witness=witness, note=message, **evidence)
    raise HypothesisFailed(claim, message, witness, report)


def kusuoka_verify(model: DefaultModel, tol=None) -> VerificationReport:
    report = VerificationReport("kusuoka")
    tol = model.space.tol(tol)
    if model.driver is None:
        raise InvalidDefaultModel("the market needs a driver")

    dens = density_hypothesis_check(model, tol)
    if not dens:
        _fail(report, "density", "conditional law of the default time is not equivalent to its law", dens.witness)
    try:
        E = build_enlarged(model)
    except ZeroJointWeightInsideSupport as exc:
        _fail(report, "density", str(exc), exc.witness)
    report.add("density", True, atoms=E.G.atoms(), theta=[theta_label(t) for t in model.theta])

    imm = immersion_check(model, E, tol)
    if not imm:
        _fail(report, "immersion", "a market martingale is not a martingale in the enlarged filtration", imm.witness)
    report.add("immersion", True, max_violation=imm.max_violation)

    P = E.P
    try:
        mm = minimal_martingale_measure(model.driver, model.space.measure, model.filtration, tol)
    except (StructureConditionFails, MinimalMeasureNotPositive) as exc:
        _fail(report, "A1", str(exc), exc.witness)
    prp = prp_check(model.driver.centered().components(), mm.measure, model.filtration, tol)
    if not prp:
        _fail(report, "A1", "driver lacks the representation property", {"dim": prp.dim, "target": prp.target})
    report.add("A1", True, dim=prp.dim, target=prp.target)

    m_market = doob_decomposition(model.driver, model.space.measure, model.filtration, tol).martingale_part
    M = AdaptedProcess(E.G, m_market.values[:, E.market_idx], name="M", validate=False).components()
    if len(M) > 1:
        for k, p in enumerate(M):
            p.name = f"M{k + 1}"
    hz = _hazard_on(E, P, tol)
    H = hz.H
    hmart = is_martingale(H, P, E.G, tol)
    gap = compensator_gap(hz)
    lam = {}
    for t in range(1, E.horizon + 1):
        for support in E.G[t - 1].blocks:
            if hz.survivors[t, support[0]] and hz.lam.values[t, support[0], 0] != 0:
                lam[f"{t}:" + "|".join(sorted({model.space.outcomes[i] for i in E.market_idx[support]}))] = hz.lam.values[
                    t, support[0], 0
                ]
    report.add("hazard", hmart.ok and gap <= tol, hazard=lam, compensator_gap=gap, witness=hmart.witness)

    dh = H.scalar_increments()
    avoid = all(nm.abs_max(m.scalar_increments() * dh) <= tol for m in M)
    report.add("avoidance", avoid, informational=True)

    if avoid:
        ev = _basis_evidence([M, [H]], P, E.G, tol)
        report.add("basis", ev.pop("ok"), families=["M", "H"], **ev)
    else:
        two = prp_check(M + [H], P, E.G, tol)
        report.add(
            "basis_two_family", two.ok, informational=True, dim=two.dim, target=two.target,
            note="the two-family conclusion needs avoidance; grids reach it only when moves are staggered",
        )

    pstar = decoupling_pstar(model, E, tol)
    dc = decoupling_check(model, E, pstar, M, tol)
    hstar = dc.pop("hazard").H
    hstar.name = "H*"
    report.add("decoupling", dc.pop("ok"), q_equals_p=bool(nm.abs_max(pstar.weights - P.weights) <= tol), **dc)

    families = [M, [hstar]]
    if not avoid:
        families.append(list(bracket_vector(M, [hstar], pstar, E.G, tol).processes))
        for b, m in zip(families[2], M):
            b.name = f"[{m.name},H*]"
    ev = _basis_evidence(families, pstar, E.G, tol)
    report.add("pstar_basis", ev.pop("ok"), families=[[p.name for p in fam] for fam in families], **ev)

    m_back = [girsanov_martingale_part(m, pstar, P, E.G, tol) for m in M]
    h_back = girsanov_martingale_part(hstar, pstar, P, E.G, tol)
    gap_m = max((nm.abs_max(a.values - b.values) for a, b in zip(m_back, M)), default=nm.ZERO)
    gap_h = nm.abs_max(h_back.values - H.values)
    transfer_ok = gap_m <= tol and gap_h <= tol
    evidence = {"m_gap": gap_m, "h_gap": gap_h}
    if not avoid:
        back = [girsanov_martingale_part(b, pstar, P, E.G, tol) for b in families[2]]
        three = prp_check(m_back + [h_back] + back, P, E.G, tol)
        evidence.update(dims_under_p=three.dim, target=three.target)
        transfer_ok = transfer_ok and three.ok
    report.add("transfer", transfer_ok, **evidence)
    return report
