"""Structure condition, minimal martingale measure and Girsanov transfer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _numeric as nm
from .errors import MinimalMeasureNotPositive, NotMartingale, StructureConditionFails
from .process import (
    AdaptedProcess,
    DoobDecomposition,
    PredictableProcess,
    conditional_drift,
    covariation_increments,
    doob_decomposition,
    is_martingale,
)
from .representation import prp_check
from .space import Filtration, Measure, density_process


@dataclass
class StructureCondition:
    """ΔA^i = α^i Δ⟨M^i⟩ and C λ̂ = γ with γ^i = α^i c_ii, node by node."""

    decomposition: DoobDecomposition
    alpha: PredictableProcess
    lambda_hat: PredictableProcess
    covariation: np.ndarray  # (T+1, n, k, k): Δ⟨M^i, M^j⟩
    clock: np.ndarray  # (T+1, n): ΔB = trace of the covariation
    filtration: Filtration
    mu: Measure

    @property
    def martingale_part(self) -> AdaptedProcess:
        return self.decomposition.martingale_part


def structure_condition(x: AdaptedProcess, mu: Measure, f: Filtration | None = None, tol=None) -> StructureCondition:
    f = x.filtration if f is None else f
    tol = x.space.tol(tol)
    exact = x.exact
    dec = doob_decomposition(x, mu, f, tol)
    m = dec.martingale_part
    cov = covariation_increments(m, mu, f)
    drift_inc = dec.drift_part.increments()
    T, n, k = drift_inc.shape[0] - 1, x.space.n, x.dim
    alpha = nm.zeros((T + 1, n, k), exact)
    lam = nm.zeros((T + 1, n, k), exact)
    clock = nm.zeros((T + 1, n), exact)
    for t in range(1, T + 1):
        part = f[t - 1]
        for b, support in enumerate(part.blocks):
            rep = support[0]
            cmat = cov[t, rep]
            da = drift_inc[t, rep]
            var = np.array([cmat[i, i] for i in range(k)], dtype=cmat.dtype)
            for i in range(k):
                if abs(var[i]) <= tol:
                    if abs(da[i]) > tol:
                        raise StructureConditionFails(
                            f"component {i} drifts without noise at time {t}",
                            {"t": t, "block": list(part.block_outcomes(b)), "component": i, "drift": da[i]},
                        )
                else:
                    alpha[t, support, i] = da[i] / var[i]
            db = var.sum()
            clock[t, support] = db
            if abs(db) <= tol:
                continue
            c = cmat / db
            gamma = alpha[t, rep] * var / db
            sol = nm.as_array(nm.min_norm_solve(c, gamma, tol), exact)
            if nm.abs_max(c @ sol - gamma) > tol * (1 + nm.abs_max(gamma)):
                raise StructureConditionFails(
                    f"drift is not in the range of the covariation at time {t}",
                    {"t": t, "block": list(part.block_outcomes(b))},
                )
            lam[t, support, :] = sol
    return StructureCondition(
        decomposition=dec,
        alpha=PredictableProcess(f, alpha, name="alpha", validate=False),
        lambda_hat=PredictableProcess(f, lam, name="lambda_hat", validate=False),
        covariation=cov,
        clock=clock,
        filtration=f,
        mu=mu,
    )


@dataclass
class MinimalMeasure:
    density: AdaptedProcess
    measure: Measure
    factors: np.ndarray  # (T+1, n): 1 - λ̂_tᵀ ΔM_t, row 0 equal to 1


def doleans_exponential(sc: StructureCondition, m: AdaptedProcess | None = None, tol=None) -> MinimalMeasure:
    """L_t = Π_{s≤t} (1 - λ̂_sᵀ ΔM_s) and the measure L_T · mu."""
    m = sc.martingale_part if m is None else m
    f, mu = sc.filtration, sc.mu
    tol = m.space.tol(tol)
    exact = m.exact
    dm = m.increments()
    factors = nm.ones(dm.shape[:2], exact) - (sc.lambda_hat.values * dm).sum(axis=2)
    factors[0] = nm.as_array(1, exact)
    for t in range(1, f.horizon + 1):
        bad = np.flatnonzero(factors[t] <= tol)
        if bad.size:
            w = int(bad[0])
            b = int(f[t].labels[w])
            raise MinimalMeasureNotPositive(
                f"1 - λ̂ᵀΔM = {factors[t][w]} is not positive at time {t}",
                {"t": t, "block": list(f[t].block_outcomes(b)), "value": factors[t][w]},
            )
    dens = np.cumprod(factors, axis=0) if not exact else _exact_cumprod(factors)
    density = AdaptedProcess(f, dens, name="L", validate=False)
    measure = mu.reweight(density.terminal, tol=tol)
    return MinimalMeasure(density, measure, factors)


def _exact_cumprod(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    for t in range(1, a.shape[0]):
        out[t] = out[t - 1] * a[t]
    return out


def minimal_martingale_measure(x: AdaptedProcess, mu: Measure, f: Filtration | None = None, tol=None) -> MinimalMeasure:
    sc = structure_condition(x, mu, f, tol)
    return doleans_exponential(sc, tol=tol)


def girsanov_martingale_part(x: AdaptedProcess, q: Measure, p: Measure, f: Filtration | None = None, tol=None) -> AdaptedProcess:
    """X̃ = X - Σ (1/L̃_{s-1}) E^q[ΔL̃_s ΔX_s | F_{s-1}] with L̃ = dp/dq along ``f``."""
    f = x.filtration if f is None else f
    tol = x.space.tol(tol)
    chk = is_martingale(x, q, f, tol)
    if not chk:
        raise NotMartingale(f"{x.name or 'process'} is not a martingale under the source measure", chk.witness)
    lt = density_process(p, q, f)
    dl = lt.increments()  # (T+1, n, 1)
    prod = AdaptedProcess(f, np.cumsum(dl * x.increments(), axis=0), validate=False)
    corr = conditional_drift(prod, q, f)
    prev = nm.zeros(lt.values.shape, x.exact)
    prev[1:] = lt.values[:-1]
    prev[0] = nm.as_array(1, x.exact)
    adj = np.cumsum(corr / prev, axis=0)
    return AdaptedProcess(f, x.values - adj, name=f"~{x.name}", validate=False)


def prp_transfer_check(x: AdaptedProcess, f: Filtration, p: Measure, tol=None) -> dict:
    """Compare PRP of X under its minimal measure with PRP of M under ``p``."""
    mm = minimal_martingale_measure(x, p, f, tol)
    m = doob_decomposition(x, p, f, tol).martingale_part
    under_px = prp_check(x.centered().components(), mm.measure, f, tol)
    under_p = prp_check(m.components(), p, f, tol)
    return {
        "prp_x_under_px": under_px.ok,
        "dim_x_under_px": under_px.dim,
        "prp_m_under_p": under_p.ok,
        "dim_m_under_p": under_p.dim,
        "target": under_p.target,
        "agree": under_px.ok == under_p.ok,
        "minimal_measure": mm,
    }
