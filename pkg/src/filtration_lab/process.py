"""Adapted and predictable processes on a finite grid 0..T.

Values are stored pathwise: ``values[t, ω, i]`` is component ``i`` at time
``t`` on outcome ω. Adaptedness (constant on blocks of P_t) and
predictability (constant on blocks of P_{t-1}) are validated on construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _numeric as nm
from .errors import DimMismatch, GridMismatch, NotAdapted, NotMartingale, NotPredictable
from .space import CheckResult, Filtration, Measure, check_same_space, conditional_expectation, join


def _normalize(filtration: Filtration, values) -> np.ndarray:
    space = filtration.space
    arr = nm.as_array(values, space.exact)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[:2] != (filtration.horizon + 1, space.n):
        raise GridMismatch(
            f"values must have shape (T+1, n[, k]) = ({filtration.horizon + 1}, {space.n}, k); got {arr.shape}"
        )
    return arr


def adaptedness_violation(values: np.ndarray, f: Filtration, tol, lag: int = 0):
    """First (t, block) where ``values[t]`` is not constant on blocks of P_{t-lag}."""
    for t in range(lag, f.horizon + 1):
        ok, b = f[t - lag].is_constant(values[t], tol)
        if not ok:
            return t, b
    return None


class AdaptedProcess:
    def __init__(self, filtration: Filtration, values, name: str = "", *, tol=None, validate: bool = True):
        self.filtration = filtration
        self.values = _normalize(filtration, values)
        self.name = name
        if validate:
            bad = adaptedness_violation(self.values, filtration, filtration.space.tol(tol))
            if bad is not None:
                t, b = bad
                raise NotAdapted(
                    f"{name or 'process'} is not adapted at time {t}",
                    {"t": t, "block": list(filtration[t].block_outcomes(b))},
                )

    @property
    def space(self):
        return self.filtration.space

    @property
    def horizon(self) -> int:
        return self.filtration.horizon

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def exact(self) -> bool:
        return self.space.exact

    def increments(self) -> np.ndarray:
        d = nm.zeros(self.values.shape, self.exact)
        d[1:] = self.values[1:] - self.values[:-1]
        return d

    def scalar_values(self) -> np.ndarray:
        self._require_scalar()
        return self.values[:, :, 0]

    def scalar_increments(self) -> np.ndarray:
        self._require_scalar()
        return self.increments()[:, :, 0]

    @property
    def terminal(self) -> np.ndarray:
        v = self.values[self.horizon]
        return v[:, 0] if self.dim == 1 else v

    def _require_scalar(self):
        if self.dim != 1:
            raise DimMismatch(f"{self.name or 'process'} has dimension {self.dim}; a scalar process is required")

    def component(self, i: int) -> "AdaptedProcess":
        name = f"{self.name}[{i}]" if self.dim > 1 else self.name
        return AdaptedProcess(self.filtration, self.values[:, :, i : i + 1], name=name, validate=False)

    def components(self) -> list["AdaptedProcess"]:
        return [self.component(i) for i in range(self.dim)]

    def centered(self) -> "AdaptedProcess":
        return AdaptedProcess(self.filtration, self.values - self.values[0:1], name=self.name, validate=False)

    def on(self, f: Filtration, tol=None) -> "AdaptedProcess":
        """The same paths read as an ``f``-adapted process (validated)."""
        return AdaptedProcess(f, self.values, name=self.name, tol=tol)

    @classmethod
    def stack(cls, processes, name: str = "") -> "AdaptedProcess":
        processes = list(processes)
        f = processes[0].filtration
        for p in processes[1:]:
            f = join(f, p.filtration)
        vals = np.concatenate([p.values for p in processes], axis=2)
        return cls(f, vals, name=name or ",".join(p.name for p in processes), validate=False)

    @classmethod
    def constant(cls, f: Filtration, value=0, dim: int = 1, name: str = "") -> "AdaptedProcess":
        vals = nm.zeros((f.horizon + 1, f.space.n, dim), f.space.exact) + nm.as_array(value, f.space.exact)
        return cls(f, vals, name=name, validate=False)

    def _combine(self, other, op, sym):
        if isinstance(other, AdaptedProcess):
            _check_grid(self, other)
            f = join(self.filtration, other.filtration)
            return AdaptedProcess(f, op(self.values, other.values), name=f"({self.name}{sym}{other.name})", validate=False)
        return AdaptedProcess(
            self.filtration, op(self.values, nm.as_array(other, self.exact)), name=self.name, validate=False
        )

    def __add__(self, other):
        return self._combine(other, np.add, "+")

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-")

    def __mul__(self, other):
        return self._combine(other, np.multiply, "*")

    __rmul__ = __mul__

    def __neg__(self):
        return AdaptedProcess(self.filtration, -self.values, name=f"-{self.name}", validate=False)

    def allclose(self, other: "AdaptedProcess", tol=None) -> bool:
        tol = self.space.tol(tol)
        return self.values.shape == other.values.shape and nm.abs_max(self.values - other.values) <= tol

    def __repr__(self) -> str:
        return f"AdaptedProcess({self.name!r}, T={self.horizon}, dim={self.dim})"


class PredictableProcess:
    """``values[t]`` for t = 1..T is constant on blocks of P_{t-1}; row 0 is unused (zero)."""

    def __init__(self, filtration: Filtration, values, name: str = "", *, tol=None, validate: bool = True):
        self.filtration = filtration
        arr = _normalize(filtration, values).copy()
        arr[0] = nm.as_array(0, filtration.space.exact)
        self.values = arr
        self.name = name
        if validate:
            bad = adaptedness_violation(arr, filtration, filtration.space.tol(tol), lag=1)
            if bad is not None:
                t, b = bad
                raise NotPredictable(
                    f"{name or 'process'} is not predictable at time {t}",
                    {"t": t, "block": list(filtration[t - 1].block_outcomes(b))},
                )

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def horizon(self) -> int:
        return self.filtration.horizon

    @classmethod
    def zeros(cls, f: Filtration, dim: int = 1, name: str = "") -> "PredictableProcess":
        return cls(f, nm.zeros((f.horizon + 1, f.space.n, dim), f.space.exact), name=name, validate=False)

    def __repr__(self) -> str:
        return f"PredictableProcess({self.name!r}, T={self.horizon}, dim={self.dim})"


@dataclass
class DoobDecomposition:
    """X = X_0 + M + A with M a martingale and A predictable, both null at 0."""

    initial: np.ndarray
    martingale_part: AdaptedProcess
    drift_part: AdaptedProcess


def _check_grid(x: AdaptedProcess, y: AdaptedProcess) -> None:
    check_same_space(x.space, y.space)
    if x.horizon != y.horizon:
        raise GridMismatch(f"horizons {x.horizon} and {y.horizon} differ")


def _require_adapted(x: AdaptedProcess, f: Filtration, tol) -> None:
    check_same_space(x.space, f.space)
    if x.horizon != f.horizon:
        raise GridMismatch(f"process horizon {x.horizon} differs from filtration horizon {f.horizon}")
    if x.filtration is f:
        return
    bad = adaptedness_violation(x.values, f, tol)
    if bad is not None:
        t, b = bad
        raise NotAdapted(
            f"{x.name or 'process'} is not adapted to {f.name or 'the filtration'} at time {t}",
            {"t": t, "block": list(f[t].block_outcomes(b))},
        )


def conditional_drift(x: AdaptedProcess, mu: Measure, f: Filtration) -> np.ndarray:
    """E^mu[ΔX_t | F_{t-1}] pathwise, shape (T+1, n, k) with row 0 zero."""
    d = x.increments()
    drift = nm.zeros(d.shape, x.exact)
    for t in range(1, f.horizon + 1):
        drift[t] = conditional_expectation(d[t], f[t - 1], mu)
    return drift


def doob_decomposition(x: AdaptedProcess, mu: Measure, f: Filtration | None = None, tol=None) -> DoobDecomposition:
    f = x.filtration if f is None else f
    _require_adapted(x, f, x.space.tol(tol))
    drift_inc = conditional_drift(x, mu, f)
    drift = np.cumsum(drift_inc, axis=0)
    mart = np.cumsum(x.increments() - drift_inc, axis=0)
    return DoobDecomposition(
        initial=x.values[0],
        martingale_part=AdaptedProcess(f, mart, name=f"M({x.name})" if x.name else "M", validate=False),
        drift_part=AdaptedProcess(f, drift, name=f"A({x.name})" if x.name else "A", validate=False),
    )


def _first_violation(inc: np.ndarray, f: Filtration, tol):
    """Scan predictable increments for the first entry exceeding ``tol``."""
    worst = nm.abs_max(inc)
    for t in range(1, f.horizon + 1):
        mag = np.abs(inc[t])
        if mag.ndim > 1:
            mag = mag.max(axis=tuple(range(1, mag.ndim)))
        bad = np.flatnonzero(mag > tol)
        if bad.size:
            b = int(f[t - 1].labels[bad[0]])
            value = inc[t][bad[0]]
            value = value[0] if np.ndim(value) and len(value) == 1 else value
            return {"t": t, "block": list(f[t - 1].block_outcomes(b)), "value": value}, worst
    return None, worst


def is_martingale(x: AdaptedProcess, mu: Measure, f: Filtration | None = None, tol=None) -> CheckResult:
    f = x.filtration if f is None else f
    tol = x.space.tol(tol)
    _require_adapted(x, f, tol)
    witness, worst = _first_violation(conditional_drift(x, mu, f), f, tol)
    return CheckResult(witness is None, witness, worst)


def quadratic_covariation(x: AdaptedProcess, y: AdaptedProcess) -> AdaptedProcess:
    """[x, y]_t = Σ_{s≤t} Δx_s Δy_s, pathwise and measure-free."""
    _check_grid(x, y)
    prod = x.scalar_increments() * y.scalar_increments()
    f = x.filtration if x.filtration is y.filtration else join(x.filtration, y.filtration)
    return AdaptedProcess(f, np.cumsum(prod, axis=0), name=f"[{x.name},{y.name}]", validate=False)


def predictable_covariation(
    x: AdaptedProcess, y: AdaptedProcess, mu: Measure, f: Filtration | None = None, tol=None
) -> AdaptedProcess:
    """⟨x, y⟩ under (mu, f): the Doob compensator of [x, y]."""
    f = join(x.filtration, y.filtration) if f is None else f
    tol = x.space.tol(tol)
    _require_adapted(x, f, tol)
    _require_adapted(y, f, tol)
    bracket = quadratic_covariation(x, y)
    comp = np.cumsum(conditional_drift(bracket, mu, f), axis=0)
    return AdaptedProcess(f, comp, name=f"<{x.name},{y.name}>", validate=False)


def strongly_orthogonal(
    x: AdaptedProcess, y: AdaptedProcess, mu: Measure, f: Filtration | None = None, tol=None
) -> CheckResult:
    """Whether [x, y] is a (mu, f)-martingale, i.e. ⟨x, y⟩ ≡ 0."""
    f = join(x.filtration, y.filtration) if f is None else f
    tol = x.space.tol(tol)
    for p in (x, y):
        chk = is_martingale(p, mu, f, tol)
        if not chk:
            raise NotMartingale(f"{p.name or 'process'} is not a martingale", chk.witness)
    comp_inc = predictable_covariation(x, y, mu, f, tol).increments()
    witness, worst = _first_violation(comp_inc, f, tol)
    return CheckResult(witness is None, witness, worst)


def covariation_increments(m: AdaptedProcess, mu: Measure, f: Filtration | None = None) -> np.ndarray:
    """Δ⟨M^i, M^j⟩_t for all component pairs, shape (T+1, n, k, k), row 0 zero.

    Entry ``[t, ω]`` is the conditional covariance matrix of the increment
    ΔM_t given the block of F_{t-1} containing ω.
    """
    f = m.filtration if f is None else f
    d = m.increments()
    outer = d[:, :, :, None] * d[:, :, None, :]
    out = nm.zeros(outer.shape, m.exact)
    for t in range(1, f.horizon + 1):
        out[t] = conditional_expectation(outer[t], f[t - 1], mu)
    return out


def orthogonality_scan(processes, mu: Measure, f: Filtration, pairs=None, tol=None):
    """Check strong orthogonality for many pairs of scalar processes at once.

    Every process is first verified to be a (mu, f)-martingale. ``pairs``
    defaults to all unordered pairs. Returns ``(first_bad_pair, witness, worst)``
    with ``first_bad_pair`` None when all pairs pass.
    """
    procs = list(processes)
    if not procs:
        return None, None, nm.ZERO
    tol = procs[0].space.tol(tol)
    for p in procs:
        chk = is_martingale(p, mu, f, tol)
        if not chk:
            raise NotMartingale(f"{p.name or 'process'} is not a martingale", chk.witness)
    if pairs is None:
        pairs = [(a, b) for a in range(len(procs)) for b in range(a + 1, len(procs))]
    d = np.stack([p.scalar_increments() for p in procs], axis=2)
    outer = d[:, :, :, None] * d[:, :, None, :]
    cov = nm.zeros(outer.shape, procs[0].exact)
    for t in range(1, f.horizon + 1):
        cov[t] = conditional_expectation(outer[t], f[t - 1], mu)
    worst = nm.ZERO if procs[0].exact else 0.0
    first, first_witness = None, None
    for a, b in pairs:
        witness, w = _first_violation(cov[:, :, a, b], f, tol)
        worst = max(worst, w)
        if witness is not None and first is None:
            first, first_witness = (a, b), witness
    return first, first_witness, worst
