"""Dual-mode arithmetic: exact rationals (object arrays of Fraction) or float64.

Every array in the library is either ``dtype=object`` holding ``Fraction``
entries (exact mode) or ``float64`` (float mode). Mixing the two inside one
computation is avoided by coercing through :func:`as_array` with the mode of
the measure being used.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction

import numpy as np

DEFAULT_TOL = 1e-9
TOL_ENV_VAR = "FILTRATION_LAB_TOL"

ZERO = Fraction(0)
ONE = Fraction(1)


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV_VAR)
    if raw:
        return float(raw)
    return DEFAULT_TOL


def resolve_tol(tol, exact: bool):
    """Tolerance actually used: explicit value, else 0 in exact mode, else the default."""
    if tol is not None:
        return tol
    return ZERO if exact else default_tol()


def is_exact(arr) -> bool:
    return isinstance(arr, np.ndarray) and arr.dtype == object


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


def as_array(values, exact: bool) -> np.ndarray:
    if exact:
        arr = np.asarray(values, dtype=object)
        out = np.empty(arr.shape, dtype=object)
        flat_in = arr.reshape(-1)
        flat_out = out.reshape(-1)
        for i, x in enumerate(flat_in):
            flat_out[i] = _to_fraction(x)
        return out
    return np.asarray(values, dtype=float)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        return np.full(shape, ZERO, dtype=object)
    return np.zeros(shape, dtype=float)


def ones(shape, exact: bool) -> np.ndarray:
    if exact:
        return np.full(shape, ONE, dtype=object)
    return np.ones(shape, dtype=float)


def to_float(x) -> float:
    return float(x)


def abs_max(arr, default=ZERO):
    arr = np.asarray(arr)
    if arr.size == 0:
        return default
    return np.abs(arr).max()


def sqrt(x):
    """Square root; stays rational when ``x`` is a perfect rational square."""
    if isinstance(x, Fraction):
        n, d = x.numerator, x.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
    return math.sqrt(float(x))


def block_sums(values: np.ndarray, labels: np.ndarray, nblocks: int) -> np.ndarray:
    """Sum ``values`` (first axis indexed by outcome) within each block label."""
    out = zeros((nblocks,) + values.shape[1:], is_exact(values))
    np.add.at(out, labels, values)
    return out


# ---------------------------------------------------------------------------
# linear algebra working in both modes


def _exact_row_echelon_pivots(a: np.ndarray) -> list[int]:
    """Indices of a maximal linearly independent subset of the rows of ``a``."""
    rows = [list(r) for r in a]
    ncols = a.shape[1] if a.ndim == 2 else 0
    reduced: list[tuple[int, list]] = []  # (pivot column, row)
    kept = []
    for idx, row in enumerate(rows):
        r = list(row)
        for piv, base in reduced:
            if r[piv] != 0:
                f = r[piv] / base[piv]
                r = [x - f * y for x, y in zip(r, base)]
        piv = next((j for j in range(ncols) if r[j] != 0), None)
        if piv is not None:
            reduced.append((piv, r))
            kept.append(idx)
    return kept


def _exact_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a square nonsingular exact system by Gauss-Jordan elimination.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    n = a.shape[0]
    cols = b.reshape(n, -1)
    p = cols.shape[1]
    m = [list(a[i]) + list(cols[i]) for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    out = np.array([m[i][n:] for i in range(n)], dtype=object).reshape((n, p))
    return out.reshape(b.shape)


def min_norm_solve(a: np.ndarray, b: np.ndarray, tol) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a x = b`` (``b`` a vector or matrix).

    Float mode defers to LAPACK with the relative cutoff ``tol``; exact mode
    parametrises ``x`` over the row space of ``a`` and solves the resulting
    full-rank normal equations with rationals.
    """
    out_shape = a.shape[1:] + b.shape[1:]
    if a.size == 0:
        return zeros(out_shape, is_exact(a))
    if not is_exact(a):
        rcond = max(float(tol), np.finfo(float).eps * max(a.shape))
        x, *_ = np.linalg.lstsq(a, b.astype(float), rcond=rcond)
        return x
    rows = _exact_row_echelon_pivots(a)
    if not rows:
        return zeros(out_shape, True)
    basis = a[rows]  # r x n, independent rows spanning the row space
    design = a @ basis.T  # m x r, full column rank
    normal = design.T @ design
    z = _exact_solve(normal, design.T @ b)
    return basis.T @ z


def orthogonalize_local(vectors: list[np.ndarray], w: np.ndarray, tol):
    """Weighted Gram-Schmidt on vectors sharing one support.

    Returns ``(basis, sqnorms)``. Float mode runs modified Gram-Schmidt with a
    second re-orthogonalisation pass and normalises (sqnorm 1); a vector is
    dropped when its residual norm falls under ``tol`` times the largest
    input norm. Exact mode keeps orthogonal, unnormalised rationals and drops
    exactly-zero residuals.
    """
    basis: list[np.ndarray] = []
    sqnorms: list = []
    if not vectors:
        return basis, sqnorms
    exact = is_exact(vectors[0])
    if exact:
        for v in vectors:
            q = v.copy()
            for b, nb in zip(basis, sqnorms):
                c = (w * q * b).sum() / nb
                if c != 0:
                    q = q - c * b
            nq = (w * q * q).sum()
            if nq != 0:
                basis.append(q)
                sqnorms.append(nq)
        return basis, sqnorms
    scale = max(math.sqrt(float((w * v * v).sum())) for v in vectors)
    if scale == 0.0:
        return basis, sqnorms
    cutoff = max(float(tol), 1e-13) * scale
    for v in vectors:
        q = np.array(v, dtype=float)
        for _ in range(2):
            for b in basis:
                q -= (w * q * b).sum() * b
        nq = math.sqrt(float((w * q * q).sum()))
        if nq > cutoff:
            basis.append(q / nq)
            sqnorms.append(1.0)
    return basis, sqnorms
