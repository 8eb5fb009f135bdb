"""Discretization of the annealed transfer operator on a uniform partition.

The operator averages the single-map transfer operators with the system's
probabilities.  Each single-map matrix entry P[i][k] is the Lebesgue
fraction of cell i whose image lands in cell k, computed exactly per
monotone branch by inverting the target cell edges (bisection to machine
width, endpoints pinned to the branch domain endpoints so every row
telescopes to total mass 1).  A per-cell Gauss-Legendre quadrature fallback
covers branches whose inversion cannot meet tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from numba import njit

from rimlab.maps import MapDescriptor, Monotonicity
from rimlab.system import RandomSystem

__all__ = [
    "ConstructionError",
    "ResolutionMismatch",
    "Normalization",
    "UlamOperator",
    "DensityEstimate",
    "single_map_ulam",
    "build_ulam",
    "power_iterate",
    "push_lebesgue",
    "lq_norm",
    "cdf_distance",
    "interval_mass",
]

ROW_SUM_TOL = 1e-12
EDGE_INVERSION_TOL = 1e-10
DEFAULT_POWER_TOL = 1e-10
DEFAULT_POWER_MAX_ITER = 100_000


class ConstructionError(RuntimeError):
    """A constructed operator row failed stochasticity beyond tolerance."""


class ResolutionMismatch(ValueError):
    """Two density estimates live on different partitions."""


class Normalization(enum.Enum):
    PROBABILITY = "probability"
    UNNORMALIZED = "unnormalized"


@dataclass(frozen=True)
class UlamOperator:
    """Sparse row-stochastic discretization of the annealed operator."""

    n_cells: int
    matrix: sp.csr_matrix           # P[i, k], rows sum to 1
    p: tuple[float, ...]
    quadrature: str                 # "exact-inverse" or "exact-inverse+quad(<order>)"

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def to_triplets(self) -> str:
        """Sparse text export: one "row col weight" line per entry."""
        coo = self.matrix.tocoo()
        lines = [f"{i} {k} {float(v)!r}" for i, k, v in zip(coo.row, coo.col, coo.data)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DensityEstimate:
    """Piecewise-constant density on n_cells uniform cells of [0,1]."""

    values: np.ndarray
    n_cells: int
    normalization: Normalization
    residual: Optional[float] = None
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    residual_history: Optional[np.ndarray] = None

    def cell_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_cells + 1)

    def masses(self) -> np.ndarray:
        return self.values / self.n_cells

    def cdf(self) -> np.ndarray:
        """CDF at the cell boundaries (length n_cells + 1, starts at 0)."""
        return np.concatenate(([0.0], np.cumsum(self.masses())))

    def min_value(self) -> float:
        return float(self.values.min())


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

@njit(cache=True)
def _scatter_intervals(xs, ks, n, rows, cols, vals):
    """Distribute preimage intervals [xs[m], xs[m+1]] over source cells.

    xs is ascending; interval m maps to target cell ks[m].  Contributions
    are overlap/cellwidth, appended as triplets.  Returns the count used.
    """
    w = 1.0 / n
    t = 0
    for m in range(ks.size):
        xa = xs[m]
        xb = xs[m + 1]
        if xb <= xa:
            continue
        ia = int(xa * n)
        if ia >= n:
            ia = n - 1
        ib = int(xb * n)
        if ib >= n:
            ib = n - 1
        for i in range(ia, ib + 1):
            lo = i * w
            hi = lo + w
            a = xa if xa > lo else lo
            b = xb if xb < hi else hi
            if b > a:
                rows[t] = i
                cols[t] = ks[m]
                vals[t] = (b - a) * n
                t += 1
    return t


def _invert_edges(branch, ys: np.ndarray) -> np.ndarray:
    """Vectorized bisection of the branch at every target edge value."""
    a, b = branch.domain
    inc = branch.monotonicity is Monotonicity.INCREASING
    lo = np.full(ys.shape, a)
    hi = np.full(ys.shape, b)
    form = branch.form
    sign = 1.0 if inc else -1.0
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        v = _form_values(form, mid)
        below = sign * (v - ys) < 0.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    xs = 0.5 * (lo + hi)
    # pin range endpoints to exact domain endpoints for mass telescoping
    rlo, rhi = branch.range_
    xs[ys == rlo] = a if inc else b
    xs[ys == rhi] = b if inc else a
    return xs


def _form_values(form, x: np.ndarray) -> np.ndarray:
    from rimlab.maps import MoebiusForm, PowerForm

    if isinstance(form, PowerForm):
        u = (x - form.x0) / form.w
        return form.a + form.b * u ** form.k
    assert isinstance(form, MoebiusForm)
    return (form.p * x + form.q) / (form.r * x + form.s)


def _branch_triplets(branch, n: int):
    """Exact per-branch construction; returns (rows, cols, vals) or None."""
    rlo, rhi = branch.range_
    k0 = int(math.ceil(rlo * n))
    k1 = int(math.floor(rhi * n))
    ys = [rlo] + [k / n for k in range(k0, k1 + 1) if rlo < k / n < rhi] + [rhi]
    ys = np.array(ys)
    xs = _invert_edges(branch, ys)
    resid = np.abs(_form_values(branch.form, xs) - ys).max()
    if resid > EDGE_INVERSION_TOL:
        return None
    mids = 0.5 * (ys[:-1] + ys[1:])
    ks = np.minimum((mids * n).astype(np.int64), n - 1)
    if branch.monotonicity is Monotonicity.DECREASING:
        xs = xs[::-1].copy()
        ks = ks[::-1].copy()
    cap = xs.size + ks.size * 4 + int(np.ceil((branch.domain[1] - branch.domain[0]) * n)) + 8
    # worst case: every interval spans its own cells plus boundary overlaps
    cap = max(cap, int(2 * n + 4 * ks.size + 16))
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.float64)
    t = _scatter_intervals(xs, ks, n, rows, cols, vals)
    return rows[:t], cols[:t], vals[:t]


def _branch_quadrature(branch, n: int, order: int):
    """Gauss-Legendre fallback: sample each source cell, histogram the images."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * (nodes + 1.0)          # map to (0,1)
    weights = 0.5 * weights
    a, b = branch.domain
    rows, cols, vals = [], [], []
    w = 1.0 / n
    i0, i1 = int(a * n), min(int(math.ceil(b * n)), n)
    for i in range(i0, i1):
        lo, hi = max(i * w, a), min((i + 1) * w, b)
        if hi <= lo:
            continue
        xs = lo + (hi - lo) * nodes
        ts = _form_values(branch.form, xs)
        ks = np.minimum((ts * n).astype(np.int64), n - 1)
        frac = (hi - lo) * n
        for kk, ww in zip(ks, weights):
            rows.append(i)
            cols.append(int(kk))
            vals.append(float(ww) * frac)
    return (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
            np.array(vals, dtype=np.float64))


def single_map_ulam(m: MapDescriptor, n_cells: int,
                    quad_order: int = 64, force_quadrature: bool = False) -> tuple[sp.csr_matrix, bool]:
    """Row-stochastic matrix of one map; returns (matrix, used_quadrature)."""
    rows = np.empty(0, dtype=np.int64)
    cols = np.empty(0, dtype=np.int64)
    vals = np.empty(0, dtype=np.float64)
    used_quad = False
    for branch in m.branches:
        out = None if force_quadrature else _branch_triplets(branch, n_cells)
        if out is None:
            out = _branch_quadrature(branch, n_cells, quad_order)
            used_quad = True
        rows = np.concatenate([rows, out[0]])
        cols = np.concatenate([cols, out[1]])
        vals = np.concatenate([vals, out[2]])
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n_cells, n_cells)).tocsr()
    return mat, used_quad


def build_ulam(system: RandomSystem, n_cells: int, quad_order: int = 64) -> UlamOperator:
    """P = sum_j p_j P_j on n_cells uniform cells; rows sum to 1 +/- 1e-12."""
    if n_cells < 16:
        raise ValueError("n_cells must be >= 16")
    mat = None
    any_quad = False
    for j, m in enumerate(system.maps):
        pj, used = single_map_ulam(m, n_cells, quad_order)
        any_quad = any_quad or used
        term = system.p[j] * pj
        mat = term if mat is None else mat + term
    mat = mat.tocsr()
    sums = np.asarray(mat.sum(axis=1)).ravel()
    worst = np.abs(sums - 1.0).max()
    if worst > ROW_SUM_TOL:
        raise ConstructionError(
            f"row sums deviate from 1 by {worst:.3e} (> {ROW_SUM_TOL:g})")
    quad = f"exact-inverse+quad({quad_order})" if any_quad else "exact-inverse"
    return UlamOperator(n_cells, mat, tuple(system.p), quad)


# ---------------------------------------------------------------------------
# fixed vectors and pushforwards
# ---------------------------------------------------------------------------

def power_iterate(op: UlamOperator, tol: float = DEFAULT_POWER_TOL,
                  max_iter: int = DEFAULT_POWER_MAX_ITER,
                  start: Optional[np.ndarray] = None) -> DensityEstimate:
    """Left fixed probability vector by power iteration from the uniform mass.

    Residual is the L1 norm of v P - v on mass vectors.  Non-convergence
    within max_iter is flagged, not fatal; the last iterate is returned.
    """
    n = op.n_cells
    pt = op.matrix.T.tocsr()
    v = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    history = []
    residual = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        w = pt.dot(v)
        residual = float(np.abs(w - v).sum())
        v = w / w.sum()
        if it <= 64 or it % 64 == 0:
            history.append(residual)
        if residual <= tol:
            break
    return DensityEstimate(values=v * n, n_cells=n,
                           normalization=Normalization.PROBABILITY,
                           residual=residual, iterations=it,
                           converged=residual <= tol,
                           residual_history=np.array(history))


def push_lebesgue(op: UlamOperator, n: int) -> DensityEstimate:
    """n-fold pushforward of the uniform density; stochasticity keeps mass 1."""
    if n < 0:
        raise ValueError("n must be >= 0")
    pt = op.matrix.T.tocsr()
    v = np.full(op.n_cells, 1.0 / op.n_cells)
    for _ in range(n):
        v = pt.dot(v)
    return DensityEstimate(values=v * op.n_cells, n_cells=op.n_cells,
                           normalization=Normalization.PROBABILITY)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def lq_norm(d: DensityEstimate, q: float) -> float:
    """(sum values^q * cellwidth)^(1/q) for q >= 1."""
    if q < 1.0:
        raise ValueError("q must be >= 1")
    return float((np.sum(d.values ** q) / d.n_cells) ** (1.0 / q))


def cdf_distance(d1: DensityEstimate, d2: DensityEstimate) -> float:
    """Kolmogorov distance: sup over cell boundaries of |CDF1 - CDF2|."""
    if d1.n_cells != d2.n_cells:
        raise ResolutionMismatch(f"{d1.n_cells} cells vs {d2.n_cells} cells")
    return float(np.abs(d1.cdf() - d2.cdf()).max())


def interval_mass(d: DensityEstimate, lo: float, hi: float) -> float:
    """Mass of [lo, hi] under the piecewise-constant density (overlap weighted)."""
    if hi < lo:
        raise ValueError("empty interval")
    edges = d.cell_edges()
    a = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
    return float(np.sum(a * d.values))
