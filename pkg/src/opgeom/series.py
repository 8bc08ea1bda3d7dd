"""Iterates L^k and the geometric series G_L = sum_k L^k on the weighted
space, with two independent computation paths:

* a truncated Neumann sum with a certified geometric tail bound, and
* a direct linear solve of (I - T) on the interior node block (exact
  carriers only, i.e. bernstein and durrmeyer).

The solve path is the oracle for the Neumann path where both exist; for
the series families only the Neumann path is available and its quality is
recorded through the inversion residual |(I-L)G(f) - f| in the weighted
norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateOperatorError, DomainError, NotInCpsiError
from .funcspace import EvaluationGrid, Function01, psi, psi_norm
from .operators import NodeDiscretization, OperatorSpec, node_discretization

__all__ = [
    "GeometricSeriesResult",
    "iterate_apply",
    "neumann_tail_terms",
    "geometric_series_neumann",
    "geometric_series_neumann_batch",
    "geometric_series_solve",
    "check_inversion_identities",
]

_ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class GeometricSeriesResult:
    """G_L(f) on the node carrier, evaluable anywhere through the
    fixed-point extension g = f + L(g-on-nodes)."""

    g: Function01
    method: str
    terms_used: Optional[int]
    tail_bound: float
    residual_psi_norm: float


def iterate_apply(op: OperatorSpec, k: int, f: Function01, x):
    """L^k(f)(x): identity for k = 0, otherwise one pointwise application
    of L to the representation advanced by k-1 transfer products."""
    if k < 0:
        raise DomainError("iterate order must be >= 0")
    if k == 0:
        return f(x)
    disc = node_discretization(op)
    v = disc.rep(f)
    for _ in range(k - 1):
        v = disc.advance(v)
    out = disc.apply_rep(v, x)
    return out if np.ndim(x) else float(out[0])


def neumann_tail_terms(b_norm: float, f_psi_norm: float, eps: float) -> int:
    """Smallest K with b^(K+1)/(1-b) * |f| <= eps."""
    if not 0.0 < b_norm < 1.0:
        raise DomainError("tail bound needs 0 < b_norm < 1")
    if f_psi_norm < 0.0 or eps <= 0.0:
        raise DomainError("need f_psi_norm >= 0 and eps > 0")
    if f_psi_norm == 0.0:
        return 0

    def bound(k):
        return b_norm ** (k + 1) / (1.0 - b_norm) * f_psi_norm

    guess = math.log(eps * (1.0 - b_norm) / f_psi_norm) / math.log(b_norm) - 1.0
    k = max(0, math.ceil(guess) - 2)
    while bound(k) > eps:
        k += 1
    while k > 0 and bound(k - 1) <= eps:
        k -= 1
    return k


def _gate_cpsi(f: Function01):
    if abs(float(f(0.0))) > _ENDPOINT_TOL or abs(float(f(1.0))) > _ENDPOINT_TOL:
        raise NotInCpsiError(
            "input has nonzero endpoint values; split off the affine part "
            "with project_to_Cpsi first")


def _require_lambda(op: OperatorSpec):
    if not op.in_lambda_class:
        raise DegenerateOperatorError(
            f"{op.family} (n={op.n}) has no certified contraction constant "
            "below one; the geometric series is not available")


def _series_function(f_eval, disc: NodeDiscretization, acc: np.ndarray) -> Function01:
    def ev(x, base=f_eval, d=disc, r=acc):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.asarray(base(xs), dtype=float) + d.apply_rep(r, xs)
        return out if np.ndim(x) else out[0]

    return Function01(ev, kind="derived", name="geometric-series")


def _residual_norm(disc: NodeDiscretization, acc: np.ndarray, rep0: np.ndarray,
                   grid: EvaluationGrid) -> float:
    # (I - L) g - f evaluated off-node: rows(x) @ (acc - rep0 - T acc).
    defect = acc - rep0 - disc.advance(acc)
    vals = disc.apply_rep(defect, grid.points)
    return float(np.max(np.abs(vals) / psi(grid.points)))


def _neumann_core(op: OperatorSpec, disc: NodeDiscretization, f_eval,
                  rep0: np.ndarray, f_norm: float, eps: float,
                  grid: EvaluationGrid) -> GeometricSeriesResult:
    b = op.contraction_bound()
    if f_norm == 0.0:
        zero = Function01(lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        return GeometricSeriesResult(g=zero, method="neumann", terms_used=0,
                                     tail_bound=0.0, residual_psi_norm=0.0)
    k_last = neumann_tail_terms(b, f_norm, eps)
    acc = rep0.copy()
    v = rep0
    for _ in range(1, k_last):
        v = disc.advance(v)
        acc += v
    if k_last == 0:
        acc = np.zeros_like(rep0)
    tail = b ** (k_last + 1) / (1.0 - b) * f_norm
    g = _series_function(f_eval, disc, acc)
    resid = _residual_norm(disc, acc, rep0, grid)
    return GeometricSeriesResult(g=g, method="neumann", terms_used=k_last + 1,
                                 tail_bound=tail, residual_psi_norm=resid)


def geometric_series_neumann(op: OperatorSpec, f: Function01, eps: float,
                             grid: Optional[EvaluationGrid] = None) -> GeometricSeriesResult:
    """Truncated Neumann sum sum_{k<=K} L^k(f) with K from the certified
    tail bound; requires f in the weighted space (endpoint values zero)."""
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    _require_lambda(op)
    _gate_cpsi(f)
    disc = node_discretization(op)
    fam_grid = op.grid(grid)
    f_norm = psi_norm(f, fam_grid).value
    return _neumann_core(op, disc, f, disc.rep(f), f_norm, eps, fam_grid)


def geometric_series_neumann_batch(op: OperatorSpec, fs: Sequence[Function01],
                                   eps: float,
                                   grid: Optional[EvaluationGrid] = None):
    """Neumann sums for several inputs sharing one transfer-matrix sweep.

    Matvec memory traffic dominates the cost for the series families, so
    batching the right-hand sides is nearly free compared with repeated
    single runs.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    _require_lambda(op)
    for f in fs:
        _gate_cpsi(f)
    disc = node_discretization(op)
    fam_grid = op.grid(grid)
    b = op.contraction_bound()
    reps = np.column_stack([disc.rep(f) for f in fs])
    norms = [psi_norm(f, fam_grid).value for f in fs]
    k_each = [neumann_tail_terms(b, v, eps) if v > 0.0 else 0 for v in norms]
    k_max = max(k_each, default=0)
    acc = reps.copy()
    v = reps
    for _ in range(1, k_max):
        v = disc.advance(v)
        acc += v
    out = []
    for i, f in enumerate(fs):
        if norms[i] == 0.0:
            zero = Function01(lambda x: np.zeros_like(np.asarray(x, dtype=float)))
            out.append(GeometricSeriesResult(zero, "neumann", 0, 0.0, 0.0))
            continue
        col = acc[:, i].copy()
        g = _series_function(f, disc, col)
        resid = _residual_norm(disc, col, reps[:, i], fam_grid)
        tail = b ** (k_max + 1) / (1.0 - b) * norms[i]
        out.append(GeometricSeriesResult(g, "neumann", k_max + 1, tail, resid))
    return out


def geometric_series_solve(op: OperatorSpec, f: Function01,
                           grid: Optional[EvaluationGrid] = None) -> GeometricSeriesResult:
    """Direct inversion of (I - T) on the interior node block.

    Only for the exact finite carriers (bernstein, durrmeyer): endpoint
    rows of T are identities, so they are dropped rather than zeroed, and
    the interior block of I - T is a strictly diagonally dominated
    M-matrix solved by dense LU.
    """
    if op.family not in ("bernstein", "durrmeyer"):
        raise DomainError("the solve path needs an exact finite carrier "
                          "(bernstein or durrmeyer)")
    _require_lambda(op)
    _gate_cpsi(f)
    disc = node_discretization(op)
    fam_grid = op.grid(grid)
    rep0 = disc.rep(f)
    idx = np.flatnonzero(disc.interior)
    t_int = disc.transfer[np.ix_(idx, idx)]
    try:
        sol = np.linalg.solve(np.eye(idx.size) - t_int, rep0[idx])
    except np.linalg.LinAlgError as exc:
        raise DegenerateOperatorError(
            "interior block of I - T is singular; the operator is outside "
            "the contraction class") from exc
    acc = np.zeros_like(rep0)
    acc[idx] = sol
    g = _series_function(f, disc, acc)
    resid = _residual_norm(disc, acc, rep0, fam_grid)
    return GeometricSeriesResult(g=g, method="solve", terms_used=None,
                                 tail_bound=0.0, residual_psi_norm=resid)


def check_inversion_identities(op: OperatorSpec, f: Function01, eps: float,
                               grid: Optional[EvaluationGrid] = None):
    """Weighted-norm residuals of the two inversion identities,
    ((I-L) o G_L - I)(f) and (G_L o (I-L) - I)(f)."""
    _require_lambda(op)
    _gate_cpsi(f)
    disc = node_discretization(op)
    fam_grid = op.grid(grid)
    res1 = geometric_series_neumann(op, f, eps, grid)

    # h = (I - L) f has the same representation algebra in every carrier:
    # rep(h) = rep(f) - T rep(f).
    rep0 = disc.rep(f)
    rep_h = rep0 - disc.advance(rep0)

    def h_eval(x, base=f, d=disc, r=rep0):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return np.asarray(base(xs), dtype=float) - d.apply_rep(r, xs)

    h_norm = float(np.max(np.abs(h_eval(fam_grid.points)) / psi(fam_grid.points)))
    res2 = _neumann_core(op, disc, h_eval, rep_h, h_norm, eps, fam_grid)
    diff = np.asarray(res2.g(fam_grid.points), dtype=float) - np.asarray(
        f(fam_grid.points), dtype=float)
    second = float(np.max(np.abs(diff) / psi(fam_grid.points)))
    return res1.residual_psi_norm, second
