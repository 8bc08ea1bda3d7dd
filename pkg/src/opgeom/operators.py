"""The three operator families behind one interface: pointwise application,
finite node discretization with a transfer matrix, central moments, and the
contraction profile alpha = 1 - L(psi)/psi.

Family carriers
---------------
bernstein      node values at k/n; the transfer matrix is the basis matrix
               evaluated at the nodes (exact).
durrmeyer      coefficients in the Bernstein basis: the image of f is
               sum_k c_k(f) p_{n,k} with c_k the Beta-density functionals,
               so one application advances the coefficient vector by the
               matrix c_i(p_{n,j}) (exact; entries in closed Beta form).
mkz families   node values at k/(n+k) (and the reflected set n/(n+k));
               the infinite series is truncated at a depth sized from the
               a-priori geometric tail bound, and each row's omitted mass
               is routed to the endpoint node, whose value a weighted-space
               input pins to zero.

OperatorSpec and NodeDiscretization are immutable after construction; all
apply/moment operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import roots_jacobi

from .errors import (DegenerateOperatorError, DomainError, QuadratureError,
                     TruncationBudgetError)
from .funcspace import (EvaluationGrid, Function01, default_grid, psi)
from .special import (bernstein_basis_matrix, log_beta, log_binomial,
                      mkz_weight_matrix, mkz_weight_row)

__all__ = [
    "FAMILIES",
    "LAMBDA_FAMILIES",
    "OperatorSpec",
    "AlphaProfile",
    "NodeDiscretization",
    "bernstein_apply",
    "durrmeyer_functional",
    "durrmeyer_apply",
    "mkz_apply",
    "mkz_reflected_apply",
    "mkz_symmetric_apply",
    "mkz_truncation_index",
    "moment",
    "alpha_profile",
    "node_discretization",
    "condition_report",
]

FAMILIES = ("bernstein", "durrmeyer", "mkz", "mkz-reflected", "mkz-symmetric")
# Families with a certified contraction constant below one, i.e. admissible
# for the geometric series.  The plain and reflected series operators lose
# the contraction at one endpoint (their second moment over psi vanishes
# there), so only the symmetrized version qualifies.
LAMBDA_FAMILIES = ("bernstein", "durrmeyer", "mkz-symmetric")

_SERIES_CAP = 500_000


@dataclass(frozen=True)
class OperatorSpec:
    """One operator family member: family tag, order, and parameters."""

    family: str
    n: int
    rho: Optional[float] = None
    truncation_eps: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 1:
            raise DomainError("operator order must be >= 1")
        if self.family == "durrmeyer":
            if self.n < 2:
                raise DomainError("durrmeyer requires n >= 2")
            if self.rho is None or self.rho <= 0.0:
                raise DomainError("durrmeyer requires rho > 0")
        if self.family == "mkz-symmetric" and self.n < 3:
            raise DomainError("mkz-symmetric requires n >= 3")
        if self.family.startswith("mkz"):
            if self.truncation_eps is None or self.truncation_eps <= 0.0:
                raise DomainError(f"{self.family} requires truncation_eps > 0")

    # -- admissibility -----------------------------------------------------

    @property
    def in_lambda_class(self) -> bool:
        if self.family == "bernstein":
            return self.n >= 2  # n = 1 is the endpoint interpolation itself
        return self.family in ("durrmeyer", "mkz-symmetric")

    def contraction_bound(self) -> float:
        """Certified upper bound on the weighted operator norm |L(psi)|_psi."""
        if self.family == "bernstein":
            return 1.0 - 1.0 / self.n
        if self.family == "durrmeyer":
            return 1.0 - (self.rho + 1.0) / (self.n * self.rho + 1.0)
        if self.family == "mkz-symmetric":
            return 1.0 - 0.5 / (self.n + 1.0)
        return 1.0  # plain/reflected series operators: sup over (0,1) is 1

    # -- geometry ----------------------------------------------------------

    def grid(self, base: Optional[EvaluationGrid] = None) -> EvaluationGrid:
        """The evaluation grid restricted to the family's tractable range.

        The series truncation depth grows like 1/(1-x) (like 1/x for the
        reflected branch), so the grid is capped a distance 1/(4n) from
        the hard endpoint(s); the cap tightens toward the endpoint as n
        grows.
        """
        base = base or default_grid()
        cap = 1.0 / (4.0 * self.n)
        if self.family == "mkz":
            return base.restricted(0.0, 1.0 - cap)
        if self.family == "mkz-reflected":
            return base.restricted(cap, 1.0)
        if self.family == "mkz-symmetric":
            return base.restricted(cap, 1.0 - cap)
        return base

    # -- application -------------------------------------------------------

    def apply(self, f: Function01, x):
        if self.family == "bernstein":
            return bernstein_apply(self.n, f, x)
        if self.family == "durrmeyer":
            return durrmeyer_apply(self.n, self.rho, f, x)
        if self.family == "mkz":
            return mkz_apply(self.n, f, x, self.truncation_eps)
        if self.family == "mkz-reflected":
            return mkz_reflected_apply(self.n, f, x, self.truncation_eps)
        return mkz_symmetric_apply(self.n, f, x, self.truncation_eps)

    def moment(self, k: int, x):
        return moment(self, k, x)


# ---------------------------------------------------------------------------
# Bernstein
# ---------------------------------------------------------------------------

def bernstein_apply(n: int, f: Function01, x):
    """sum_k f(k/n) p_{n,k}(x); reproduces affine functions exactly."""
    if n < 1:
        raise DomainError("bernstein requires n >= 1")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.asarray(f(np.arange(n + 1) / n), dtype=float)
    out = bernstein_basis_matrix(n, xs) @ vals
    return out if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# Durrmeyer type
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _durrmeyer_monomial_moments(n: int, rho: float, jmax: int):
    """m[k-1, j] = integral of t^j against the Beta(k rho, (n-k) rho)
    density, for k = 1..n-1; the running-product form is exact."""
    a = np.arange(1, n) * rho
    b = (n - np.arange(1, n)) * rho
    out = np.empty((n - 1, jmax + 1))
    out[:, 0] = 1.0
    for j in range(1, jmax + 1):
        out[:, j] = out[:, j - 1] * (a + j - 1.0) / (a + b + j - 1.0)
    return out


def durrmeyer_functional(n: int, k: int, rho: float, f: Function01,
                         method: str = "auto") -> float:
    """Integral of f against the Beta(k rho, (n-k) rho) density.

    Polynomial inputs go through exact monomial moments; everything else
    uses Gauss-Jacobi quadrature whose weight absorbs the endpoint
    singularities that appear when k rho < 1 or (n-k) rho < 1.
    """
    if not 1 <= k <= n - 1:
        raise DomainError(f"functional index k={k} outside [1, {n - 1}]")
    if rho <= 0.0:
        raise DomainError("rho must be positive")
    if method not in ("auto", "closed-form", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    if method != "quadrature" and f.poly_coeffs is not None:
        coeffs = np.asarray(f.poly_coeffs)
        moments = _durrmeyer_monomial_moments(n, rho, len(coeffs) - 1)[k - 1]
        return float(coeffs @ moments[: len(coeffs)])
    if method == "closed-form":
        raise DomainError("closed form needs a polynomial input")
    a = k * rho
    b = (n - k) * rho
    log_norm = (1.0 - a - b) * math.log(2.0) - log_beta(a, b)
    prev = None
    delta = math.inf
    for m in (24, 48, 96, 192):
        ynodes, yweights = roots_jacobi(m, b - 1.0, a - 1.0)
        t = 0.5 * (ynodes + 1.0)
        val = float(yweights @ np.asarray(f(t), dtype=float)) * math.exp(log_norm)
        if prev is not None:
            delta = abs(val - prev)
            if delta <= 1e-13 * max(1.0, abs(val)):
                return val
        prev = val
    # Global polynomial quadrature converges only algebraically for kinked
    # or endpoint-oscillatory f; fall back to endpoint-graded composite
    # panels when the weight itself is bounded.
    if a >= 1.0 and b >= 1.0:
        return _beta_integral_composite(a, b, f)
    if delta <= 1e-4 * max(1.0, abs(val)):
        return val
    raise QuadratureError(f"Gauss-Jacobi did not settle for k={k}, rho={rho}")


_BETA_GL_NODES, _BETA_GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _beta_integral_composite(a: float, b: float, f: Function01) -> float:
    """Integral of f against the Beta(a, b) density via composite panels
    graded geometrically toward both endpoints; needs a, b >= 1 so the
    density is bounded."""
    log_norm = -float(log_beta(a, b))
    edges = np.concatenate((
        [0.0], np.logspace(-15, -1.01, 48), np.linspace(0.1, 0.5, 14)[1:]))
    edges = np.concatenate((edges, (1.0 - edges)[::-1]))

    def density(t):
        lg = np.full(t.shape, log_norm)
        if a != 1.0:
            lg += (a - 1.0) * np.log(t)
        if b != 1.0:
            with np.errstate(divide="ignore"):
                # rounding can land a node exactly on 1; exp(-inf) -> 0
                lg += (b - 1.0) * np.log1p(-t)
        return np.exp(lg)

    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        prev = None
        panels = 1
        while True:
            sub = np.linspace(lo, hi, panels + 1)
            mid = 0.5 * (sub[:-1] + sub[1:])[:, None]
            half = 0.5 * (sub[1:] - sub[:-1])[:, None]
            t = (mid + half * _BETA_GL_NODES).ravel()
            w = (half * _BETA_GL_WEIGHTS).ravel()
            ft = np.asarray(f(t), dtype=float)
            dens = density(t)
            val = float(np.dot(w, ft * dens))
            if prev is not None:
                d = abs(val - prev)
                if d <= 1e-14 * max(abs(val), 1e-3) or panels >= 256:
                    mass = float(np.dot(w, dens))
                    err += min(d, mass * float(np.max(np.abs(ft))) if ft.size else 0.0)
                    break
            prev = val
            panels *= 2
        total += val
    if err > 1e-6 * max(1.0, abs(total)):
        raise QuadratureError(
            f"composite Beta quadrature residual {err:.2e} too large")
    return total


def durrmeyer_apply(n: int, rho: float, f: Function01, x):
    """Durrmeyer-type image: interior Beta functionals recombined with the
    Bernstein basis plus exact endpoint terms."""
    if n < 2:
        raise DomainError("durrmeyer requires n >= 2")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    coeffs = np.empty(n + 1)
    coeffs[0] = float(f(0.0))
    coeffs[n] = float(f(1.0))
    for k in range(1, n):
        coeffs[k] = durrmeyer_functional(n, k, rho, f)
    out = bernstein_basis_matrix(n, xs) @ coeffs
    return out if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# Meyer-Koenig and Zeller (Cheney-Sharma form) and its symmetrization
# ---------------------------------------------------------------------------

def mkz_truncation_index(n: int, x: float, tail: float,
                         cap: int = _SERIES_CAP) -> int:
    """Smallest series depth with certified weight tail <= tail.

    Beyond k0 the term ratio x(n+k+1)/(k+1) is below x' = (1+x)/2, so the
    tail after K is bounded by w_{k0} x'^(K+1-k0) / (1-x'); solving that
    for K needs no evaluations of the summand's function factor.
    """
    if not 0.0 <= x < 1.0:
        raise DomainError("truncation index needs 0 <= x < 1")
    if tail <= 0.0:
        raise DomainError("tail target must be positive")
    if x == 0.0:
        return 0
    xp = 0.5 * (1.0 + x)
    k0 = max(0, math.ceil((x * (n + 1.0) - xp) / (xp - x)))
    log_w_k0 = (log_binomial(n + k0, k0) + (n + 1.0) * math.log1p(-x)
                + k0 * math.log(x))
    log_target = math.log(tail) + math.log1p(-xp) - math.log(xp)
    if log_w_k0 <= log_target:
        k = k0
    else:
        k = k0 + math.ceil((log_target - log_w_k0) / math.log(xp))
    if k > cap:
        raise TruncationBudgetError(
            f"series depth {k} exceeds cap {cap} (x={x} too close to 1)")
    return k


def _mkz_series(n: int, f: Function01, x: float, tail: float) -> float:
    k = mkz_truncation_index(n, x, tail)
    w = mkz_weight_row(n, x, k)
    nodes = np.arange(k + 1) / (n + np.arange(k + 1))
    return float(w @ np.asarray(f(nodes), dtype=float))


def mkz_apply(n: int, f: Function01, x, eps: float):
    """Series operator value with certified tail <= eps * sup|f|."""
    if n < 1:
        raise DomainError("mkz requires n >= 1")
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if np.ndim(x):
        return np.array([mkz_apply(n, f, float(v), eps) for v in np.asarray(x)])
    x = float(x)
    if x == 1.0:
        return float(f(1.0))
    return _mkz_series(n, f, x, eps)


def mkz_reflected_apply(n: int, f: Function01, x, eps: float):
    """The reflected operator: the plain series applied to f(1-t) at 1-x."""
    if np.ndim(x):
        return np.array([mkz_reflected_apply(n, f, float(v), eps)
                         for v in np.asarray(x)])
    return mkz_apply(n, f.reflected(), 1.0 - float(x), eps)


def mkz_symmetric_apply(n: int, f: Function01, x, eps: float):
    """Average of the plain and reflected operators; each half is truncated
    to eps/2."""
    if np.ndim(x):
        return np.array([mkz_symmetric_apply(n, f, float(v), eps)
                         for v in np.asarray(x)])
    x = float(x)
    half = 0.5 * eps
    if x == 1.0:
        plain = float(f(1.0))
    else:
        plain = _mkz_series(n, f, x, half)
    if x == 0.0:
        refl = float(f(0.0))  # reflected branch hits its exact-value case
    else:
        refl = _mkz_series(n, f.reflected(), 1.0 - x, half)
    return 0.5 * (plain + refl)


def _mkz_central_moment(n: int, kpow: int, x: float, tail: float) -> float:
    """Central moment of the plain series operator at x."""
    if x == 1.0:
        return 1.0 if kpow == 0 else 0.0
    k = mkz_truncation_index(n, x, tail)
    w = mkz_weight_row(n, x, k)
    nodes = np.arange(k + 1) / (n + np.arange(k + 1))
    return float(w @ (nodes - x) ** kpow)


def _mkz_weight_grid(n: int, xs: np.ndarray, tail: float):
    """Stacked weight rows for many points, sized by the deepest point.

    Returns (W, nodes); each row's omitted tail is below `tail` by the
    a-priori bound, and the realized row-sum deficit gives the exact
    omitted mass.
    """
    xs = np.asarray(xs, dtype=float)
    kmax = max(mkz_truncation_index(n, float(v), tail) for v in xs)
    w = mkz_weight_matrix(n, xs, kmax)
    nodes = np.arange(kmax + 1) / (n + np.arange(kmax + 1))
    return w, nodes


# ---------------------------------------------------------------------------
# Moments and the contraction profile
# ---------------------------------------------------------------------------

def _shifted_power_coeffs(kpow: int, x: float) -> np.ndarray:
    """(t - x)^kpow expanded in powers of t."""
    out = np.array([math.comb(kpow, j) * (-x) ** (kpow - j)
                    for j in range(kpow + 1)])
    return out


def moment(op: OperatorSpec, k: int, x):
    """Central moment L((e1 - x e0)^k)(x)."""
    if k < 0:
        raise DomainError("moment order must be >= 0")
    if np.ndim(x):
        return np.array([moment(op, k, float(v)) for v in np.asarray(x)])
    x = float(x)
    n = op.n
    if op.family == "bernstein":
        nodes = np.arange(n + 1) / n
        row = bernstein_basis_matrix(n, np.array([x]))[0]
        return float(row @ (nodes - x) ** k)
    if op.family == "durrmeyer":
        coeffs = _shifted_power_coeffs(k, x)
        mono = _durrmeyer_monomial_moments(n, op.rho, k)
        interior = mono @ coeffs  # functional values of (t-x)^k, k = 1..n-1
        full = np.concatenate(([(0.0 - x) ** k], interior, [(1.0 - x) ** k]))
        row = bernstein_basis_matrix(n, np.array([x]))[0]
        return float(row @ full)
    tail = op.truncation_eps
    if op.family == "mkz":
        return _mkz_central_moment(n, k, x, tail)
    if op.family == "mkz-reflected":
        return (-1.0) ** k * _mkz_central_moment(n, k, 1.0 - x, tail)
    plain = _mkz_central_moment(n, k, x, 0.5 * tail)
    refl = _mkz_central_moment(n, k, 1.0 - x, 0.5 * tail)
    return 0.5 * (plain + (-1.0) ** k * refl)


@dataclass(frozen=True)
class AlphaProfile:
    """Grid statistics of alpha = 1 - L(psi)/psi = M^2/psi.

    nu and eta stand in for the min/sup over [0,1]; for all supported
    families alpha extends continuously to the endpoints, so the grid
    statistics converge to the true values under refinement.  b_norm is
    reported as 1 - nu on the same grid so the two cannot disagree.
    """

    alpha_values: np.ndarray
    grid: EvaluationGrid
    nu: float
    eta: float
    b_norm: float

    def alpha(self, x):
        """Piecewise-linear read-back of the profile at interior points."""
        return np.interp(np.asarray(x, dtype=float), self.grid.points,
                         self.alpha_values)


def alpha_profile(op: OperatorSpec, grid: Optional[EvaluationGrid] = None) -> AlphaProfile:
    """Contraction profile on the family-capped grid."""
    grid = op.grid(grid)
    xs = grid.points
    n = op.n
    if op.family == "bernstein":
        alpha = np.full(xs.size, 1.0 / n)
    elif op.family == "durrmeyer":
        alpha = np.full(xs.size, (op.rho + 1.0) / (n * op.rho + 1.0))
    else:
        tail_scale = 0.1 * op.truncation_eps
        m2 = _m2_vec(n, xs, tail_scale)
        if op.family == "mkz":
            alpha = m2 / psi(xs)
        elif op.family == "mkz-reflected":
            alpha = _m2_vec(n, 1.0 - xs, tail_scale) / psi(xs)
        else:
            alpha = 0.5 * (m2 + _m2_vec(n, 1.0 - xs, tail_scale)) / psi(xs)
    nu = float(alpha.min())
    if nu <= 0.0:
        raise DegenerateOperatorError(
            "alpha has nonpositive grid minimum; operator is outside the "
            "contraction class")
    eta = float((alpha.max() - alpha.min()) / nu)
    return AlphaProfile(alpha_values=alpha, grid=grid, nu=nu, eta=eta,
                        b_norm=1.0 - nu)


def _m2_vec(n: int, xs: np.ndarray, tail: float) -> np.ndarray:
    """Plain-series second central moments at many points (vectorized)."""
    w, nodes = _mkz_weight_grid(n, xs, tail)
    d = nodes[None, :] - xs[:, None]
    return np.einsum("ij,ij->i", w, d * d)


# ---------------------------------------------------------------------------
# Node discretization
# ---------------------------------------------------------------------------

class NodeDiscretization:
    """Finite carrier of one operator: nodes, a square transfer matrix that
    advances the family's representation vector by one application, and a
    certified truncation bound.

    rep(f) is the representation of L(f): node samples of f for bernstein
    and the series families (their images are determined by those values),
    Beta-functional coefficients for durrmeyer.  For every family

        L^m(f)(x) = basis_matrix(x) @ (transfer^(m-1) @ rep(f)),  m >= 1.

    truncation_error_bound certifies rows at points within the family cap;
    rows at deeper nodes carry larger omitted mass, which the endpoint
    routing converts into an error of order psi(node) for weighted-space
    inputs.
    """

    def __init__(self, spec: OperatorSpec, nodes: np.ndarray,
                 transfer: Optional[np.ndarray], truncation_error_bound: float,
                 row_builder, rep_builder, parity=None):
        self.spec = spec
        self.nodes = nodes
        self._transfer = transfer
        self.truncation_error_bound = float(truncation_error_bound)
        self._row_builder = row_builder
        self._rep_builder = rep_builder
        self.interior = (nodes > 0.0) & (nodes < 1.0)
        # Reflection-equivariant families store the transfer in two
        # half-size parity blocks, halving matvec memory traffic.
        self._parity = parity

    @property
    def transfer(self) -> np.ndarray:
        if self._transfer is None:
            # unfold the parity blocks; columns of T are advances of the
            # unit vectors (used by tests and the small exact carriers)
            self._transfer = self.advance(np.eye(self.nodes.size))
        return self._transfer

    def advance(self, v: np.ndarray) -> np.ndarray:
        """One transfer-matrix application; v may have several columns."""
        if self._parity is None:
            return self._transfer @ v
        low, perm, t_even, t_odd = self._parity
        vl = v[low]
        vp = v[perm]
        even = 0.5 * (vl + vp)
        odd = 0.5 * (vl - vp)
        even2 = t_even @ even
        odd2 = t_odd @ odd
        out = np.empty_like(v)
        out[low] = even2 + odd2
        out[perm] = even2 - odd2
        return out

    def rep(self, f: Function01) -> np.ndarray:
        return self._rep_builder(f)

    def basis_matrix(self, xs) -> np.ndarray:
        """Rows of basis weights at arbitrary points (one row per point)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return self._row_builder(xs)

    def apply_rep(self, rep: np.ndarray, xs) -> np.ndarray:
        return self.basis_matrix(xs) @ rep


def _bernstein_disc(spec: OperatorSpec) -> NodeDiscretization:
    n = spec.n
    nodes = np.arange(n + 1) / n

    def rows(xs):
        return bernstein_basis_matrix(n, xs)

    def rep(f):
        return np.asarray(f(nodes), dtype=float)

    transfer = rows(nodes)
    return NodeDiscretization(spec, nodes, transfer, 0.0, rows, rep)


def _durrmeyer_disc(spec: OperatorSpec) -> NodeDiscretization:
    n, rho = spec.n, spec.rho
    nodes = np.arange(n + 1) / n
    j = np.arange(n + 1)
    log_comb = np.array([log_binomial(n, int(v)) for v in j])
    transfer = np.zeros((n + 1, n + 1))
    transfer[0, 0] = 1.0
    transfer[n, n] = 1.0
    for i in range(1, n):
        a = i * rho
        b = (n - i) * rho
        # F_{n,i}(p_{n,j}) = C(n,j) B(a + j, b + n - j) / B(a, b)
        transfer[i] = np.exp(log_comb + log_beta(a + j, b + n - j) - log_beta(a, b))

    def rows(xs):
        return bernstein_basis_matrix(n, xs)

    def rep(f):
        out = np.empty(n + 1)
        out[0] = float(f(0.0))
        out[n] = float(f(1.0))
        for k in range(1, n):
            out[k] = durrmeyer_functional(n, k, rho, f)
        return out

    return NodeDiscretization(spec, nodes, transfer, 0.0, rows, rep)


def _mkz_node_depth(spec: OperatorSpec) -> int:
    """Series depth retained in the carrier.

    Sized so rows at the evaluation cap keep their omitted mass a factor
    (1 - b)/4 below eps * psi(cap): the Neumann sum replays row errors
    about 1/(1-b) times.
    """
    n = spec.n
    eps = spec.truncation_eps
    x_cap = 1.0 - 1.0 / (4.0 * n)
    one_minus_b = 1.0 - spec.contraction_bound()
    if one_minus_b <= 0.0:
        one_minus_b = 0.5 / (n + 1.0)  # plain/reflected: sizing heuristic only
    tau_row = 0.25 * eps * psi(x_cap) * one_minus_b
    return mkz_truncation_index(n, x_cap, tau_row)


def _mkz_disc(spec: OperatorSpec) -> NodeDiscretization:
    n = spec.n
    depth = _mkz_node_depth(spec)
    k = np.arange(depth + 1)
    p_nodes = k / (n + k)
    nodes = np.concatenate((p_nodes, [1.0]))

    def rows(xs):
        xs = np.asarray(xs, dtype=float)
        at_one = xs == 1.0
        safe = np.where(at_one, 0.0, xs)
        w = mkz_weight_matrix(n, safe, depth)
        out = np.zeros((xs.size, depth + 2))
        out[:, :-1] = w
        # Route each row's omitted mass to the endpoint node: the skipped
        # terms sample f within (node_depth, 1), and weighted-space inputs
        # vanish there like psi.
        out[:, -1] = np.maximum(0.0, 1.0 - w.sum(axis=1))
        if np.any(at_one):
            out[at_one] = 0.0
            out[at_one, -1] = 1.0
        return out

    def rep(f):
        vals = np.empty(depth + 2)
        vals[:-1] = np.asarray(f(p_nodes), dtype=float)
        vals[-1] = float(f(1.0))
        return vals

    transfer = rows(nodes)
    x_cap = 1.0 - 1.0 / (4.0 * n)
    certified = nodes <= x_cap
    bound = float(np.max(transfer[certified, -1])) if np.any(certified) else 1.0
    return NodeDiscretization(spec, nodes, transfer, bound, rows, rep)


def _mkz_reflected_disc(spec: OperatorSpec) -> NodeDiscretization:
    n = spec.n
    depth = _mkz_node_depth(spec)
    k = np.arange(depth + 1)
    r_nodes = n / (n + k)  # decreasing toward 0
    nodes = np.concatenate(([0.0], r_nodes[::-1]))

    def rows(xs):
        xs = np.asarray(xs, dtype=float)
        at_zero = xs == 0.0
        safe = np.where(at_zero, 0.0, 1.0 - xs)
        w = mkz_weight_matrix(n, safe, depth)
        out = np.zeros((xs.size, depth + 2))
        out[:, 1:] = w[:, ::-1]
        out[:, 0] = np.maximum(0.0, 1.0 - w.sum(axis=1))
        if np.any(at_zero):
            out[at_zero] = 0.0
            out[at_zero, 0] = 1.0
        return out

    def rep(f):
        vals = np.empty(depth + 2)
        vals[0] = float(f(0.0))
        vals[1:] = np.asarray(f(r_nodes[::-1]), dtype=float)
        return vals

    transfer = rows(nodes)
    x_cap = 1.0 / (4.0 * n)
    certified = nodes >= x_cap
    bound = float(np.max(transfer[certified, 0])) if np.any(certified) else 1.0
    return NodeDiscretization(spec, nodes, transfer, bound, rows, rep)


def _mkz_symmetric_disc(spec: OperatorSpec) -> NodeDiscretization:
    n = spec.n
    depth = _mkz_node_depth(spec)
    k = np.arange(depth + 1)
    p_nodes = k / (n + k)
    r_nodes = n / (n + k)
    # Collisions p_j = r_m happen exactly when j*m = n^2; both quotients
    # round to the same float, so value-level merging is exact.
    nodes, inv = np.unique(np.concatenate((p_nodes, r_nodes)), return_inverse=True)
    p_cols = inv[: depth + 1]
    r_cols = inv[depth + 1:]
    col_one = int(np.searchsorted(nodes, 1.0))
    col_zero = 0

    def rows_routed(xs, out=None):
        xs = np.asarray(xs, dtype=float)
        if out is None:
            out = np.zeros((xs.size, nodes.size))
        at_one = xs == 1.0
        at_zero = xs == 0.0
        w_plain = 0.5 * mkz_weight_matrix(n, np.where(at_one, 0.0, xs), depth)
        w_plain[at_one] = 0.0
        w_refl = 0.5 * mkz_weight_matrix(n, np.where(at_zero, 0.0, 1.0 - xs), depth)
        w_refl[at_zero] = 0.0
        # p_cols and r_cols are each duplicate-free, so fancy += accumulates
        # the collision columns correctly across the two scatters.
        out[:, p_cols] += w_plain
        out[:, r_cols] += w_refl
        routed_p = np.where(at_one, 0.5, np.maximum(0.0, 0.5 - w_plain.sum(axis=1)))
        routed_r = np.where(at_zero, 0.5, np.maximum(0.0, 0.5 - w_refl.sum(axis=1)))
        out[:, col_one] += routed_p
        out[:, col_zero] += routed_r
        return out, routed_p + routed_r

    def rows(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.zeros((xs.size, nodes.size))
        for lo in range(0, xs.size, 512):
            sl = slice(lo, min(lo + 512, xs.size))
            rows_routed(xs[sl], out[sl])
        return out

    def rep(f):
        return np.asarray(f(nodes), dtype=float)

    # Reflection pairing is exact at the (branch, k) level: the partner of
    # p_k is r_k, merges included.
    perm_full = np.empty(nodes.size, dtype=np.intp)
    perm_full[p_cols] = r_cols
    perm_full[r_cols] = p_cols
    low = np.flatnonzero(np.arange(nodes.size) <= perm_full)
    perm_low = perm_full[low]
    m = low.size
    t_even = np.empty((m, m))
    t_odd = np.empty((m, m))
    routed = np.empty(m)
    scratch = np.zeros((min(512, m), nodes.size))
    for lo in range(0, m, 512):
        sl = slice(lo, min(lo + 512, m))
        block = scratch[: sl.stop - sl.start]
        block[:] = 0.0
        _, routed[sl] = rows_routed(nodes[low[sl]], block)
        same = low == perm_low  # the self-paired midpoint column
        t_even[sl] = block[:, low] + np.where(same, 0.0, 1.0) * block[:, perm_low]
        t_odd[sl] = block[:, low] - block[:, perm_low]
    cap = 1.0 / (4.0 * n)
    certified = (nodes[low] >= cap) & (nodes[low] <= 1.0 - cap)
    bound = float(np.max(routed[certified])) if np.any(certified) else 1.0
    return NodeDiscretization(spec, nodes, None, bound, rows, rep,
                              parity=(low, perm_low, t_even, t_odd))


_DISC_CACHE: dict = {}


def node_discretization(op: OperatorSpec) -> NodeDiscretization:
    """Build (or fetch) the finite carrier for one operator instance."""
    got = _DISC_CACHE.get(op)
    if got is None:
        if op.family == "bernstein":
            got = _bernstein_disc(op)
        elif op.family == "durrmeyer":
            got = _durrmeyer_disc(op)
        elif op.family == "mkz":
            got = _mkz_disc(op)
        elif op.family == "mkz-reflected":
            got = _mkz_reflected_disc(op)
        else:
            got = _mkz_symmetric_disc(op)
        if len(_DISC_CACHE) > 12:
            _DISC_CACHE.clear()  # the mkz carriers are large; keep few
        _DISC_CACHE[op] = got
    return got


# ---------------------------------------------------------------------------
# Little-o condition report
# ---------------------------------------------------------------------------

def condition_report(family: str, n_list, grid: Optional[EvaluationGrid] = None,
                     rho: Optional[float] = None,
                     truncation_eps: Optional[float] = None):
    """Per-n grid suprema of M^4/M^2, the alpha-oscillation ratio eta, and
    the mixed bound L(psi |alpha - alpha(x)|)(x) / (nu^2 psi(x)).

    Returns a list of dict rows, one per n, each column shrinking toward 0
    along n for the supported families.
    """
    rows = []
    for n in n_list:
        spec = OperatorSpec(family=family, n=n, rho=rho,
                            truncation_eps=truncation_eps)
        fam_grid = spec.grid(grid)
        xs = fam_grid.points
        prof = alpha_profile(spec, grid)
        m2 = np.array([moment(spec, 2, float(v)) for v in xs])
        m4 = np.array([moment(spec, 4, float(v)) for v in xs])
        sup_ratio = float(np.max(m4 / m2))
        if family in ("bernstein", "durrmeyer"):
            cond55 = 0.0  # alpha is constant: the integrand vanishes
        else:
            cond55 = _cond55_sup(spec, prof, xs)
        rows.append({"n": n, "sup_m4_over_m2": sup_ratio,
                     "eta": prof.eta, "cond55": cond55})
    return rows


def _cond55_sup(spec: OperatorSpec, prof: AlphaProfile, xs: np.ndarray) -> float:
    """sup over the grid of L(psi |alpha - alpha(x)|)(x) / (nu^2 psi(x))."""
    n = spec.n
    tail = 0.1 * spec.truncation_eps
    memo = {}

    def alpha_at(points: np.ndarray) -> np.ndarray:
        out = np.empty(points.size)
        for i, t in enumerate(points):
            val = memo.get(t)
            if val is None:
                if t == 0.0 or t == 1.0:
                    # alpha extends continuously; endpoint nodes carry no
                    # psi weight in the integrand anyway
                    val = float(prof.alpha_values[0 if t == 0.0 else -1])
                elif spec.family == "mkz":
                    val = _mkz_central_moment(n, 2, t, tail) / psi(t)
                elif spec.family == "mkz-reflected":
                    val = _mkz_central_moment(n, 2, 1.0 - t, tail) / psi(t)
                else:
                    val = 0.5 * (_mkz_central_moment(n, 2, t, tail)
                                 + _mkz_central_moment(n, 2, 1.0 - t, tail)) / psi(t)
                memo[t] = val
            out[i] = val
        return out

    a_x = prof.alpha(xs)
    acc = np.zeros(xs.size)
    use_plain = spec.family in ("mkz", "mkz-symmetric")
    use_refl = spec.family in ("mkz-reflected", "mkz-symmetric")
    share = 0.5 if spec.family == "mkz-symmetric" else 1.0
    if use_plain:
        w, nodes = _mkz_weight_grid(n, xs, tail)
        integ = psi(nodes)[None, :] * np.abs(alpha_at(nodes)[None, :] - a_x[:, None])
        acc += share * np.einsum("ij,ij->i", w, integ)
    if use_refl:
        w, nodes_raw = _mkz_weight_grid(n, 1.0 - xs, tail)
        nodes_r = 1.0 - nodes_raw
        integ = psi(nodes_r)[None, :] * np.abs(alpha_at(nodes_r)[None, :] - a_x[:, None])
        acc += share * np.einsum("ij,ij->i", w, integ)
    return float(np.max(acc / (prof.nu ** 2 * psi(xs))))
