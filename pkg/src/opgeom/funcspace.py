"""Function-space substrate: evaluable functions on [0,1], the weight
psi(x) = x(1-x), the weighted sup norm, endpoint interpolation, and the
kernel transform that inverts -d^2/dx^2 with vanishing endpoint values.

Function01 values are immutable after construction; transform caches are
write-once per grid, so everything here is safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError, QuadratureError, StepSizeError

__all__ = [
    "psi",
    "Function01",
    "registry",
    "registry_names",
    "EvaluationGrid",
    "default_grid",
    "PsiNormEstimate",
    "psi_norm",
    "apply_B1",
    "project_to_Cpsi",
    "F_transform",
    "check_F_second_derivative",
    "modulus_of_continuity",
]


def psi(x):
    """The weight x(1-x), maximal value 1/4 at the midpoint."""
    x = np.asarray(x, dtype=float)
    out = x * (1.0 - x)
    return out if out.ndim else float(out)


class Function01:
    """An evaluable real function on [0, 1].

    kind is "registry-closed-form" for named closed forms, "node-table"
    for tabulated values with piecewise-linear interpolation (constant
    extrapolation outside the node range), or "derived" for arithmetic
    combinations and transform outputs.

    poly_coeffs (low-to-high powers) are carried through arithmetic when
    both operands are polynomial, which lets operator code use exact
    monomial moments instead of quadrature.
    """

    __slots__ = ("kind", "name", "_eval", "_d2", "poly_coeffs", "sup_bound",
                 "quad_error_bound")

    def __init__(self, eval_fn, kind="derived", name=None, d2=None,
                 poly_coeffs=None, sup_bound=None):
        self._eval = eval_fn
        self.kind = kind
        self.name = name
        self._d2 = d2
        self.poly_coeffs = None if poly_coeffs is None else tuple(float(c) for c in poly_coeffs)
        self.sup_bound = sup_bound
        self.quad_error_bound = None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_callable(cls, fn, name=None, d2=None, sup_bound=None):
        return cls(fn, kind="registry-closed-form", name=name, d2=d2,
                   sup_bound=sup_bound)

    @classmethod
    def polynomial(cls, coeffs, name=None):
        coeffs = tuple(float(c) for c in coeffs)

        def ev(x):
            return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coeffs)

        obj = cls(ev, kind="registry-closed-form", name=name, d2=None,
                  poly_coeffs=coeffs, sup_bound=float(np.sum(np.abs(coeffs))))
        if len(coeffs) <= 2:
            obj._d2 = _zero_function()
        else:
            obj._d2 = cls.polynomial(_poly_deriv(coeffs, 2))
        return obj

    @classmethod
    def from_nodes(cls, nodes, values):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size != values.size:
            raise DomainError("node table needs matching 1-d nodes and values")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("node table requires strictly increasing nodes")
        if nodes[0] < 0.0 or nodes[-1] > 1.0:
            raise DomainError("nodes must lie inside [0, 1]")

        def ev(x):
            # np.interp clips outside the node range: constant extrapolation.
            return np.interp(np.asarray(x, dtype=float), nodes, values)

        return cls(ev, kind="node-table", name=None,
                   sup_bound=float(np.max(np.abs(values))))

    # -- evaluation --------------------------------------------------------

    def __call__(self, x):
        out = np.asarray(self._eval(np.asarray(x, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    def second_derivative(self) -> Optional["Function01"]:
        return self._d2

    # -- arithmetic (closed under poly tracking) ----------------------------

    def __add__(self, other: "Function01") -> "Function01":
        pc = None
        if self.poly_coeffs is not None and other.poly_coeffs is not None:
            pc = tuple(np.polynomial.polynomial.polyadd(self.poly_coeffs, other.poly_coeffs))
        sup = None
        if self.sup_bound is not None and other.sup_bound is not None:
            sup = self.sup_bound + other.sup_bound
        d2 = None
        if self._d2 is not None and other._d2 is not None:
            d2 = self._d2 + other._d2
        out = Function01(lambda x, a=self, b=other: a._eval(x) + b._eval(x),
                         poly_coeffs=pc, sup_bound=sup)
        out._d2 = d2
        return out

    def __neg__(self) -> "Function01":
        return self.scaled(-1.0)

    def __sub__(self, other: "Function01") -> "Function01":
        return self + other.scaled(-1.0)

    def scaled(self, c: float) -> "Function01":
        pc = None if self.poly_coeffs is None else tuple(c * v for v in self.poly_coeffs)
        sup = None if self.sup_bound is None else abs(c) * self.sup_bound
        d2 = None if self._d2 is None else self._d2.scaled(c)
        out = Function01(lambda x, a=self, cc=c: cc * a._eval(x),
                         poly_coeffs=pc, sup_bound=sup)
        out._d2 = d2
        return out

    def __mul__(self, other: "Function01") -> "Function01":
        pc = None
        if self.poly_coeffs is not None and other.poly_coeffs is not None:
            pc = tuple(np.polynomial.polynomial.polymul(self.poly_coeffs, other.poly_coeffs))
        sup = None
        if self.sup_bound is not None and other.sup_bound is not None:
            sup = self.sup_bound * other.sup_bound
        return Function01(lambda x, a=self, b=other: a._eval(x) * b._eval(x),
                          poly_coeffs=pc, sup_bound=sup)

    def reflected(self) -> "Function01":
        """Composition with tau(x) = 1 - x."""
        pc = None
        if self.poly_coeffs is not None:
            p = np.polynomial.Polynomial(self.poly_coeffs)
            pc = tuple(p(np.polynomial.Polynomial([1.0, -1.0])).coef)
        return Function01(lambda x, a=self: a._eval(1.0 - np.asarray(x, dtype=float)),
                          poly_coeffs=pc, sup_bound=self.sup_bound)

    def __repr__(self):
        tag = self.name or self.kind
        return f"Function01({tag})"


def _poly_deriv(coeffs, order):
    c = np.polynomial.polynomial.polyder(coeffs, order)
    return tuple(float(v) for v in np.atleast_1d(c))


_ZERO: Optional[Function01] = None


def _zero_function() -> Function01:
    # Two levels deep so derivative chains terminate without cycles.
    global _ZERO
    if _ZERO is None:
        def ev(x):
            return np.zeros_like(np.asarray(x, dtype=float))

        inner = Function01(ev, kind="registry-closed-form", name="zero",
                           poly_coeffs=(0.0,), sup_bound=0.0)
        zero = Function01(ev, kind="registry-closed-form", name="zero",
                          poly_coeffs=(0.0,), sup_bound=0.0)
        zero._d2 = inner
        _ZERO = zero
    return _ZERO


def _osc_eval(x):
    x = np.asarray(x, dtype=float)
    w = x * (1.0 - x)
    with np.errstate(divide="ignore"):
        inner = np.where(w > 0.0, 1.0 / np.where(w > 0.0, w, 1.0), 0.0)
    return np.where(w > 0.0, np.sin(inner), 0.0)


def _build_registry():
    reg = {}
    for j in range(5):
        coeffs = (0.0,) * j + (1.0,)
        reg[f"e{j}"] = Function01.polynomial(coeffs, name=f"e{j}")
    reg["psi"] = Function01.polynomial((0.0, 1.0, -1.0), name="psi")
    sin_pi = Function01.from_callable(
        lambda x: np.sin(math.pi * np.asarray(x, dtype=float)),
        name="sin_pi", sup_bound=1.0)
    sin_pi._d2 = Function01.from_callable(
        lambda x: -math.pi ** 2 * np.sin(math.pi * np.asarray(x, dtype=float)),
        name="sin_pi''", sup_bound=math.pi ** 2)
    reg["sin_pi"] = sin_pi
    expf = Function01.from_callable(
        lambda x: np.exp(np.asarray(x, dtype=float)), name="exp", sup_bound=math.e)
    expf._d2 = Function01.from_callable(
        lambda x: np.exp(np.asarray(x, dtype=float)), name="exp''", sup_bound=math.e)
    reg["exp"] = expf
    reg["abs_half"] = Function01.from_callable(
        lambda x: np.abs(np.asarray(x, dtype=float) - 0.5),
        name="abs_half", sup_bound=0.5)
    reg["osc"] = Function01.from_callable(_osc_eval, name="osc", sup_bound=1.0)
    return reg


_REGISTRY = _build_registry()


def registry(name: str) -> Function01:
    """Look up a named test function; see registry_names() for the set."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown registry function {name!r}; "
                       f"choose from {sorted(_REGISTRY)}") from None


def registry_names():
    return tuple(sorted(_REGISTRY))


# ---------------------------------------------------------------------------
# Grids and the weighted norm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationGrid:
    """Strictly interior evaluation points for sup-norm estimates.

    Endpoints are excluded by construction: the weighted norm divides by
    psi, which vanishes there.
    """

    points: np.ndarray
    scheme: str
    count: int = field(default=0)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size < 3:
            raise DomainError("grid needs at least 3 points")
        if pts[0] <= 0.0 or pts[-1] >= 1.0 or np.any(np.diff(pts) <= 0.0):
            raise DomainError("grid points must be strictly increasing inside (0, 1)")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "count", pts.size)

    @classmethod
    def chebyshev_interior(cls, count: int) -> "EvaluationGrid":
        i = np.arange(count)
        pts = np.sin(math.pi * (2 * i + 1) / (4.0 * count)) ** 2
        return cls(points=pts, scheme="chebyshev-interior")

    @classmethod
    def uniform_interior(cls, count: int) -> "EvaluationGrid":
        pts = np.arange(1, count + 1) / (count + 1.0)
        return cls(points=pts, scheme="uniform-interior")

    def restricted(self, lo: float, hi: float) -> "EvaluationGrid":
        mask = (self.points >= lo) & (self.points <= hi)
        return EvaluationGrid(points=self.points[mask], scheme=self.scheme)

    def refined(self) -> "EvaluationGrid":
        """Grid of doubled resolution in the same scheme, for diagnostics."""
        if self.scheme == "chebyshev-interior":
            return EvaluationGrid.chebyshev_interior(2 * self.count)
        return EvaluationGrid.uniform_interior(2 * self.count)


@lru_cache(maxsize=8)
def _default_grid_cached(count: int) -> EvaluationGrid:
    return EvaluationGrid.chebyshev_interior(count)


def default_grid(count: int = 1001) -> EvaluationGrid:
    return _default_grid_cached(count)


@dataclass(frozen=True)
class PsiNormEstimate:
    """Grid maximum of |f|/psi; a lower bound of the true weighted sup."""

    value: float
    argmax_point: float
    grid: EvaluationGrid

    def __float__(self):
        return self.value


def psi_norm(f: Function01, grid: Optional[EvaluationGrid] = None) -> PsiNormEstimate:
    """Estimate the weighted sup norm of f on a grid of interior points."""
    grid = grid or default_grid()
    x = grid.points
    with np.errstate(over="ignore"):
        ratios = np.abs(f(x)) / psi(x)
    if not np.all(np.isfinite(ratios)):
        raise OverflowError("|f|/psi exceeds the representable range; "
                            "f is numerically outside the weighted space")
    i = int(np.argmax(ratios))
    return PsiNormEstimate(value=float(ratios[i]), argmax_point=float(x[i]), grid=grid)


def apply_B1(f: Function01) -> Function01:
    """Affine interpolation of the endpoint values of f."""
    f0 = float(f(0.0))
    f1 = float(f(1.0))
    return Function01.polynomial((f0, f1 - f0), name=None)


def project_to_Cpsi(f: Function01) -> Function01:
    """f minus its endpoint interpolation; vanishes at 0 and 1 exactly."""
    f0 = float(f(0.0))
    f1 = float(f(1.0))

    def ev(x, base=f, a=f0, b=f1):
        x = np.asarray(x, dtype=float)
        return base._eval(x) - ((1.0 - x) * a + x * b)

    pc = None
    if f.poly_coeffs is not None:
        pc = tuple(np.polynomial.polynomial.polysub(f.poly_coeffs, (f0, f1 - f0)))
    sup = None if f.sup_bound is None else f.sup_bound + max(abs(f0), abs(f1))
    out = Function01(ev, poly_coeffs=pc, sup_bound=sup)
    out._d2 = f._d2
    return out


# ---------------------------------------------------------------------------
# The kernel transform  (1-x) int_0^x t f + x int_x^1 (1-t) f
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_PANEL_CAP = 1024


def _segment_integrals(f, a, b, start_panels, fmax_hint):
    """Integrals of t*f(t) and (1-t)*f(t) over [a, b] with Gauss-Legendre
    panels doubled until agreement; returns (Ia, Ib, err_bound, fmax).

    On a stall the remainder is bounded by the sampled amplitude times the
    weight mass, which is what the endpoint-oscillatory registry function
    needs: its unresolved mass shrinks quadratically toward the endpoints.
    """
    width = b - a
    if width <= 0.0:
        return 0.0, 0.0, 0.0, fmax_hint
    mass_a = 0.5 * (b * b - a * a)
    mass_b = 0.5 * ((1.0 - a) ** 2 - (1.0 - b) ** 2)
    prev = None
    fmax = fmax_hint
    panels = max(1, start_panels)
    while True:
        edges = np.linspace(a, b, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        t = (mid + half * _GL_NODES).ravel()
        w = (half * _GL_WEIGHTS).ravel()
        ft = np.asarray(f(t), dtype=float)
        fmax = max(fmax, float(np.max(np.abs(ft))) if ft.size else 0.0)
        ia = float(np.dot(w, t * ft))
        ib = float(np.dot(w, (1.0 - t) * ft))
        if prev is not None:
            delta = max(abs(ia - prev[0]), abs(ib - prev[1]))
            scale = max(abs(ia), abs(ib), fmax * max(mass_a, mass_b))
            if delta <= 1e-14 * scale + 1e-300:
                return ia, ib, delta, fmax
            if panels >= _PANEL_CAP:
                bound = min(delta, fmax * max(mass_a, mass_b))
                return ia, ib, bound, fmax
        prev = (ia, ib)
        panels *= 2


class _CachedTransform:
    """Cumulative antiderivatives of t*f and (1-t)*f over grid segments.

    Off-grid queries integrate only the partial segment from the nearest
    anchor, so pointwise evaluations stay at quadrature accuracy (needed
    by the finite-difference probes of the second derivative).
    """

    def __init__(self, f: Function01, grid: EvaluationGrid, start_panels: int,
                 stall_budget: float):
        self.f = f
        anchors = np.concatenate(([0.0], grid.points, [1.0]))
        n_seg = anchors.size - 1
        seg_a = np.zeros(n_seg)
        seg_b = np.zeros(n_seg)
        err = 0.0
        fmax = 0.0
        for j in range(n_seg):
            ia, ib, e, fmax = _segment_integrals(
                f, anchors[j], anchors[j + 1], start_panels, fmax)
            seg_a[j] = ia
            seg_b[j] = ib
            err += e
        if err > stall_budget:
            raise QuadratureError(
                f"panel refinement stalled: residual bound {err:.3e} "
                f"exceeds budget {stall_budget:.3e}")
        self.anchors = anchors
        # cum_a[i] = int_0^anchor_i t f ; cum_b likewise for (1-t) f
        self.cum_a = np.concatenate(([0.0], np.cumsum(seg_a)))
        self.cum_b = np.concatenate(([0.0], np.cumsum(seg_b)))
        self.total_b = float(self.cum_b[-1])
        self.error_bound = err
        self.start_panels = start_panels
        self._memo = {}

    def _partials(self, x: float):
        j = int(np.searchsorted(self.anchors, x, side="right") - 1)
        j = min(max(j, 0), self.anchors.size - 2)
        a0 = self.anchors[j]
        if x == a0:
            return float(self.cum_a[j]), float(self.cum_b[j])
        ia, ib, _, _ = _segment_integrals(self.f, a0, x, self.start_panels, 0.0)
        return float(self.cum_a[j] + ia), float(self.cum_b[j] + ib)

    def value(self, x: float) -> float:
        got = self._memo.get(x)
        if got is None:
            ax, bx = self._partials(x)
            got = (1.0 - x) * ax + x * (self.total_b - bx)
            self._memo[x] = got
        return got

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        if xs.ndim == 0:
            return self.value(float(xs))
        return np.array([self.value(float(v)) for v in xs])


def F_transform(f: Function01, quad_panels: int = 1,
                grid: Optional[EvaluationGrid] = None,
                stall_budget: float = 1e-3) -> Function01:
    """Kernel transform of f, cached on the evaluation grid.

    The result vanishes at both endpoints and its second derivative equals
    -f on (0, 1).  Quadrature error is below 1e-10 for f with a bounded
    second derivative; for bounded f that oscillates near the endpoints,
    the accumulated stall bound is checked against stall_budget and stored
    on the result as quad_error_bound.
    """
    grid = grid or default_grid()
    cache = _CachedTransform(f, grid, quad_panels, stall_budget)
    sup = None if f.sup_bound is None else f.sup_bound / 8.0  # |F(f)| <= sup|f| * psi/2 pointwise
    out = Function01(cache, name=None, sup_bound=sup)
    out.quad_error_bound = cache.error_bound  # type: ignore[attr-defined]
    return out


def check_F_second_derivative(f: Function01, x: float, h: float,
                              transform: Optional[Function01] = None) -> float:
    """Central second difference of the transform at x; tends to -f(x) at
    O(h^2) for smooth f."""
    if not (0.0 < x - h and x + h < 1.0):
        raise DomainError("x +- h must stay inside (0, 1)")
    if h < 1e-7:
        raise StepSizeError("step below 1e-7: cancellation would exceed "
                            "quadrature accuracy")
    F = transform if transform is not None else F_transform(f)
    return (F(x - h) - 2.0 * F(x) + F(x + h)) / (h * h)


def modulus_of_continuity(f: Function01, delta: float,
                          grid: Optional[EvaluationGrid] = None) -> float:
    """Max |f(u)-f(v)| over grid pairs with |u-v| <= delta (diagnostic;
    a lower estimate of the true modulus)."""
    if delta <= 0.0:
        raise DomainError("delta must be positive")
    grid = grid or default_grid()
    pts = grid.points
    vals = f(pts)
    best = 0.0
    j_hi = 0
    for i in range(pts.size):
        j_hi = max(j_hi, i)
        while j_hi + 1 < pts.size and pts[j_hi + 1] - pts[i] <= delta:
            j_hi += 1
        window = vals[i:j_hi + 1]
        best = max(best, float(window.max() - window.min()))
    return best
