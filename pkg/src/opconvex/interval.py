"""Non-negative operator convex functions on (-1, 1).

A member is stored by its data at the anchor 0,

    f(x) = f0 + d0 x + int x^2 / (1 - lam x) dmu(lam),

with ``mu`` a finite positive measure on [-1, 1].  The extreme elements are
``gt_{alpha,lam}(x) = (x - alpha)^2 / (1 - lam x)`` for ``alpha, lam`` in
[-1, 1].  Face descriptors are shared with :mod:`opconvex.faces`, with both
``alpha`` and ``Lambda`` restricted to [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .faces import E, F, FaceDescriptor, same_alpha
from .measure import INF, ClosedSet, FiniteMeasure, as_param, fmt_param, remap, support, total_mass
from .ocfun import NotInConeError, OcFunction, derivative, evaluate, gauss_legendre

EDGE = 1.0 - 1e-6
KERNEL_GUARD = 1e-14
NONNEG_TOL = 1e-10
VANISH_TOL = 1e-10
IDENTITY_GRID = np.linspace(-0.99, 0.99, 128)
_CHECK_GRID = np.unique(np.concatenate([
    np.linspace(-EDGE, EDGE, 401),
    -(1.0 - np.geomspace(1e-6, 1e-1, 24)),
    1.0 - np.geomspace(1e-6, 1e-1, 24),
]))
FULL_I = ClosedSet.full(-1.0, 1.0)


def _param(value) -> float:
    return as_param(value, -1.0, 1.0)


def _clip(x) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), -EDGE, EDGE)


def _denominator(lam, x):
    return np.maximum(1.0 - lam * x, KERNEL_GUARD)


def _segment_integral(lo, hi, x):
    # int_lo^hi x^2 / (1 - lam x) dlam
    return x * (np.log1p(-lo * x) - np.log1p(-hi * x))


def _segment_slope(lo, hi, x):
    return (np.log1p(-lo * x) - np.log1p(-hi * x)) + x * (hi / _denominator(hi, x) - lo / _denominator(lo, x))


@dataclass(frozen=True)
class OcFunctionI:
    """Member of the cone on (-1, 1) given by ``(f(0), f'(0), mu)``."""

    f0: float
    d0: float
    mu: FiniteMeasure = FiniteMeasure()

    domain = (-1.0, 1.0)

    def __post_init__(self):
        for pos, _ in self.mu.atoms:
            if not -1.0 <= pos <= 1.0:
                raise NotInConeError(f"atom at {pos!r} outside [-1, 1]")
        for lo, hi, _ in self.mu.segments:
            if lo < -1.0 or hi > 1.0:
                raise NotInConeError(f"segment [{lo}, {hi}] outside [-1, 1]")
        check_cone_i(self)

    @classmethod
    def _raw(cls, f0: float, d0: float, mu: FiniteMeasure) -> "OcFunctionI":
        obj = object.__new__(cls)
        object.__setattr__(obj, "f0", float(f0))
        object.__setattr__(obj, "d0", float(d0))
        object.__setattr__(obj, "mu", mu)
        return obj

    def __call__(self, x):
        return evaluate_i(self, x)

    def derivative(self, x):
        return derivative_i(self, x)

    def __add__(self, other: "OcFunctionI") -> "OcFunctionI":
        return OcFunctionI._raw(self.f0 + other.f0, self.d0 + other.d0, self.mu + other.mu)

    def __rmul__(self, c: float) -> "OcFunctionI":
        return scale_i(self, c)

    def is_zero(self) -> bool:
        return self.f0 == 0.0 and self.d0 == 0.0 and self.mu.is_zero()


def evaluate_i(f: OcFunctionI, x):
    """Value of ``f`` at ``x``, clipped to ``|x| <= 1 - 1e-6``."""
    x = _clip(x)
    out = f.f0 + f.d0 * x
    for lam, m in f.mu.atoms:
        out = out + m * x * x / _denominator(lam, x)
    for lo, hi, d in f.mu.segments:
        out = out + d * _segment_integral(lo, hi, x)
    return out if np.ndim(out) else float(out)


def derivative_i(f: OcFunctionI, x):
    x = _clip(x)
    out = f.d0 + 0.0 * x
    for lam, m in f.mu.atoms:
        out = out + m * (2.0 * x - lam * x * x) / _denominator(lam, x) ** 2
    for lo, hi, d in f.mu.segments:
        out = out + d * _segment_slope(lo, hi, x)
    return out if np.ndim(out) else float(out)


def _abs_scale(f: OcFunctionI, x) -> np.ndarray:
    x = _clip(x)
    tmp = OcFunctionI._raw(abs(f.f0), 0.0, f.mu)
    return evaluate_i(tmp, x) + abs(f.d0) * np.abs(x)


def _snap(terms: list) -> float:
    if any(math.isinf(t) for t in terms):
        return INF
    total = math.fsum(terms)
    return 0.0 if abs(total) <= VANISH_TOL * math.fsum(abs(t) for t in terms) else total


def boundary_value_i(f: OcFunctionI, side: int) -> float:
    """The limit of ``f`` at ``side`` in {-1, 1}; possibly ``inf``."""
    if side not in (-1, 1):
        raise ValueError("side must be -1 or 1")
    terms = [f.f0, side * f.d0]
    for lam, m in f.mu.atoms:
        den = 1.0 - side * lam
        terms.append(INF if den <= 0 else m / den)
    for lo, hi, d in f.mu.segments:
        if side == 1:
            terms.append(INF if hi >= 1.0 else d * (math.log1p(-lo) - math.log1p(-hi)))
        else:
            terms.append(INF if lo <= -1.0 else d * (math.log1p(hi) - math.log1p(lo)))
    return _snap(terms)


def argmin_i(f: OcFunctionI) -> float:
    """Minimizer of the convex function ``f`` on [-1, 1]."""
    lo, hi = -EDGE, EDGE
    if derivative_i(f, lo) >= 0:
        return -1.0
    if derivative_i(f, hi) <= 0:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if derivative_i(f, mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15:
            break
    return 0.5 * (lo + hi)


def check_cone_i(f: OcFunctionI) -> None:
    """Raise :class:`NotInConeError` unless ``f >= 0`` on (-1, 1)."""
    vals = evaluate_i(f, _CHECK_GRID)
    bad = vals < -NONNEG_TOL * np.maximum(_abs_scale(f, _CHECK_GRID), 1e-300)
    if np.any(bad):
        x = float(_CHECK_GRID[np.argmax(bad)])
        raise NotInConeError(f"f({x:.6g}) = {evaluate_i(f, x):.6g} < 0")
    for side in (-1, 1):
        if boundary_value_i(f, side) < 0:
            raise NotInConeError(f"limit of f at {side} is negative")
    a = argmin_i(f)
    if -1.0 < a < 1.0 and evaluate_i(f, a) < -NONNEG_TOL * max(float(_abs_scale(f, a)), 1e-300):
        raise NotInConeError(f"f({a:.6g}) = {evaluate_i(f, a):.6g} < 0")


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def _extreme_data(alpha: float, lam: float, c: float = 1.0) -> tuple[float, float, tuple]:
    # (x - alpha)^2 / (1 - lam x) = alpha^2 + (lam alpha^2 - 2 alpha) x + (1 - lam alpha)^2 x^2 / (1 - lam x)
    mass = c * (1.0 - lam * alpha) ** 2
    atoms = ((lam, mass),) if mass > 0 else ()
    return c * alpha * alpha, c * (lam * alpha * alpha - 2.0 * alpha), atoms


def make_extreme_i(alpha, lam) -> OcFunctionI:
    """``(x - alpha)^2 / (1 - lam x)``."""
    alpha, lam = _param(alpha), _param(lam)
    f0, d0, atoms = _extreme_data(alpha, lam)
    return OcFunctionI(f0, d0, FiniteMeasure(atoms))


def linear_i(p: float, q: float) -> OcFunctionI:
    """``p + q x``; a member iff ``p >= |q|``."""
    return OcFunctionI(float(p), float(q))


def scale_i(f: OcFunctionI, c: float) -> OcFunctionI:
    if c < 0:
        raise ValueError("cone is closed under non-negative scaling only")
    return OcFunctionI._raw(c * f.f0, c * f.d0, f.mu.scaled(c))


def combination_i(terms) -> OcFunctionI:
    """``sum c * gt_{alpha,lam}`` over ``(c, alpha, lam)`` with ``c >= 0``."""
    f0 = d0 = 0.0
    atoms: list = []
    for c, alpha, lam in terms:
        if c < 0:
            raise ValueError("coefficients must be non-negative")
        a, b, at = _extreme_data(_param(alpha), _param(lam), float(c))
        f0, d0 = f0 + a, d0 + b
        atoms.extend(at)
    return OcFunctionI._raw(f0, d0, FiniteMeasure(tuple(atoms)))


def sigma_support_i(f: OcFunctionI) -> ClosedSet:
    return support(f.mu)


# ---------------------------------------------------------------------------
# Anchors
# ---------------------------------------------------------------------------


class AnchorDataI(NamedTuple):
    alpha: float
    value: float
    slope: float
    mu: FiniteMeasure

    def evaluate(self, x):
        """Reconstruct ``f`` from its data at the anchor ``alpha``."""
        x = _clip(x)
        a = self.alpha
        out = self.value + self.slope * (x - a)
        for lam, m in self.mu.atoms:
            out = out + m * (x - a) ** 2 / (_denominator(lam, x) * (1.0 - lam * a) ** 2)
        for lo, hi, d in self.mu.segments:
            out = out + d * np.array([gauss_legendre(
                lambda t, xi=xi: (xi - a) ** 2 / ((1.0 - t * xi) * (1.0 - t * a) ** 2), lo, hi)
                for xi in np.atleast_1d(x)]).reshape(np.shape(x))
        return out if np.ndim(out) else float(out)


def reanchor_i(f: OcFunctionI, alpha: float) -> AnchorDataI:
    """Data of ``f`` at the anchor ``alpha`` in (-1, 1).

    The measure is the same for every anchor; the kernel at ``alpha`` is
    ``(x - alpha)^2 / ((1 - lam x)(1 - lam alpha)^2)``.
    """
    alpha = float(alpha)
    if not -1.0 < alpha < 1.0:
        raise ValueError("anchor must lie in (-1, 1)")
    return AnchorDataI(alpha, evaluate_i(f, alpha), derivative_i(f, alpha), f.mu)


# ---------------------------------------------------------------------------
# Faces
# ---------------------------------------------------------------------------


def check_face_i(face: FaceDescriptor) -> FaceDescriptor:
    if face.kind == "F" and not -1.0 <= face.alpha <= 1.0:
        raise ValueError("alpha must lie in [-1, 1]")
    if not face.lam_set.issubset(FULL_I):
        raise ValueError("Lambda must lie in [-1, 1]")
    return face


def _scale_of(f: OcFunctionI) -> float:
    return max(float(np.max(np.abs(evaluate_i(f, np.linspace(-0.5, 0.5, 9))))), 1e-300)


def vanishing_point_i(f: OcFunctionI) -> Optional[float]:
    """The ``alpha`` in [-1, 1] with ``f(alpha) = 0`` (boundary limits at +-1), or None."""
    if boundary_value_i(f, -1) == 0.0:
        return -1.0
    if boundary_value_i(f, 1) == 0.0:
        return 1.0
    a = argmin_i(f)
    if -1.0 < a < 1.0 and evaluate_i(f, a) <= VANISH_TOL * max(_scale_of(f), float(_abs_scale(f, a))):
        return a
    return None


def face_rep_i(f: OcFunctionI, alpha) -> FiniteMeasure:
    """The unique ``nu`` with ``f = int (x - alpha)^2 / (1 - lam x) dnu(lam)``.

    ``nu = mu / (1 - lam alpha)^2``; for ``alpha = +-1`` the generator
    ``1 -+ x`` (``lam = alpha``) carries the remaining mass ``f(0) - nu([-1, 1])``.
    """
    alpha = _param(alpha)
    if f.is_zero():
        return FiniteMeasure()
    v = vanishing_point_i(f)
    if v is None or not same_alpha(v, alpha):
        raise ValueError(f"f does not vanish at {fmt_param(alpha)}")
    ends = [lam for lam, _ in f.mu.atoms] + [e for lo, hi, _ in f.mu.segments for e in (lo, hi)]
    if any(lam * alpha >= 1.0 for lam in ends):
        raise ValueError("mu charges the vanishing point")

    nu = remap(f.mu, lambda p: p, lambda p: 1.0 / (1.0 - p * alpha) ** 2, lambda p: 1.0)
    if abs(alpha) == 1.0:
        b = f.f0 - total_mass(nu)
        if abs(b) <= VANISH_TOL * max(f.f0, 1e-300):
            b = 0.0
        if b < 0:
            raise ValueError("negative boundary mass")
        nu = nu + FiniteMeasure(((alpha, b),))
    return nu


def boundary_rep_i(f: OcFunctionI, alpha) -> FiniteMeasure:
    """Representation over ``(x -+ 1)^2 / (1 - lam x)`` of ``f`` vanishing at ``alpha = +-1``."""
    alpha = _param(alpha)
    if abs(alpha) != 1.0:
        raise ValueError("alpha must be -1 or 1")
    if boundary_value_i(f, int(alpha)) != 0.0:
        raise ValueError(f"f does not vanish at {int(alpha)}")
    return face_rep_i(f, alpha)


def evaluate_rep_i(alpha: float, nu: FiniteMeasure, x):
    """``int (x - alpha)^2 / (1 - lam x) dnu``, segments by quadrature."""
    x = _clip(x)
    out = np.zeros_like(x)
    for lam, m in nu.atoms:
        out = out + m * (x - alpha) ** 2 / _denominator(lam, x)
    for lo, hi, d in nu.segments:
        out = out + d * (x - alpha) ** 2 * np.array(
            [gauss_legendre(lambda t, xi=xi: 1.0 / (1.0 - t * xi), lo, hi) for xi in np.atleast_1d(x)]
        ).reshape(np.shape(x))
    return out if np.ndim(out) else float(out)


def membership_i(f: OcFunctionI, face: FaceDescriptor) -> bool:
    check_face_i(face)
    if f.is_zero():
        return True
    if face.kind == "E":
        return sigma_support_i(f).issubset(face.lam_set)
    alpha = vanishing_point_i(f)
    if alpha is None or not same_alpha(alpha, face.alpha):
        return False
    return support(face_rep_i(f, face.alpha)).issubset(face.lam_set)


def smallest_closed_face_i(f: OcFunctionI) -> FaceDescriptor:
    if f.is_zero():
        raise ValueError("the zero function lies in every face")
    alpha = vanishing_point_i(f)
    if alpha is not None:
        return F(alpha, support(face_rep_i(f, alpha)))
    return E(sigma_support_i(f))


def _exempt_i(alpha: float) -> ClosedSet:
    # gt_{-1,-1} = 1 + x and gt_{1,1} = 1 - x have mu = 0 and lie in every E
    if alpha in (-1.0, 1.0):
        return ClosedSet.points(alpha)
    return ClosedSet()


def face_contains_i(inner: FaceDescriptor, outer: FaceDescriptor) -> bool:
    check_face_i(inner)
    check_face_i(outer)
    if inner.kind == "F" and outer.kind == "F":
        return same_alpha(inner.alpha, outer.alpha) and inner.lam_set.issubset(outer.lam_set)
    if inner.kind == "F":
        return inner.lam_set.issubset(outer.lam_set.union(_exempt_i(inner.alpha)))
    if outer.kind == "F":
        # 1 + x and 1 - x lie in every E and vanish at different points
        return False
    return inner.lam_set.issubset(outer.lam_set)


def is_maximal_i(face: FaceDescriptor) -> bool:
    check_face_i(face)
    return face.kind == "F" and face.lam_set.is_equal(FULL_I)


# ---------------------------------------------------------------------------
# Identities and simpliciality
# ---------------------------------------------------------------------------

# gt_{-1} + gt_{1} + 2 gt_{0} = 4 (gt_{-1/2} + gt_{1/2}), as commonly stated
STATED_IDENTITY = (((1.0, -1.0), (1.0, 1.0), (2.0, 0.0)), ((4.0, -0.5), (4.0, 0.5)))
# numerators: (x+1)^2 + (x-1)^2 + 6x^2 = 8x^2 + 2 = 4((x+1/2)^2 + (x-1/2)^2)
WITNESS_IDENTITY = (((1.0, -1.0), (1.0, 1.0), (6.0, 0.0)), ((4.0, -0.5), (4.0, 0.5)))


def _side(terms, lam, x):
    return sum(c * (x - a) ** 2 / _denominator(lam, x) for c, a in terms)


def identity_gap_i(lam, identity=STATED_IDENTITY, grid=IDENTITY_GRID) -> float:
    """Max absolute gap between the two sides of ``identity`` at ``lam``."""
    lam = _param(lam)
    x = np.asarray(grid, dtype=float)
    left, right = identity
    return float(np.max(np.abs(_side(left, lam, x) - _side(right, lam, x))))


def identity_check_i(lam) -> float:
    """Gap of ``gt_{-1} + gt_1 + 2 gt_0 = 4 (gt_{-1/2} + gt_{1/2})`` on 128 points of (-0.99, 0.99)."""
    return identity_gap_i(lam, STATED_IDENTITY)


@dataclass(frozen=True)
class WitnessI:
    lam: float
    left: tuple
    right: tuple

    def gap(self, grid=IDENTITY_GRID) -> float:
        return identity_gap_i(self.lam, (self.left, self.right), grid)

    def __str__(self) -> str:
        side = lambda terms: " + ".join(f"{c:g}*gt({a:g},{fmt_param(self.lam)})" for c, a in terms)
        return f"{side(self.left)} = {side(self.right)}"


def is_simplicial_i(face: FaceDescriptor) -> tuple[bool, Optional[WitnessI]]:
    """Every ``F(alpha, Lambda)`` and ``E({})`` is simplicial; other ``E`` are not."""
    check_face_i(face)
    if face.kind == "F" or face.lam_set.is_empty():
        return True, None
    left, right = WITNESS_IDENTITY
    return False, WitnessI(face.lam_set.sample_point(), left, right)


# ---------------------------------------------------------------------------
# Affine transport
# ---------------------------------------------------------------------------


def affine_transport(f, a: float, b: float) -> OcFunctionI:
    """``g(x) = f(s x + c)`` with ``s = (b - a)/2``, ``c = (b + a)/2``.

    ``f`` is an :class:`OcFunction` with ``0 <= a < b < inf`` or an
    :class:`OcFunctionI` with ``-1 <= a < b <= 1``.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("need a < b")
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("interval ends must be finite")
    s, c = 0.5 * (b - a), 0.5 * (b + a)
    if isinstance(f, OcFunctionI):
        if a < -1.0 or b > 1.0:
            raise ValueError("(a, b) must lie in [-1, 1]")
        return _transport_interval(f, s, c)
    if isinstance(f, OcFunction):
        if a < 0.0:
            raise ValueError("(a, b) must lie in [0, inf)")
        return _transport_halfline(f, s, c)
    raise TypeError("affine_transport needs an OcFunction or OcFunctionI")


def _transport_interval(f: OcFunctionI, s: float, c: float) -> OcFunctionI:
    # y^2/(1 - lam y) at y = s x + c is s^2/(1 - lam c) gt_{-c/s, lam s/(1 - lam c)}
    def point(lam):
        return lam * s / (1.0 - lam * c)

    def weight(lam):
        return s * s / (1.0 - lam * c) ** 3

    mu = remap(f.mu, point, weight, lambda lam: s / (1.0 - lam * c) ** 2)
    mu = FiniteMeasure(tuple((min(max(p, -1.0), 1.0), m) for p, m in mu.atoms), mu.segments)
    return OcFunctionI(evaluate_i(f, c), s * derivative_i(f, c), mu)


def _transport_halfline(f: OcFunction, s: float, c: float) -> OcFunctionI:
    # (y-1)^2 (2+lam)/(y+lam) at y = s x + c is (2+lam) s^2/(c+lam) gt_{(1-c)/s, -s/(c+lam)}
    def point(lam):
        return 0.0 if lam == INF else -s / (c + lam)

    def weight(lam):
        if lam == INF:
            return s * s
        return (2.0 + lam) * (1.0 + lam) ** 2 * s * s / (c + lam) ** 3

    mu = remap(f.nu, point, weight, lambda lam: s / (c + lam) ** 2)
    mu = FiniteMeasure(tuple((min(max(p, -1.0), 1.0), m) for p, m in mu.atoms), mu.segments)
    return OcFunctionI(evaluate(f, c), s * derivative(f, c), mu)
