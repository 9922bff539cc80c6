"""Non-negative operator convex functions on (0, inf) in canonical form.

Every member of the cone is stored by its data at the anchor ``x = 1``::

    f(x) = f(1) + f'(1)(x - 1) + int (x-1)^2 (2+lam)/(x+lam) dnu(lam)

with ``nu`` a finite positive measure on ``[0, inf]`` (the kernel reads
``(x-1)^2`` at ``lam = inf``).  All boundary quantities are computed from this
data in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .measure import (
    INF,
    ClosedSet,
    FiniteMeasure,
    as_param,
    integrate_kernel,
    reciprocal,
    remap,
    support,
    total_mass,
)

# cone check: log-uniform grid on [1e-6, 1e6] plus the anchor
CHECK_GRID = np.concatenate((np.geomspace(1e-6, 1e6, 256), [1.0]))
NONNEG_TOL = 1e-10
# relative tolerance below which a boundary value or slope is declared zero
VANISH_TOL = 1e-10
CLASSIFY_TOL = 1e-10

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def gauss_legendre(fn, a: float, b: float) -> float:
    """24-node Gauss-Legendre rule on ``[a, b]``."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return float(half * np.dot(_GL_WEIGHTS, fn(mid + half * _GL_NODES)))


class NotInConeError(ValueError):
    """Raised when canonical data does not describe a non-negative function."""


@dataclass(frozen=True)
class OcFunction:
    """A member of the cone of non-negative operator convex functions.

    ``f1`` and ``d1`` are ``f(1)`` and ``f'(1)``; ``nu`` lives on ``[0, inf]``
    and its atom at ``inf`` is the quadratic coefficient.  Construction checks
    non-negativity on :data:`CHECK_GRID`, at the minimizer and at the ends.
    """

    f1: float
    d1: float
    nu: FiniteMeasure = field(default_factory=FiniteMeasure)

    domain = (0.0, INF)

    def __post_init__(self):
        object.__setattr__(self, "f1", float(self.f1))
        object.__setattr__(self, "d1", float(self.d1))
        _validate_positions(self.nu)
        check_cone(self)

    @classmethod
    def _raw(cls, f1: float, d1: float, nu: FiniteMeasure) -> "OcFunction":
        # for results of cone operations, which stay in the cone by construction
        obj = object.__new__(cls)
        object.__setattr__(obj, "f1", float(f1))
        object.__setattr__(obj, "d1", float(d1))
        object.__setattr__(obj, "nu", nu)
        return obj

    def __call__(self, x):
        return evaluate(self, x)

    def derivative(self, x):
        return derivative(self, x)

    def __add__(self, other: "OcFunction") -> "OcFunction":
        return add(self, other)

    def __rmul__(self, c: float) -> "OcFunction":
        return scale(self, c)

    def is_zero(self) -> bool:
        return self.f1 == 0.0 and self.d1 == 0.0 and self.nu.is_zero()


def _validate_positions(nu: FiniteMeasure) -> None:
    for p, _ in nu.atoms:
        if not p >= 0:
            raise ValueError(f"atom position {p!r} outside [0, inf]")
    for lo, _, _ in nu.segments:
        if lo < 0:
            raise ValueError(f"segment start {lo!r} outside [0, inf)")


def _abs_scale(f: OcFunction, x):
    return abs(f.f1) + abs(f.d1) * np.abs(np.asarray(x) - 1.0) + integrate_kernel(f.nu, x)


def vanishes_at(f: OcFunction, x: float) -> bool:
    """``f(x) = 0`` up to rounding in the terms of the canonical form."""
    scale_ = max(float(_abs_scale(f, x)), abs(float(evaluate(f, x + 1.0))), 1e-300)
    return abs(float(evaluate(f, x))) <= VANISH_TOL * scale_


def check_cone(f: OcFunction) -> None:
    """Raise :class:`NotInConeError` if ``f`` dips below zero beyond tolerance."""
    vals = evaluate(f, CHECK_GRID)
    floor = -NONNEG_TOL * _abs_scale(f, CHECK_GRID)
    bad = vals < floor
    if np.any(bad):
        x = float(CHECK_GRID[np.argmax(bad)])
        raise NotInConeError(f"function is negative at x={x:.6g}: f(x)={float(evaluate(f, x)):.6g}")
    b = boundary(f, strict=False)
    if b.slope_at_inf < 0:
        raise NotInConeError(f"f'(inf) = {b.slope_at_inf:.6g} < 0, so f is eventually negative")
    if b.f_at_0 < 0:
        raise NotInConeError(f"f(+0) = {b.f_at_0:.6g} < 0")
    x0 = argmin(f)
    if 0 < x0 < INF:
        v = evaluate(f, x0)
        if v < -NONNEG_TOL * _abs_scale(f, x0):
            raise NotInConeError(f"function is negative at its minimizer x={x0:.6g}: f={v:.6g}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _positive(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("x must be > 0")
    return arr


def evaluate(f: OcFunction, x):
    """``f(x)`` for scalar or array ``x > 0``."""
    arr = _positive(x)
    out = f.f1 + f.d1 * (arr - 1.0) + integrate_kernel(f.nu, arr)
    return out if np.ndim(out) else float(out)


def derivative(f: OcFunction, x):
    """``f'(x)`` in closed form, for scalar or array ``x > 0``."""
    arr = _positive(x)
    out = np.full_like(arr, f.d1)
    for lam, m in f.nu.atoms:
        if lam == INF:
            out = out + 2.0 * m * (arr - 1.0)
        else:
            out = out + m * (2.0 + lam) * (arr - 1.0) * (arr + 2.0 * lam + 1.0) / (arr + lam) ** 2
    for lo, hi, d in f.nu.segments:
        L = np.log1p((hi - lo) / (arr + lo))
        dL = 1.0 / (arr + hi) - 1.0 / (arr + lo)
        out = out + d * (
            2.0 * (arr - 1.0) * ((hi - lo) + (2.0 - arr) * L)
            + (arr - 1.0) ** 2 * (-L + (2.0 - arr) * dL)
        )
    return out if out.ndim else float(out)


def intercept(f: OcFunction, x):
    """``f(x) - x f'(x)``, the value at 0 of the tangent line at ``x``.

    Computed term by term so that it stays accurate for very large ``x``.
    """
    arr = _positive(x)
    out = np.full_like(arr, f.f1 - f.d1)
    for lam, m in f.nu.atoms:
        if lam == INF:
            out = out + m * (1.0 - arr**2)
        else:
            out = out - m * (2.0 + lam) * (arr - 1.0) * (lam * arr + 2.0 * arr + lam) / (arr + lam) ** 2
    for lo, hi, d in f.nu.segments:
        # with u = x + lam the integrand is q + (pq - r)/u - p r/u^2
        p, q, r = 2.0 - arr, arr + 1.0, arr * (arr - 1.0)
        L = np.log1p((hi - lo) / (arr + lo))
        inv = 1.0 / (arr + hi) - 1.0 / (arr + lo)
        out = out - d * (arr - 1.0) * (q * (hi - lo) + (p * q - r) * L + p * r * inv)
    return out if out.ndim else float(out)


def has_mass_at_zero(f: OcFunction) -> bool:
    return f.nu.mass_at(0.0) > 0 or any(lo == 0.0 for lo, _, _ in f.nu.segments)


def _zero_slope_terms(f: OcFunction) -> list:
    terms = [f.d1]
    for lam, m in f.nu.atoms:
        if lam == INF:
            terms.append(-2.0 * m)
        else:
            terms.append(-m * (2.0 + lam) * (1.0 + 2.0 * lam) / lam**2)
    for lo, hi, d in f.nu.segments:
        terms.append(-d * (2.0 * (hi - lo) + 5.0 * math.log(hi / lo) + 2.0 * (1.0 / lo - 1.0 / hi)))
    return terms


def derivative_at_zero(f: OcFunction) -> float:
    """``f'(+0)``; ``-inf`` when ``nu`` charges a neighbourhood of 0."""
    if has_mass_at_zero(f):
        return -INF
    return math.fsum(_zero_slope_terms(f))


# ---------------------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------------------


class BoundaryData(NamedTuple):
    f_at_0: float  # f(+0), possibly inf
    slope_at_inf: float  # f'(inf), possibly inf
    lin0: Optional[float]  # lim f(x)/x at 0, set only when f(+0) = 0
    quad_inf: float  # lim f(x)/x^2 at inf

    @property
    def in_f0(self) -> bool:
        return self.f_at_0 == 0.0

    @property
    def in_finf(self) -> bool:
        return self.slope_at_inf == 0.0


def _snap(terms: list, strict: bool) -> float:
    value = math.fsum(terms)
    scale = math.fsum(abs(t) for t in terms)
    if abs(value) <= VANISH_TOL * scale:
        return 0.0
    if strict and value < 0:
        raise NotInConeError(f"boundary value {value:.6g} < 0")
    return value


def boundary(f: OcFunction, strict: bool = True) -> BoundaryData:
    """Boundary values of ``f`` from its canonical data (no numeric limits).

    Values within ``VANISH_TOL`` of zero relative to the size of their terms
    are reported as exactly ``0.0``.
    """
    nu = f.nu
    if has_mass_at_zero(f):
        f0 = INF
    else:
        terms = [f.f1, -f.d1]
        for lam, m in nu.atoms:
            terms.append(m if lam == INF else m * (2.0 + lam) / lam)
        for lo, hi, d in nu.segments:
            terms.append(d * ((hi - lo) + 2.0 * math.log(hi / lo)))
        f0 = _snap(terms, strict)

    if nu.mass_at(INF) > 0:
        slope = INF
    else:
        terms = [f.d1]
        terms += [m * (2.0 + lam) for lam, m in nu.atoms]
        terms += [d * (2.0 * (hi - lo) + 0.5 * (hi * hi - lo * lo)) for lo, hi, d in nu.segments]
        slope = _snap(terms, strict)

    lin0 = None
    if f0 == 0.0:
        lin0 = _snap(_zero_slope_terms(f), strict)
    return BoundaryData(f0, slope, lin0, nu.mass_at(INF))


def argmin(f: OcFunction) -> float:
    """Minimizer of ``f`` on ``[0, inf]`` (0 or inf at the ends).

    ``f'`` is non-decreasing, so its zero is found by bracketed bisection.
    """
    if derivative_at_zero(f) >= 0:
        return 0.0
    if boundary(f, strict=False).slope_at_inf <= 0:
        return INF
    return find_root(lambda x: derivative(f, x), increasing=True)


def find_root(fn, increasing: bool, lo: float = 0.0, start: float = 1.0,
              ceiling: float = 1e12, max_iter: int = 200, rtol: float = 1e-15) -> float:
    """Zero of a monotone function on ``(lo, inf)`` by bracket expansion + bisection.

    Raises ``ValueError`` if no sign change is found below ``ceiling``.
    """
    sign = 1.0 if increasing else -1.0
    g = lambda x: sign * fn(x)
    hi = max(start, lo * 2.0 if lo > 0 else start)
    while g(hi) < 0:
        if hi >= ceiling:
            raise ValueError("no root below the bracket ceiling")
        hi = min(hi * 2.0, ceiling)
    a = lo if lo > 0 else hi
    if lo == 0:
        while a > 1e-300 and g(a) > 0:
            a *= 0.5
    b = hi
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b or (b - a) <= rtol * b:
            break
        if g(mid) > 0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Construction and cone operations
# ---------------------------------------------------------------------------


def make_extreme(alpha, lam) -> OcFunction:
    """The extreme element ``g_{alpha,lam}`` in canonical form.

    ``(x-alpha)^2/(x+lam)``, ``(x-alpha)^2`` for ``lam = inf``,
    ``1/(x+lam)`` for ``alpha = inf`` and the constant 1 when both are inf.
    """
    alpha, lam = as_param(alpha), as_param(lam)
    if alpha == INF and lam == INF:
        return OcFunction._raw(1.0, 0.0, FiniteMeasure())
    if alpha == INF:
        r = 1.0 / (1.0 + lam)
        return OcFunction._raw(r, -r * r, FiniteMeasure.atom(lam, r * r / (2.0 + lam)))
    if lam == INF:
        return OcFunction._raw((alpha - 1.0) ** 2, 2.0 * (1.0 - alpha), FiniteMeasure.atom(INF, 1.0))
    s = 1.0 + lam
    mass = ((alpha + lam) / s) ** 2 / (2.0 + lam)
    return OcFunction._raw(
        (1.0 - alpha) ** 2 / s,
        (1.0 - alpha) * (1.0 + alpha + 2.0 * lam) / s**2,
        FiniteMeasure.atom(lam, mass),
    )


def linear(p: float, q: float) -> OcFunction:
    """``p + q x`` with ``p, q >= 0``."""
    if p < 0 or q < 0:
        raise NotInConeError("p + qx needs p, q >= 0")
    return OcFunction._raw(p + q, q, FiniteMeasure())


def add(f: OcFunction, g: OcFunction) -> OcFunction:
    return OcFunction._raw(f.f1 + g.f1, f.d1 + g.d1, f.nu + g.nu)


def scale(f: OcFunction, c: float) -> OcFunction:
    if c < 0:
        raise ValueError("scale factor must be >= 0")
    return OcFunction._raw(c * f.f1, c * f.d1, f.nu.scaled(c))


def combination(terms) -> OcFunction:
    """Sum of ``c * make_extreme(alpha, lam)`` over ``(c, alpha, lam)`` triples."""
    out = OcFunction._raw(0.0, 0.0, FiniteMeasure())
    for c, alpha, lam in terms:
        out = add(out, scale(make_extreme(alpha, lam), c))
    return out


def sigma_support(f: OcFunction) -> ClosedSet:
    """The support of ``nu``; contains inf iff the quadratic coefficient is > 0."""
    return support(f.nu)


# ---------------------------------------------------------------------------
# Re-anchoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnchorData:
    """Integral data of ``f`` at an anchor ``alpha > 0``.

    ``mu_atoms`` holds the atoms of the representing measure on ``[0, inf)``;
    on segments the representing measure has the polynomial density
    ``(1+lam)^2 (2+lam) * density``, listed as ``(lo, hi, density)`` in
    ``mu_segments``.
    """

    alpha: float
    value: float
    slope: float
    gamma: float
    mu_atoms: FiniteMeasure
    mu_segments: tuple = ()

    def mu_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        for lo, hi, d in self.mu_segments:
            inside = (lam >= lo) & (lam <= hi)
            out = out + np.where(inside, d * (1.0 + lam) ** 2 * (2.0 + lam), 0.0)
        return out

    def evaluate(self, x: float) -> float:
        """Reconstruct ``f(x)`` from the anchored representation."""
        a = self.alpha
        total = self.value + self.slope * (x - a) + self.gamma * (x - a) ** 2
        for lam, m in self.mu_atoms.atoms:
            total += m * (x - a) ** 2 / ((x + lam) * (a + lam) ** 2)
        for lo, hi, d in self.mu_segments:
            kern = lambda t: d * (1.0 + t) ** 2 * (2.0 + t) * (x - a) ** 2 / ((x + t) * (a + t) ** 2)
            nodes = np.geomspace(max(lo, 1e-300), hi, 33) if lo > 0 else np.linspace(lo, hi, 33)
            total += sum(gauss_legendre(kern, float(p), float(q)) for p, q in zip(nodes[:-1], nodes[1:]))
        return total


def reanchor(f: OcFunction, alpha: float) -> AnchorData:
    """Integral data ``(f(alpha), f'(alpha), gamma, mu)`` at anchor ``alpha``.

    ``gamma = nu({inf})`` and ``dmu = (1+lam)^2 (2+lam) dnu`` on ``[0, inf)``;
    both are independent of ``alpha``.
    """
    if not alpha > 0:
        raise ValueError("anchor must be > 0")
    alpha = float(alpha)
    atoms = tuple((lam, m * (1.0 + lam) ** 2 * (2.0 + lam)) for lam, m in f.nu.atoms if lam != INF)
    return AnchorData(
        alpha=alpha,
        value=evaluate(f, alpha),
        slope=derivative(f, alpha),
        gamma=f.nu.mass_at(INF),
        mu_atoms=FiniteMeasure(atoms),
        mu_segments=f.nu.segments,
    )


# ---------------------------------------------------------------------------
# The involution f -> x f(1/x)
# ---------------------------------------------------------------------------


def _tau_weight(lam: float) -> float:
    # (2 + lam)/(1 + 2 lam), the kernel factor picked up at the image point 1/lam
    if lam == INF:
        return 0.5
    return (2.0 + lam) / (1.0 + 2.0 * lam)


def tau_transform(f: OcFunction) -> OcFunction:
    """The function ``x f(1/x)``.

    ``g(1) = f(1)``, ``g'(1) = f(1) - f'(1)``; an atom at ``lam`` moves to
    ``1/lam`` with its mass multiplied by ``(2+lam)/(1+2lam)``.  Segments are
    re-approximated piecewise with exact sub-piece masses.
    """
    nu = remap(f.nu, reciprocal, _tau_weight, lambda p: 1.0 / (p * p))
    return OcFunction._raw(f.f1, f.f1 - f.d1, nu)


# ---------------------------------------------------------------------------
# Extreme rays
# ---------------------------------------------------------------------------


class ExtremeRay(NamedTuple):
    alpha: float
    lam: float
    scale: float

    @property
    def strictly_positive(self) -> bool:
        """Whether the ray is also extreme in the cone of strictly positive members."""
        return self.alpha in (0.0, INF)


def _rel_close(a: float, b: float, scale: float, tol: float = CLASSIFY_TOL) -> bool:
    return abs(a - b) <= tol * max(scale, 1e-300)


def _matches(f: OcFunction, c: float, alpha: float, lam: float) -> bool:
    g = scale(make_extreme(alpha, lam), c)
    sc = abs(f.f1) + abs(f.d1) + total_mass(f.nu)
    if not (_rel_close(f.f1, g.f1, sc) and _rel_close(f.d1, g.d1, sc)):
        return False
    if f.nu.segments or g.nu.segments:
        return False
    if len(f.nu.atoms) != len(g.nu.atoms):
        return False
    return all(
        p == q or abs(p - q) <= CLASSIFY_TOL * max(1.0, abs(p))
        for (p, _), (q, _) in zip(f.nu.atoms, g.nu.atoms)
    ) and all(_rel_close(m, n, sc) for (_, m), (_, n) in zip(f.nu.atoms, g.nu.atoms))


def classify_extreme(f: OcFunction) -> Optional[ExtremeRay]:
    """Return ``(alpha, lam, c)`` with ``f = c g_{alpha,lam}``, or None if not extreme."""
    if f.is_zero():
        raise ValueError("the zero function spans no ray")
    nu = f.nu
    if nu.segments or len(nu.atoms) > 1:
        return None
    if not nu.atoms:
        p, q = f.f1 - f.d1, f.d1
        sc = abs(f.f1) + abs(f.d1)
        if abs(q) <= CLASSIFY_TOL * sc and p > 0:
            return ExtremeRay(INF, INF, f.f1)
        if abs(p) <= CLASSIFY_TOL * sc and q > 0:
            return ExtremeRay(0.0, 0.0, q)
        return None

    lam, m = nu.atoms[0]
    if lam == INF:
        alpha = 1.0 - f.d1 / (2.0 * m)
        candidates = [(m, alpha if alpha > 0 else 0.0, INF)]
    else:
        s = 1.0 + lam
        candidates = [(m * s * s * (2.0 + lam), INF, lam)]
        # f(x)(x + lam) = c (x - alpha)^2 as a quadratic in x
        c = f.d1 + m * (2.0 + lam)
        if c > 0:
            lin = f.f1 + f.d1 * (lam - 1.0) - 2.0 * m * (2.0 + lam)
            alpha = -lin / (2.0 * c)
            if alpha > -CLASSIFY_TOL * max(1.0, abs(lin / c)):
                candidates.append((c, alpha if alpha > 0 else 0.0, lam))
    for c, alpha, lam_ in candidates:
        if c > 0 and _matches(f, c, alpha, lam_):
            return ExtremeRay(alpha, lam_, c)
    return None
