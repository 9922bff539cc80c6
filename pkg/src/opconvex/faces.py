"""Closed faces of the cone: descriptors, membership, simplicial representations.

Every closed face is either ``F(alpha, Lambda)``, generated by the extreme
elements ``g_{alpha,lam}`` with ``lam`` in a nonempty closed ``Lambda``, or
``E(Lambda)``, the members whose canonical measure is supported in ``Lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .measure import (
    INF,
    ClosedSet,
    FiniteMeasure,
    as_param,
    fmt_param,
    reciprocal,
    remap,
    support,
)
from .ocfun import (
    VANISH_TOL,
    OcFunction,
    argmin,
    boundary,
    combination,
    evaluate,
    scale,
    sigma_support,
    vanishes_at,
)

ALPHA_TOL = 1e-9


class NotInFaceError(ValueError):
    """Raised when a function does not lie in the requested face."""


def _as_set(lam_set) -> ClosedSet:
    if isinstance(lam_set, ClosedSet):
        return lam_set
    if isinstance(lam_set, str):
        return ClosedSet.parse(lam_set)
    return ClosedSet.points(*lam_set)


FULL = ClosedSet.full(0.0, INF)


@dataclass(frozen=True)
class FaceDescriptor:
    """``F(alpha, Lambda)`` (``kind == "F"``) or ``E(Lambda)`` (``kind == "E"``)."""

    kind: str
    lam_set: ClosedSet
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("F", "E"):
            raise ValueError(f"unknown face kind {self.kind!r}")
        object.__setattr__(self, "lam_set", _as_set(self.lam_set))
        if self.kind == "F":
            if self.alpha is None:
                raise ValueError("F-faces need alpha")
            if self.lam_set.is_empty():
                raise ValueError("F-faces need a nonempty Lambda")
            object.__setattr__(self, "alpha", as_param(self.alpha, -INF))
        elif self.alpha is not None:
            raise ValueError("E-faces take no alpha")

    def __str__(self) -> str:
        if self.kind == "F":
            return f"F({fmt_param(self.alpha)}, {self.lam_set})"
        return f"E({self.lam_set})"


def F(alpha, lam_set) -> FaceDescriptor:
    return FaceDescriptor("F", _as_set(lam_set), alpha)


def E(lam_set=()) -> FaceDescriptor:
    return FaceDescriptor("E", _as_set(lam_set))


def parse_face(text: str) -> FaceDescriptor:
    """Parse ``"F(1, {3})"``, ``"F(0, 0..inf)"`` or ``"E({1, 2})"``."""
    body = text.strip()
    if len(body) < 3 or body[0] not in "FE" or body[1] != "(" or body[-1] != ")":
        raise ValueError(f"cannot parse face {text!r}; expected F(alpha, set) or E(set)")
    inner = body[2:-1].strip()
    if body[0] == "E":
        return E(ClosedSet.parse(inner))
    if "," not in inner:
        raise ValueError(f"F-face needs 'alpha, set' in {text!r}")
    alpha, rest = inner.split(",", 1)
    return F(as_param(alpha.strip(), -INF), ClosedSet.parse(rest))


def same_alpha(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= ALPHA_TOL * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# Face-specific representations
# ---------------------------------------------------------------------------


def face_generator(alpha: float, lam: float, x):
    """Normalized extreme element of ``F_alpha`` at parameter ``lam``.

    ``(x-alpha)^2 (1+alpha+lam)/(x+lam)`` (``(x-alpha)^2`` at ``lam = inf``) for
    finite ``alpha``; ``(1+lam)/(x+lam)`` (1 at ``lam = inf``) for ``alpha = inf``.
    Each takes the value 1 at ``alpha + 1`` (at 1 when ``alpha = inf``).
    """
    x = np.asarray(x, dtype=float)
    if alpha == INF:
        return np.ones_like(x) if lam == INF else (1.0 + lam) / (x + lam)
    if lam == INF:
        return (x - alpha) ** 2
    return (x - alpha) ** 2 * (1.0 + alpha + lam) / (x + lam)


@dataclass(frozen=True)
class FaceRep:
    """Unique weights of ``f`` over the normalized generators of ``F_alpha``.

    ``weights`` lives on ``[0, inf]``; its atom at ``inf`` is the coefficient
    of ``(x-alpha)^2`` (``alpha`` finite) or of the constant 1 (``alpha = inf``).
    """

    alpha: float
    weights: FiniteMeasure

    def evaluate(self, x):
        """Resum the generators directly (independent of canonical data)."""
        arr = np.asarray(x, dtype=float)
        a = self.alpha
        out = np.zeros_like(arr)
        for lam, w in self.weights.atoms:
            out = out + w * face_generator(a, lam, arr)
        for lo, hi, d in self.weights.segments:
            L = np.log1p((hi - lo) / (arr + lo))
            if a == INF:
                out = out + d * ((hi - lo) + (1.0 - arr) * L)
            else:
                out = out + d * (arr - a) ** 2 * ((hi - lo) + (1.0 + a - arr) * L)
        return out if out.ndim else float(out)

    __call__ = evaluate

    @property
    def boundary_coefficient(self) -> float:
        return self.weights.mass_at(INF)


def _identity(p: float) -> float:
    return p


def _unit(p: float) -> float:
    return 1.0


def face_rep(f: OcFunction, alpha) -> FaceRep:
    """Weights of ``f`` in the simplicial representation of ``F_alpha``."""
    alpha = as_param(alpha)
    if f.is_zero():
        raise NotInFaceError("the zero function has no face representation")
    nu = f.nu
    if alpha == INF:
        b = boundary(f, strict=False)
        if b.slope_at_inf != 0.0:
            raise NotInFaceError(f"not in F_inf: f'(inf) = {b.slope_at_inf:.12g}")
        w = remap(
            nu,
            _identity,
            lambda lam: (1.0 + lam) * (2.0 + lam),
            _unit,
        )
        a = f.f1 - _exact_total(nu, lambda lam: (1.0 + lam) * (2.0 + lam), _cubic)
        scale_ = abs(f.f1) + abs(f.f1 - a)
        if abs(a) <= VANISH_TOL * scale_:
            a = 0.0
        if a < 0:
            raise NotInFaceError(f"negative constant term {a:.6g} in the F_inf representation")
        return FaceRep(alpha, w + FiniteMeasure.atom(INF, a) if a > 0 else w)

    if alpha == 0.0:
        b = boundary(f, strict=False)
        if b.f_at_0 != 0.0:
            raise NotInFaceError(f"not in F_0: f(+0) = {b.f_at_0:.12g}")
        w = remap(
            nu.restrict_finite(),
            _identity,
            lambda lam: (1.0 + lam) * (2.0 + lam) / lam**2,
            _unit,
        )
        extra = ((INF, b.quad_inf), (0.0, b.lin0 or 0.0))
        return FaceRep(alpha, w + FiniteMeasure(tuple((p, m) for p, m in extra if m > 0)))

    if not vanishes_at(f, alpha):
        value = evaluate(f, alpha)
        raise NotInFaceError(f"not in F_{alpha:.12g}: f({alpha:.12g}) = {value:.12g}")

    def ratio(lam):
        return (1.0 + lam) ** 2 * (2.0 + lam) / ((alpha + lam) ** 2 * (1.0 + alpha + lam))

    w = remap(
        nu,
        _identity,
        lambda lam: 1.0 if lam == INF else ratio(lam),
        _unit,
    )
    return FaceRep(alpha, w)


def _cubic(a: float, b: float) -> float:
    # integral of (1 + t)(2 + t) over [a, b]
    P = lambda t: 2.0 * t + 1.5 * t * t + t**3 / 3.0
    return P(b) - P(a)


def _exact_total(nu: FiniteMeasure, weight, seg_integral) -> float:
    parts = [m * weight(lam) for lam, m in nu.atoms]
    parts += [d * seg_integral(lo, hi) for lo, hi, d in nu.segments]
    return math.fsum(parts)


def base_normalize(f: OcFunction, alpha) -> OcFunction:
    """Rescale ``f`` in ``F_alpha`` to the simplex base (value 1 at ``alpha+1``, or at 1)."""
    alpha = as_param(alpha)
    if f.is_zero():
        raise ValueError("the zero function cannot be normalized")
    face_rep(f, alpha)
    at = 1.0 if alpha == INF else alpha + 1.0
    return scale(f, 1.0 / evaluate(f, at))


# ---------------------------------------------------------------------------
# Membership and the lattice
# ---------------------------------------------------------------------------


def member(f: OcFunction, face: FaceDescriptor) -> bool:
    """Decide ``f`` in ``face``."""
    if f.is_zero():
        return True
    if face.kind == "E":
        return sigma_support(f).issubset(face.lam_set)
    try:
        rep = face_rep(f, face.alpha)
    except NotInFaceError:
        return False
    return support(rep.weights).issubset(face.lam_set)


def vanishing_point(f: OcFunction) -> Optional[float]:
    """The ``alpha`` with ``f`` in ``F_alpha``, or None if there is none."""
    b = boundary(f, strict=False)
    if b.slope_at_inf == 0.0:
        return INF
    if b.f_at_0 == 0.0:
        return 0.0
    a0 = argmin(f)
    if 0 < a0 < INF and vanishes_at(f, a0):
        return a0
    return None


def smallest_closed_face(f: OcFunction) -> FaceDescriptor:
    """The smallest closed face containing ``f``."""
    if f.is_zero():
        raise ValueError("the zero function lies in every face")
    alpha = vanishing_point(f)
    if alpha is not None:
        return F(alpha, support(face_rep(f, alpha).weights))
    return E(sigma_support(f))


def is_maximal(face: FaceDescriptor) -> bool:
    return face.kind == "F" and face.lam_set.is_equal(FULL)


def _exempt(alpha: float) -> ClosedSet:
    # F(0, .) and F(inf, .) contain the generators x and 1, which lie in every E
    if alpha == 0.0:
        return ClosedSet.points(0.0)
    if alpha == INF:
        return ClosedSet.points(INF)
    return ClosedSet()


def face_contains(inner: FaceDescriptor, outer: FaceDescriptor) -> bool:
    """Decide ``inner`` is a subset of ``outer`` from their generators."""
    if inner.kind == "F" and outer.kind == "F":
        return same_alpha(inner.alpha, outer.alpha) and inner.lam_set.issubset(outer.lam_set)
    if inner.kind == "F":
        return inner.lam_set.issubset(outer.lam_set.union(_exempt(inner.alpha)))
    if outer.kind == "F":
        # every E contains both 1 and x, which never share an F_alpha
        return False
    return inner.lam_set.issubset(outer.lam_set)


def tau_face(face: FaceDescriptor) -> FaceDescriptor:
    """Image of a face under ``f -> x f(1/x)``."""
    if face.kind == "F":
        return F(reciprocal(face.alpha), face.lam_set.reciprocal())
    return E(face.lam_set.reciprocal())


# ---------------------------------------------------------------------------
# Simpliciality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """Two different extremal decompositions of one function.

    ``left`` and ``right`` are tuples of ``(coefficient, alpha, lam)``.
    """

    lam: float
    left: tuple
    right: tuple

    def lhs(self) -> OcFunction:
        return combination(self.left)

    def rhs(self) -> OcFunction:
        return combination(self.right)

    def gap(self, x) -> float:
        return float(np.max(np.abs(evaluate(self.lhs(), x) - evaluate(self.rhs(), x))))

    def __str__(self) -> str:
        side = lambda terms: " + ".join(
            f"{c:g}*g({fmt_param(a)},{fmt_param(l)})" for c, a, l in terms
        )
        return f"{side(self.left)} = {side(self.right)}"


def non_simplicial_witness(lam: float) -> Witness:
    """``g_{1,lam} + g_{2,lam} = 2 g_{3/2,lam} + 1/2 g_{inf,lam}``."""
    lam = as_param(lam)
    return Witness(lam, ((1.0, 1.0, lam), (1.0, 2.0, lam)), ((2.0, 1.5, lam), (0.5, INF, lam)))


def is_simplicial(face: FaceDescriptor) -> tuple[bool, Optional[Witness]]:
    """Simpliciality of a closed face, with a witness identity when it fails.

    Every ``F(alpha, Lambda)`` is simplicial, as is the two-ray cone ``E({})``;
    ``E(Lambda)`` with nonempty ``Lambda`` is not.
    """
    if face.kind == "F" or face.lam_set.is_empty():
        return True, None
    lam = INF if face.lam_set.contains(INF) else face.lam_set.sample_point()
    return False, non_simplicial_witness(lam)
