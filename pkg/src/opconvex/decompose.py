"""Extremal decompositions of cone members that vanish nowhere.

For ``f`` outside every ``F_alpha`` the tangent line ``a + c x`` at any
``alpha`` between the minimizer and the point whose tangent passes through
the origin has ``a, c >= 0``, and ``f - (a + c x)`` lies in ``F_alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .faces import FaceRep, face_rep, vanishing_point
from .measure import INF, as_param
from .ocfun import (
    OcFunction,
    argmin,
    boundary,
    derivative,
    derivative_at_zero,
    evaluate,
    find_root,
    intercept,
    make_extreme,
)

BRACKET_CEILING = 1e12
ROOT_RTOL = 1e-12
# alpha1 is declared infinite when the intercept at the ceiling exceeds this times f(1)
INFINITE_TANGENT_TOL = 1e-14
RANGE_TOL = 1e-10


class RangeError(ValueError):
    """Raised for an anchor outside the admissible tangent range."""


@dataclass(frozen=True)
class DecompositionRange:
    alpha0: float
    alpha1: float

    def grid(self, count: int, cap: float = INF) -> np.ndarray:
        hi = min(self.alpha1, cap)
        if not math.isfinite(hi):
            raise ValueError("infinite range needs a finite cap")
        return np.linspace(self.alpha0, hi, count)


@dataclass(frozen=True)
class ExtremalDecomposition:
    """``f = a + c x + remainder`` with the remainder in ``F_alpha``."""

    alpha: float
    a: float
    c: float
    remainder: FaceRep

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = self.a + self.c * x + self.remainder.evaluate(x)
        return out if out.ndim else float(out)

    __call__ = evaluate


def decomposition_range(f: OcFunction) -> DecompositionRange:
    """The interval ``[alpha0, alpha1]`` of admissible tangent points."""
    if f.is_zero() or vanishing_point(f) is not None:
        raise ValueError("f lies in some F_alpha and has a unique decomposition there")
    b = boundary(f)
    if b.slope_at_inf == 0.0:
        raise ValueError("f is non-increasing (in F_inf)")
    alpha0 = argmin(f)
    scale_ = evaluate(f, 1.0)
    if intercept(f, BRACKET_CEILING) > INFINITE_TANGENT_TOL * scale_:
        return DecompositionRange(alpha0, INF)
    start = max(alpha0, 1e-300)
    alpha1 = find_root(
        lambda x: intercept(f, x),
        increasing=False,
        lo=alpha0 if alpha0 > 0 else 0.0,
        start=max(2.0 * start, 1.0),
        ceiling=BRACKET_CEILING,
        rtol=ROOT_RTOL * 1e-3,
    )
    return DecompositionRange(alpha0, alpha1)


def tangent_line(f: OcFunction, alpha: float, rng: DecompositionRange | None = None) -> tuple[float, float]:
    """Intercept and slope ``(a, c)`` of the tangent of ``f`` at ``alpha``."""
    alpha = as_param(alpha)
    if alpha == 0.0:
        a, c = boundary(f).f_at_0, derivative_at_zero(f)
    else:
        a, c = intercept(f, alpha), derivative(f, alpha)
    tol = RANGE_TOL * max(evaluate(f, alpha) if alpha > 0 else a, 1.0)
    if not (a >= -tol and c >= -tol):
        if rng is None:
            rng = decomposition_range(f)
        raise RangeError(
            f"alpha={alpha:.12g} outside [{rng.alpha0:.12g}, {rng.alpha1:.12g}]: a={a:.6g}, c={c:.6g}"
        )
    return max(a, 0.0), max(c, 0.0)


def extremal_decomposition(f: OcFunction, alpha: float) -> ExtremalDecomposition:
    """``f = a + c x + (element of F_alpha)`` at the tangent point ``alpha``."""
    alpha = as_param(alpha)
    if not math.isfinite(alpha):
        raise RangeError("alpha must be finite")
    a, c = tangent_line(f, alpha)
    rest = OcFunction._raw(f.f1 - a - c, f.d1 - c, f.nu)
    return ExtremalDecomposition(alpha, a, c, face_rep(rest, alpha))


def ray_transport(alpha, lam, beta: float) -> tuple[float, OcFunction]:
    """Subtract the tangent of ``g_{alpha,lam}`` at ``beta``.

    Returns ``(scale, f_beta)`` where ``f_beta = scale * g_{beta,lam}``.
    """
    alpha, lam = as_param(alpha), as_param(lam)
    beta = float(beta)
    if not beta > 0 or not math.isfinite(beta):
        raise ValueError("beta must be a positive real")
    if alpha == beta:
        raise ValueError("beta must differ from alpha")
    if (alpha == 0.0 and lam == 0.0) or (alpha == INF and lam == INF):
        raise ValueError("the linear generators x and 1 have no transport")
    g = make_extreme(alpha, lam)
    value, slope = evaluate(g, beta), derivative(g, beta)
    # f_beta = g - (value + slope (x - beta)) in canonical data at x = 1
    f_beta = OcFunction._raw(g.f1 - value - slope * (1.0 - beta), g.d1 - slope, g.nu)
    if lam == INF:
        factor = 1.0
    elif alpha == INF:
        factor = (1.0 / (beta + lam)) ** 2
    else:
        factor = ((alpha + lam) / (beta + lam)) ** 2
    return factor, f_beta

