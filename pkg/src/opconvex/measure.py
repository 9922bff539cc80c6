"""Finite positive measures on the compactified half-line and closed parameter sets.

A parameter is a plain ``float``; the point at infinity of ``[0, inf]`` is
``math.inf``.  Measures are finite sums of atoms plus piecewise-constant
density segments, which keeps every kernel integral in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

INF = math.inf

ATOM_MERGE_TOL = 1e-12

# sub-pieces used when a segment is re-approximated after a change of variable
REFINE_PIECES = 48
# segments touching 0 are refined geometrically down to hi * ZERO_SLIVER; the
# sliver below that is sent to the atom at infinity by 1/lambda
ZERO_SLIVER = 1e-12
# Gauss nodes per sub-piece carrying the non-uniform part of an image density
_REMAP_NODES, _REMAP_WEIGHTS = np.polynomial.legendre.leggauss(8)


def as_param(value, lo: float = 0.0, hi: float = INF) -> float:
    """Coerce ``value`` to an extended parameter in ``[lo, hi]``.

    Accepts numbers and the strings ``"inf"``/``"∞"``.
    """
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity", "∞"):
            out = INF
        elif text in ("-inf", "-∞"):
            out = -INF
        else:
            out = float(text)
    else:
        out = float(value)
    if math.isnan(out):
        raise ValueError("parameter is NaN")
    if not lo <= out <= hi:
        raise ValueError(f"parameter {out!r} outside [{lo}, {hi}]")
    return out


def reciprocal(lam: float) -> float:
    """The involution lambda -> 1/lambda of [0, inf], exchanging 0 and inf."""
    if lam == 0.0:
        return INF
    if lam == INF:
        return 0.0
    return 1.0 / lam


def fmt_param(lam: float) -> str:
    if lam == INF:
        return "inf"
    if lam == -INF:
        return "-inf"
    return f"{lam:.12g}"


def _close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# Closed sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedSet:
    """A finite union of closed intervals and points of the extended line.

    ``intervals`` is normalized on construction to a sorted tuple of pairwise
    disjoint ``(lo, hi)`` pairs; a point is the degenerate interval ``(p, p)``.
    """

    intervals: tuple = ()

    def __post_init__(self):
        items = []
        for lo, hi in self.intervals:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise ValueError(f"bad interval ({lo}, {hi})")
            items.append((lo, hi))
        items.sort()
        merged: list[tuple[float, float]] = []
        for lo, hi in items:
            if merged and (lo <= merged[-1][1] or _close(lo, merged[-1][1], ATOM_MERGE_TOL)):
                plo, phi = merged[-1]
                merged[-1] = (plo, max(phi, hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def points(cls, *pts: float) -> "ClosedSet":
        return cls(tuple((as_param(p, -INF), as_param(p, -INF)) for p in pts))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "ClosedSet":
        return cls(((as_param(lo, -INF), as_param(hi, -INF)),))

    @classmethod
    def full(cls, lo: float = 0.0, hi: float = INF) -> "ClosedSet":
        return cls(((lo, hi),))

    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float, tol: float = ATOM_MERGE_TOL) -> bool:
        for lo, hi in self.intervals:
            if lo <= x <= hi or _close(x, lo, tol) or _close(x, hi, tol):
                return True
        return False

    __contains__ = contains

    def issubset(self, other: "ClosedSet", tol: float = ATOM_MERGE_TOL) -> bool:
        for lo, hi in self.intervals:
            if not any(
                (olo <= lo or _close(lo, olo, tol)) and (hi <= ohi or _close(hi, ohi, tol))
                for olo, ohi in other.intervals
            ):
                return False
        return True

    def union(self, other: "ClosedSet") -> "ClosedSet":
        return ClosedSet(self.intervals + other.intervals)

    def reciprocal(self) -> "ClosedSet":
        """Image under lambda -> 1/lambda (sets inside [0, inf] only)."""
        return ClosedSet(tuple((reciprocal(hi), reciprocal(lo)) for lo, hi in self.intervals))

    def sample_point(self) -> float:
        """A representative point, preferring a finite one."""
        if not self.intervals:
            raise ValueError("empty set has no points")
        lo, hi = self.intervals[0]
        return lo if math.isfinite(lo) else hi

    def is_equal(self, other: "ClosedSet", tol: float = ATOM_MERGE_TOL) -> bool:
        return self.issubset(other, tol) and other.issubset(self, tol)

    def __str__(self) -> str:
        parts = []
        for lo, hi in self.intervals:
            if lo == hi:
                parts.append(fmt_param(lo))
            else:
                parts.append(f"{fmt_param(lo)}..{fmt_param(hi)}")
        return "{" + ", ".join(parts) + "}"

    @classmethod
    def parse(cls, text: str) -> "ClosedSet":
        """Parse ``"{1, 2..3, inf}"``; braces optional, ``{}`` or ``∅`` is empty."""
        body = text.strip()
        if body in ("∅", "empty"):
            return cls()
        if body.startswith("{") and body.endswith("}"):
            body = body[1:-1]
        body = body.strip()
        if not body:
            return cls()
        items = []
        for tok in body.split(","):
            tok = tok.strip()
            if not tok:
                raise ValueError(f"empty item in set {text!r}")
            if ".." in tok:
                lo, hi = tok.split("..", 1)
                items.append((as_param(lo, -INF), as_param(hi, -INF)))
            else:
                p = as_param(tok, -INF)
                items.append((p, p))
        return cls(tuple(items))


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def _normalize_atoms(atoms) -> tuple:
    cleaned = []
    for pos, mass in atoms:
        pos, mass = float(pos), float(mass)
        if math.isnan(pos):
            raise ValueError("atom position is NaN")
        if not math.isfinite(mass) or mass < 0:
            raise ValueError(f"atom mass must be finite and >= 0, got {mass!r}")
        if mass > 0:
            cleaned.append((pos, mass))
    cleaned.sort()
    merged: list[list[float]] = []
    for pos, mass in cleaned:
        if merged and _same_position(merged[-1][0], pos):
            merged[-1][1] += mass
        else:
            merged.append([pos, mass])
    return tuple((p, m) for p, m in merged)


def _same_position(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= ATOM_MERGE_TOL


def _normalize_segments(segments) -> tuple:
    cleaned = []
    for lo, hi, dens in segments:
        lo, hi, dens = float(lo), float(hi), float(dens)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise ValueError(f"segment needs finite lo < hi, got ({lo}, {hi})")
        if not math.isfinite(dens) or dens < 0:
            raise ValueError(f"segment density must be finite and >= 0, got {dens!r}")
        if dens > 0:
            cleaned.append((lo, hi, dens))
    if not cleaned:
        return ()
    # overlapping input is split at all breakpoints and densities are summed
    cuts = sorted({c for lo, hi, _ in cleaned for c in (lo, hi)})
    out: list[list[float]] = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        dens = sum(d for lo, hi, d in cleaned if lo <= a and b <= hi)
        if dens <= 0:
            continue
        if out and out[-1][1] == a and out[-1][2] == dens:
            out[-1][1] = b
        else:
            out.append([a, b, dens])
    return tuple((a, b, d) for a, b, d in out)


@dataclass(frozen=True)
class FiniteMeasure:
    """Finite positive measure: atoms ``(position, mass)`` plus density segments.

    Segments are ``(lo, hi, density)`` with finite ``lo < hi``.  Zero masses are
    dropped, atoms closer than 1e-12 are merged, and overlapping segments are
    split and summed, so two measures describing the same object compare equal.
    """

    atoms: tuple = ()
    segments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", _normalize_atoms(self.atoms))
        object.__setattr__(self, "segments", _normalize_segments(self.segments))

    @classmethod
    def atom(cls, pos: float, mass: float = 1.0) -> "FiniteMeasure":
        return cls(atoms=((pos, mass),))

    def is_zero(self) -> bool:
        return not self.atoms and not self.segments

    def mass_at(self, pos: float) -> float:
        for p, m in self.atoms:
            if _same_position(p, pos):
                return m
        return 0.0

    def restrict_finite(self) -> "FiniteMeasure":
        return FiniteMeasure(tuple((p, m) for p, m in self.atoms if math.isfinite(p)), self.segments)

    def __add__(self, other: "FiniteMeasure") -> "FiniteMeasure":
        return FiniteMeasure(self.atoms + other.atoms, self.segments + other.segments)

    def scaled(self, c: float) -> "FiniteMeasure":
        if c < 0:
            raise ValueError("scale factor must be >= 0")
        return FiniteMeasure(
            tuple((p, c * m) for p, m in self.atoms),
            tuple((lo, hi, c * d) for lo, hi, d in self.segments),
        )

    def map_atoms(self, fn: Callable[[float, float], tuple]) -> "FiniteMeasure":
        """Apply ``fn(pos, mass) -> (pos', mass')`` to each atom; segments kept."""
        return FiniteMeasure(tuple(fn(p, m) for p, m in self.atoms), self.segments)


def total_mass(m: FiniteMeasure) -> float:
    return math.fsum([mass for _, mass in m.atoms] + [d * (hi - lo) for lo, hi, d in m.segments])


def support(m: FiniteMeasure) -> ClosedSet:
    return ClosedSet(tuple((p, p) for p, _ in m.atoms) + tuple((lo, hi) for lo, hi, _ in m.segments))


def refine_nodes(lo: float, hi: float, pieces: int = REFINE_PIECES) -> np.ndarray:
    """Geometric refinement grid of ``[lo, hi]`` used for re-approximation.

    For ``lo == 0`` the grid starts at ``0`` followed by a geometric run from
    ``hi * ZERO_SLIVER``; for a segment straddling 0 a uniform grid is used.
    """
    if lo > 0:
        return np.geomspace(lo, hi, pieces + 1)
    if lo == 0:
        return np.concatenate(([0.0], np.geomspace(hi * ZERO_SLIVER, hi, pieces + 1)))
    return np.linspace(lo, hi, pieces + 1)


def remap(
    m: FiniteMeasure,
    point_map: Callable[[float], float],
    atom_weight: Callable[[float], float],
    slope: Callable[[float], float],
    pieces: int = REFINE_PIECES,
) -> FiniteMeasure:
    """Push ``m`` forward along a monotone ``point_map`` with a weight.

    Atoms map exactly: ``(p, w) -> (point_map(p), w * atom_weight(p))``.  Each
    segment is cut on :func:`refine_nodes`.  On a sub-piece the image density
    ``density * atom_weight(p) / slope(p)`` (``slope`` is ``|point_map'|``) is
    split into its smallest value at the Gauss nodes, kept as a segment over
    the image piece, and a non-negative remainder carried by atoms at the
    images of the nodes.  The support is preserved and kernel integrals
    against the image are exact up to Gauss quadrature of a smooth remainder.
    A sub-piece whose image is unbounded becomes an atom at the image of its
    unbounded end.
    """
    atoms = [(point_map(p), mass * atom_weight(p)) for p, mass in m.atoms]
    segments = []
    for lo, hi, dens in m.segments:
        nodes = refine_nodes(lo, hi, pieces)
        for a, b in zip(nodes[:-1], nodes[1:]):
            a, b = float(a), float(b)
            half, mid = 0.5 * (b - a), 0.5 * (a + b)
            pts = mid + half * _REMAP_NODES
            src = np.array([dens * atom_weight(float(p)) for p in pts])
            qw = half * _REMAP_WEIGHTS
            ia, ib = point_map(a), point_map(b)
            ilo, ihi = min(ia, ib), max(ia, ib)
            if math.isinf(ilo) or math.isinf(ihi):
                atoms.append((ilo if math.isinf(ilo) else ihi, float(np.dot(qw, src))))
                continue
            if not ihi > ilo:
                atoms.append((ilo, float(np.dot(qw, src))))
                continue
            jac = np.array([slope(float(p)) for p in pts])
            floor = max(float(np.min(src / jac)), 0.0)
            if floor > 0:
                segments.append((ilo, ihi, floor))
            rest = np.maximum(qw * (src - floor * jac), 0.0)
            atoms += [(point_map(float(p)), float(r)) for p, r in zip(pts, rest)]
    return FiniteMeasure(tuple(atoms), tuple(segments))


def pushforward_reciprocal(m: FiniteMeasure) -> FiniteMeasure:
    """Image of ``m`` under lambda -> 1/lambda with 0 <-> inf.

    Exact on atoms; each segment is re-approximated piecewise with the mass of
    every sub-piece preserved exactly.
    """
    return remap(m, reciprocal, lambda _p: 1.0, lambda p: 1.0 / (p * p))


# ---------------------------------------------------------------------------
# Kernel integration
# ---------------------------------------------------------------------------


def _check_positive(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("x must be > 0")
    return arr


def _log_ratio(x, lo, hi):
    # ln((x + hi) / (x + lo)) without cancellation for narrow segments
    return np.log1p((hi - lo) / (x + lo))


def integrate_kernel(m: FiniteMeasure, x):
    """Integral of ``(x-1)^2 (2+lam)/(x+lam)`` against ``m`` (``(x-1)^2`` at inf).

    ``x`` may be a scalar or an array of positive reals.
    """
    arr = _check_positive(x)
    sq = (arr - 1.0) ** 2
    total = np.zeros_like(arr)
    for lam, mass in m.atoms:
        if lam == INF:
            total = total + mass * sq
        else:
            total = total + mass * sq * (2.0 + lam) / (arr + lam)
    for lo, hi, dens in m.segments:
        total = total + dens * sq * ((hi - lo) + (2.0 - arr) * _log_ratio(arr, lo, hi))
    return total if total.ndim else float(total)


def kernel_grid(lams: Sequence[float], x: Iterable[float]) -> np.ndarray:
    """Matrix ``K[i, j]`` of the kernel at ``x[i]`` and atom position ``lams[j]``."""
    xs = _check_positive(np.asarray(list(x), dtype=float))
    cols = []
    for lam in lams:
        if lam == INF:
            cols.append((xs - 1.0) ** 2)
        else:
            cols.append((xs - 1.0) ** 2 * (2.0 + lam) / (xs + lam))
    return np.column_stack(cols) if cols else np.zeros((xs.size, 0))
