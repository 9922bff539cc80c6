"""Desk-scale matrix verification: Jacobi eigensolver, functional calculus and
randomized searches for violations of matrix convexity and monotonicity.

Matrices are real symmetric ``numpy`` arrays; every routine also accepts a
stack of shape ``(..., n, n)``.  A search that finds nothing does not certify
anything: it only fails to falsify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

INF = math.inf
JACOBI_TOL = 1e-14
MAX_SWEEPS = 60
NEGLIGIBLE = 1e-18
PSD_MARGIN = 1e-8
LOEWNER_MARGIN = 1e-10
MIN_SPECTRUM = 1e-8
DEFAULT_SPECTRUM = (1e-2, 1e2)
MAX_ORDER = 16


class SpectralDecomp(NamedTuple):
    eigvals: np.ndarray  # ascending
    Q: np.ndarray  # orthogonal, columns are eigenvectors


def as_sym(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expected square matrices")
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def eig_sym(A) -> SpectralDecomp:
    """Eigendecomposition by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius mass of every matrix in the stack
    is at most ``JACOBI_TOL`` times its Frobenius norm.
    """
    A = as_sym(A)
    shape = A.shape
    n = shape[-1]
    a = A.reshape(-1, n, n).copy()
    V = np.broadcast_to(np.eye(n), a.shape).copy()
    norm = np.sqrt(np.sum(a * a, axis=(1, 2)))
    iu = np.triu_indices(n, 1)
    for _ in range(MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(a[:, iu[0], iu[1]] ** 2, axis=1))
        if np.all(off <= JACOBI_TOL * norm):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                # entries below rounding of the diagonal are simply dropped
                active = np.abs(apq) > NEGLIGIBLE * (np.abs(a[:, p, p]) + np.abs(a[:, q, q]))
                if not np.any(active):
                    a[:, p, q] = a[:, q, p] = 0.0
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = (t * c)[:, None]
                c = c[:, None]
                ap, aq = a[:, :, p].copy(), a[:, :, q].copy()
                a[:, :, p] = c * ap - s * aq
                a[:, :, q] = s * ap + c * aq
                ap, aq = a[:, p, :].copy(), a[:, q, :].copy()
                a[:, p, :] = c * ap - s * aq
                a[:, q, :] = s * ap + c * aq
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
                V[:, :, p] = c * vp - s * vq
                V[:, :, q] = s * vp + c * vq
    w = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1)
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return SpectralDecomp(w.reshape(shape[:-1]), V.reshape(shape))


def compose(w, Q) -> np.ndarray:
    """``Q diag(w) Q^T`` for stacks."""
    out = np.einsum("...ij,...j,...kj->...ik", Q, w, Q)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def min_eig(A) -> np.ndarray:
    return eig_sym(A).eigvals[..., 0]


# ---------------------------------------------------------------------------
# Functional calculus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarFunction:
    """A plain scalar function for negative controls outside the cone."""

    fn: Callable
    dfn: Optional[Callable] = None
    domain: tuple = (0.0, INF)
    name: str = ""

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.dfn is None:
            raise ValueError(f"{self.name or 'function'} has no derivative")
        return self.dfn(np.asarray(x, dtype=float))


def _check_spectrum(f, w) -> None:
    lo, hi = getattr(f, "domain", (0.0, INF))
    if lo == 0.0:
        if np.any(w <= MIN_SPECTRUM):
            raise ValueError(f"spectrum must lie in (0, inf); min eigenvalue {np.min(w):.3g}")
    elif np.any(w <= lo) or np.any(w >= hi):
        raise ValueError(f"spectrum must lie in ({lo}, {hi})")


def apply_spectral(f, w, Q) -> np.ndarray:
    _check_spectrum(f, w)
    return compose(np.asarray(f(w), dtype=float), Q)


def matrix_apply(f, A) -> np.ndarray:
    """``f(A) = Q diag(f(eigvals)) Q^T``."""
    w, Q = eig_sym(A)
    return apply_spectral(f, w, Q)


def geometric_mean(A, B) -> np.ndarray:
    """``A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}``."""
    wa, Qa = eig_sym(A)
    if np.any(wa <= 0) or np.any(eig_sym(B).eigvals <= 0):
        raise ValueError("geometric mean needs positive definite arguments")
    half = compose(np.sqrt(wa), Qa)
    ihalf = compose(1.0 / np.sqrt(wa), Qa)
    M = ihalf @ as_sym(B) @ ihalf
    wm, Qm = eig_sym(M)
    return as_sym(half @ compose(np.sqrt(np.clip(wm, 0.0, None)), Qm) @ half)


# ---------------------------------------------------------------------------
# Random sampling
# ---------------------------------------------------------------------------


def _spectrum(rng, n, spectrum):
    lo, hi = spectrum
    if lo > 0:
        return np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    return rng.uniform(lo, hi, n)


def _orthogonal(rng, n):
    Z = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


@lru_cache(maxsize=64)
def _trial_matrices(n: int, trials: int, seed: int, spectrum: tuple, kind: str):
    # one child seed per trial, so trial i is the same whatever the trial count
    children = np.random.SeedSequence(seed).spawn(trials)
    w1, Q1, w2, Q2, t = [], [], [], [], []
    for child in children:
        rng = np.random.default_rng(child)
        w1.append(_spectrum(rng, n, spectrum))
        Q1.append(_orthogonal(rng, n))
        if kind == "psd":
            w2.append(np.exp(rng.uniform(math.log(1e-3), math.log(1e1), n)))
        else:
            w2.append(_spectrum(rng, n, spectrum))
        Q2.append(_orthogonal(rng, n))
        t.append(rng.uniform(0.0, 1.0))
    out = tuple(np.array(v) for v in (w1, Q1, w2, Q2, t))
    for arr in out:
        arr.setflags(write=False)
    return out


def _validate(n: int, trials: int) -> None:
    if not 2 <= n <= MAX_ORDER:
        raise ValueError(f"matrix order must be in [2, {MAX_ORDER}]")
    if trials < 1:
        raise ValueError("need at least one trial")


class MatrixWitness(NamedTuple):
    trial: int
    A: np.ndarray
    B: np.ndarray
    t: Optional[float]
    min_eig: float


def _first_violation(defect, scale) -> Optional[int]:
    mins = min_eig(defect)
    bad = np.flatnonzero(mins < -PSD_MARGIN * np.maximum(scale, 1e-300))
    return (int(bad[0]), mins) if bad.size else (None, mins)


def _maxabs(M):
    return np.max(np.abs(M), axis=(-1, -2))


def convexity_witness_search(f, n: int, trials: int, seed: int,
                             spectrum: tuple = DEFAULT_SPECTRUM) -> Optional[MatrixWitness]:
    """Search for ``f((1-t)A + tB) <= (1-t)f(A) + t f(B)`` failing in the PSD order.

    Returns the violating trial with the lowest index, or None.
    """
    _validate(n, trials)
    w1, Q1, w2, Q2, t = _trial_matrices(n, trials, seed, tuple(spectrum), "convex")
    A, B = compose(w1, Q1), compose(w2, Q2)
    tt = t[:, None, None]
    mix = (1.0 - tt) * apply_spectral(f, w1, Q1) + tt * apply_spectral(f, w2, Q2)
    fc = matrix_apply(f, (1.0 - tt) * A + tt * B)
    idx, mins = _first_violation(mix - fc, np.maximum(_maxabs(mix), _maxabs(fc)))
    if idx is None:
        return None
    return MatrixWitness(idx, A[idx], B[idx], float(t[idx]), float(mins[idx]))


def convexity_defects(f, n: int, trials: int, seed: int, spectrum: tuple = DEFAULT_SPECTRUM) -> np.ndarray:
    """The defect matrices ``(1-t)f(A) + t f(B) - f((1-t)A + tB)`` of every trial."""
    _validate(n, trials)
    w1, Q1, w2, Q2, t = _trial_matrices(n, trials, seed, tuple(spectrum), "convex")
    tt = t[:, None, None]
    A, B = compose(w1, Q1), compose(w2, Q2)
    return (1.0 - tt) * apply_spectral(f, w1, Q1) + tt * apply_spectral(f, w2, Q2) - matrix_apply(
        f, (1.0 - tt) * A + tt * B
    )


def monotone_decreasing_check(f, n: int, trials: int, seed: int,
                              spectrum: tuple = DEFAULT_SPECTRUM) -> Optional[MatrixWitness]:
    """Search for ``A >= B`` with ``f(A) <= f(B)`` failing; ``A = B + P``, ``P`` PSD."""
    _validate(n, trials)
    w1, Q1, w2, Q2, _ = _trial_matrices(n, trials, seed, tuple(spectrum), "psd")
    B = compose(w1, Q1)
    A = B + compose(w2, Q2)
    fb = apply_spectral(f, w1, Q1)
    fa = matrix_apply(f, A)
    idx, mins = _first_violation(fb - fa, np.maximum(_maxabs(fa), _maxabs(fb)))
    if idx is None:
        return None
    return MatrixWitness(idx, A[idx], B[idx], None, float(mins[idx]))


def log_convexity_spot_check(f, n: int, trials: int, seed: int,
                             spectrum: tuple = DEFAULT_SPECTRUM) -> Optional[MatrixWitness]:
    """Search for ``f((A+B)/2) <= f(A) # f(B)`` failing."""
    _validate(n, trials)
    w1, Q1, w2, Q2, _ = _trial_matrices(n, trials, seed, tuple(spectrum), "convex")
    A, B = compose(w1, Q1), compose(w2, Q2)
    gm = geometric_mean(apply_spectral(f, w1, Q1), apply_spectral(f, w2, Q2))
    fm = matrix_apply(f, 0.5 * (A + B))
    idx, mins = _first_violation(gm - fm, np.maximum(_maxabs(gm), _maxabs(fm)))
    if idx is None:
        return None
    return MatrixWitness(idx, A[idx], B[idx], 0.5, float(mins[idx]))


# ---------------------------------------------------------------------------
# Loewner matrices
# ---------------------------------------------------------------------------


def loewner_matrix(h, points: Sequence[float]) -> np.ndarray:
    """Divided-difference matrix of ``h`` with ``h'`` on the diagonal."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or len(np.unique(x)) != x.size:
        raise ValueError("points must be distinct")
    hx = np.asarray(h(x), dtype=float)
    dx = x[:, None] - x[None, :]
    same = dx == 0
    L = (hx[:, None] - hx[None, :]) / np.where(same, 1.0, dx)
    L[np.diag_indices(x.size)] = np.asarray(h.derivative(x), dtype=float)
    return as_sym(L)


def monotone_psd_check(h, points: Sequence[float]) -> tuple[float, bool]:
    """Minimum eigenvalue of the Loewner matrix of ``h`` and whether it is PSD."""
    L = loewner_matrix(h, points)
    m = float(min_eig(L))
    return m, m >= -LOEWNER_MARGIN * max(float(np.max(np.abs(L))), 1e-300)


@dataclass(frozen=True)
class DividedSlope:
    """``h(x) = (f(x) - f(alpha)) / (x - alpha)`` with its derivative."""

    f: object
    alpha: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.f(x) - self.f(self.alpha)) / (x - self.alpha)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.alpha
        return (self.f.derivative(x) * d - (self.f(x) - self.f(self.alpha))) / (d * d)


def loewner_psd_check(f, alpha: float, points: Sequence[float]) -> tuple[float, bool]:
    """Loewner test of the operator monotone slope function of ``f`` at ``alpha``."""
    pts = np.asarray(points, dtype=float)
    if not 2 <= pts.size <= 12:
        raise ValueError("need between 2 and 12 points")
    if len(np.unique(pts)) != pts.size:
        raise ValueError("points must be distinct")
    if np.any(pts == alpha):
        raise ValueError("points must differ from alpha")
    return monotone_psd_check(DividedSlope(f, float(alpha)), pts)
