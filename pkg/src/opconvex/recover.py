"""Fit canonical data ``(f1, d1, nu)`` with a discrete ``nu`` to point samples.

The model is ``f1 + d1 (x - 1) + sum_j m_j K(x, lambda_j)`` with ``f1 >= 0``
and ``m_j >= 0``.  A non-negative least-squares solve on a fixed grid of
``lambda`` gives a starting point.  Atom positions are then refined off the grid by
variable projection, since an atom between two nodes is poorly approximated
by non-negative mixtures of its neighbours; a conditional-gradient step adds
the grid atom that most decreases the residual when the fit stalls.  Only function values are promised, not the measure itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, nnls

from .measure import INF, FiniteMeasure, as_param
from .ocfun import NotInConeError, OcFunction

MIN_SAMPLES = 8
MAX_ITER = 100_000
MAX_ROUNDS = 10
REFINE_NFEV = 500
MERGE_LOG = 1e-9
EXACT_RMS = 1e-15
DEFAULT_TOL = 1e-8
GRID_RANGE = (1e-3, 1e3)
GRID_SIZE = 200


class RecoveryError(RuntimeError):
    """The solver did not reach the requested KKT residual."""


@dataclass(frozen=True)
class SampleSet:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("x and y differ in length")
        if x.size < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("samples must be finite")
        if np.any(x <= 0):
            raise ValueError("sample points must be positive")
        if np.any(y < 0):
            raise ValueError("sample values must be non-negative")
        order = np.argsort(x)
        x, y = x[order], y[order]
        if np.any(np.diff(x) == 0):
            raise ValueError("sample points must be distinct")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_function(cls, f, x) -> "SampleSet":
        x = np.asarray(x, dtype=float)
        return cls(x, np.asarray(f(x), dtype=float))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "SampleSet":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])


@dataclass(frozen=True)
class FitResult:
    f: OcFunction
    rms_residual: float
    kkt_residual: float
    refined: bool = False


def default_lambda_grid(size: int = GRID_SIZE) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(*GRID_RANGE, size), [INF]])


def _kernel(x: np.ndarray, lam: float) -> np.ndarray:
    if lam == INF:
        return (x - 1.0) ** 2
    return (x - 1.0) ** 2 * (2.0 + lam) / (x + lam)


def _kernel_dlog(x: np.ndarray, lam: float) -> np.ndarray:
    # derivative of the kernel in log(lambda)
    return lam * (x - 1.0) ** 2 * (x - 2.0) / (x + lam) ** 2


def _design(x: np.ndarray, lams: Sequence[float]) -> np.ndarray:
    cols = [np.ones_like(x), x - 1.0, 1.0 - x] + [_kernel(x, lam) for lam in lams]
    return np.column_stack(cols)


def _kernel_matrix(x: np.ndarray, lams: Sequence[float]) -> np.ndarray:
    return np.column_stack([_kernel(x, lam) for lam in lams])


def _solve_nnls(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    z, _ = nnls(A / norms, y, maxiter=MAX_ITER)
    return z / norms


def _kkt(A: np.ndarray, coef: np.ndarray, y: np.ndarray) -> float:
    """Largest violation of the NNLS optimality conditions, scale free."""
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    grad = (A / norms).T @ (A @ coef - y) / max(np.linalg.norm(y), 1e-300)
    active = coef > 0
    viol = np.where(active, np.abs(grad), np.maximum(-grad, 0.0))
    return float(np.max(viol))


def _varpro(x, y, fixed, u0, bounds):
    """Optimize log-positions of sliding atoms; masses come from an inner NNLS.

    The Jacobian is Kaufman's approximation: the derivative of each active
    column projected onto the orthogonal complement of the active columns.
    """
    nf = len(fixed)

    def inner(u):
        A = _design(x, list(fixed) + list(np.exp(u)))
        return A, _solve_nnls(A, y)

    def resid(u):
        A, c = inner(u)
        return A @ c - y

    def jac(u):
        A, c = inner(u)
        Q, _ = np.linalg.qr(A[:, c > 0])
        cols = []
        for k, uk in enumerate(u):
            v = c[3 + nf + k] * _kernel_dlog(x, math.exp(uk))
            cols.append(v - Q @ (Q.T @ v))
        return np.column_stack(cols)

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    u0 = np.clip(np.asarray(u0, dtype=float), lo, hi)
    sol = least_squares(resid, u0, jac=jac, bounds=(np.full(u0.size, lo), np.full(u0.size, hi)),
                        method="trf", x_scale="jac", ftol=1e-15, xtol=1e-15, gtol=1e-15,
                        max_nfev=REFINE_NFEV)
    A, c = inner(sol.x)
    return sol.x, c


def _merge_positions(u: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Drop massless atoms and collapse positions closer than MERGE_LOG."""
    u = np.sort(u[masses > 0])
    if u.size == 0:
        return u
    keep = np.concatenate([[True], np.diff(u) > MERGE_LOG])
    return u[keep]


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r * r)))


def _gradient_candidate(x, r, grid):
    """Grid position whose kernel most decreases the squared residual, or None."""
    K = _kernel_matrix(x, grid)
    g = K.T @ r / np.maximum(np.linalg.norm(K, axis=0), 1e-300)
    j = int(np.argmin(g))
    return (float(grid[j]), float(-g[j])) if g[j] < 0 else None


def fit_measure(samples: SampleSet, lambda_grid: Optional[Sequence] = None,
                tol: float = DEFAULT_TOL, refine: bool = True, rounds: int = MAX_ROUNDS) -> FitResult:
    """Least-squares fit of cone canonical data to ``samples``.

    Raises :class:`RecoveryError` when the KKT residual exceeds ``tol`` or the
    fitted function fails the cone checks.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = default_lambda_grid() if lambda_grid is None else np.array([as_param(v) for v in lambda_grid])
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    grid = np.unique(grid)
    x, y = samples.x, samples.y
    A = _design(x, grid)
    coef = _solve_nnls(A, y)
    kkt = _kkt(A, coef, y)
    f1, d1 = float(coef[0]), float(coef[1] - coef[2])
    masses = coef[3:]
    atoms = [(float(lam), float(m)) for lam, m in zip(grid, masses) if m > 0]
    rms = _rms(A @ coef - y)
    refined = False

    finite = grid[(grid > 0) & (grid < INF)]
    if refine and finite.size and rms > 0:
        fixed = [float(lam) for lam in grid if lam in (0.0, INF)]
        u = np.log(finite[masses[(grid > 0) & (grid < INF)] > 0])
        best = None
        for _ in range(rounds):
            try:
                u, c = _varpro(x, y, fixed, u, (float(finite.min()), float(finite.max())))
            except (ValueError, np.linalg.LinAlgError):
                break
            lams = fixed + list(np.exp(u))
            r = _design(x, lams) @ c - y
            if best is None or _rms(r) < best[0]:
                best = (_rms(r), lams, c)
            if best[0] <= EXACT_RMS * max(float(np.max(np.abs(y))), 1e-300):
                break
            cand = _gradient_candidate(x, r, finite)
            if cand is None:
                break
            u = np.append(_merge_positions(u, c[3 + len(fixed):]), math.log(cand[0]))
        if best is not None and best[0] < rms:
            rms, lams, c = best
            f1, d1 = float(c[0]), float(c[1] - c[2])
            atoms = [(float(lam), float(m)) for lam, m in zip(lams, c[3:]) if m > 0]
            refined = True
            # optimality is judged on the refined atoms together with the grid columns
            Ar = np.column_stack([_design(x, lams), _kernel_matrix(x, grid)])
            kkt = _kkt(Ar, np.concatenate([c, np.zeros(grid.size)]), y)
    if kkt > tol:
        raise RecoveryError(f"KKT residual {kkt:.3g} above tolerance {tol:.3g}")

    nu = FiniteMeasure(tuple((lam, m) for lam, m in atoms if m > 0))
    try:
        f = OcFunction(float(f1), float(d1), nu)
    except NotInConeError as exc:
        raise RecoveryError(f"fitted function leaves the cone: {exc}") from exc
    return FitResult(f, rms, kkt, refined)
