"""Fixed points, linearization and spectra of the regime Jacobians."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import RegimeSystem
from .errors import DimensionError, EmptyWordError, NoUniqueFixedPoint, NumericalError
from .operators import AffineOperator, NonSmoothWarning, Operator, as_state, fd_jacobian

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100
MAX_HALVINGS = 30


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    point: np.ndarray
    residual: float
    converged: bool
    iterations: int
    method: str = "newton"
    residuals: tuple = ()  # per regime, common fixed points only
    worst_regime: int | None = None


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple  # complex, sorted by decreasing modulus
    spectral_radius: float

    def as_pairs(self):
        return [[z.real, z.imag] for z in self.eigenvalues]


@dataclass(frozen=True, eq=False)
class LocalLinearization:
    point: np.ndarray
    matrices: tuple
    spectra: tuple
    labels: tuple
    nonsmooth: tuple = ()

    def index(self, regime) -> int:
        if isinstance(regime, (int, np.integer)) and not isinstance(regime, bool):
            if not 0 <= regime < len(self.matrices):
                raise IndexError(f"regime index {regime} out of range")
            return int(regime)
        return self.labels.index(regime)

    def matrix(self, regime) -> np.ndarray:
        return self.matrices[self.index(regime)]

    def linear_system(self) -> RegimeSystem:
        """Affine system x -> x* + A_s (x - x*) for each regime."""
        ops = tuple(AffineOperator.about(A, self.point) for A in self.matrices)
        return RegimeSystem(ops, self.labels)


# -- fixed points -----------------------------------------------------------


def _inf_norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _residual(op, x):
    return _inf_norm(op.apply(x) - x)


def fixed_point(op: Operator, x_init=None, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> FixedPointResult:
    """Solve F(x) = x.

    Affine maps use the closed form (I - A)^{-1} c. Everything else runs a
    damped Newton iteration on F(x) - x, halving the step until the residual
    decreases.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = op.dimension
    if isinstance(op, AffineOperator):
        M = np.eye(n) - op.matrix
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= n * np.finfo(float).eps * max(sv[0], 1.0):
            raise NoUniqueFixedPoint("I - A is singular: no unique fixed point")
        x = np.linalg.solve(M, op.offset)
        r = _residual(op, x)
        return FixedPointResult(x, r, r <= tol, 0, method="closed-form")

    x = np.zeros(n) if x_init is None else as_state(x_init, n)
    g = op.apply(x) - x
    r = _inf_norm(g)
    it = 0
    while r > tol and it < max_iter:
        it += 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonSmoothWarning)
            J = op.jacobian(x) - np.eye(n)
        try:
            dx = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -g, rcond=None)[0]
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = x + t * dx
            try:
                g_trial = op.apply(trial) - trial
            except NumericalError:
                t *= 0.5
                continue
            r_trial = _inf_norm(g_trial)
            if r_trial < r:
                x, g, r = trial, g_trial, r_trial
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return FixedPointResult(x, r, r <= tol, it)


def common_fixed_point(system: RegimeSystem, x_init=None, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER) -> FixedPointResult:
    """Fixed point of regime 0, then checked against every other regime."""
    n = system.dimension
    x0 = np.zeros(n) if x_init is None else as_state(x_init, n)
    try:
        base = fixed_point(system.operators[0], x0, tol, max_iter)
    except NoUniqueFixedPoint:
        # every point may be fixed (e.g. the identity); keep x_init if it is
        if _residual(system.operators[0], x0) <= tol:
            base = FixedPointResult(x0, _residual(system.operators[0], x0), True, 0, method="initial")
        else:
            raise
    residuals = []
    for op in system.operators:
        try:
            residuals.append(_residual(op, base.point))
        except NumericalError:
            residuals.append(math.inf)
    worst = int(np.argmax(residuals))
    res = residuals[worst]
    return FixedPointResult(base.point, res, base.converged and res <= tol, base.iterations,
                            method=base.method, residuals=tuple(residuals), worst_regime=worst)


# -- spectra ----------------------------------------------------------------


def _sort_key(z):
    return (-abs(z), -z.real, -z.imag)


def eigenvalues(M) -> Spectrum:
    """Eigenvalues by closed form for n <= 2, LAPACK (balanced Hessenberg QR) beyond."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionError(f"eigenvalues need a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix has non-finite entries")
    n = M.shape[0]
    if n == 1:
        vals = [complex(M[0, 0])]
    elif n == 2:
        vals = list(_eig2(M))
    else:
        try:
            vals = [complex(z) for z in np.linalg.eigvals(M)]
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from None
        # LAPACK returns exact conjugates for real input; normalise -0.0 imaginary parts
        vals = [complex(z.real, 0.0) if z.imag == 0 else z for z in vals]
    vals.sort(key=_sort_key)
    return Spectrum(tuple(vals), max(abs(z) for z in vals))


def _eig2(M):
    a, b = M[0]
    c, d = M[1]
    half_tr = 0.5 * (a + d)
    half_diff = 0.5 * (a - d)
    # discriminant written to stay exact for triangular matrices
    disc = half_diff * half_diff + b * c
    if disc >= 0:
        s = math.sqrt(disc)
        big = half_tr + math.copysign(s, half_tr)
        small = half_tr - math.copysign(s, half_tr)
        if s > 0.5 * abs(half_tr) and big != 0:
            # the direct root cancels; recover it from the determinant
            small = (a * d - b * c) / big
        return complex(big), complex(small)
    s = math.sqrt(-disc)
    return complex(half_tr, s), complex(half_tr, -s)


def spectral_radius(M) -> float:
    return eigenvalues(M).spectral_radius


def characteristic_coefficients(M) -> tuple:
    """(trace, determinant) of a 2x2 matrix: lambda^2 - tr lambda + det."""
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise DimensionError("characteristic coefficients are defined here for 2x2 only")
    return float(M[0, 0] + M[1, 1]), float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])


# -- linearization ----------------------------------------------------------


def linearize(system: RegimeSystem, x_star, *, finite_difference: bool = False) -> LocalLinearization:
    """Jacobian of every regime at ``x_star`` plus their spectra.

    ``finite_difference=True`` forces central differences even where a
    closed form exists (used to cross-check the analytic path).
    """
    x_star = as_state(x_star, system.dimension)
    mats, spectra, kinks = [], [], []
    for s, op in enumerate(system.operators):
        try:
            if finite_difference or not op.has_closed_jacobian:
                J, kink = fd_jacobian(op, x_star, return_kink=True)
            else:
                J, kink = op.jacobian(x_star), False
        except NumericalError as exc:
            raise exc.located(regime=system.labels[s]) from None
        J = np.array(J, dtype=float)
        J.setflags(write=False)
        mats.append(J)
        spectra.append(eigenvalues(J))
        kinks.append(bool(kink))
    x_star.setflags(write=False)
    return LocalLinearization(x_star, tuple(mats), tuple(spectra), system.labels, tuple(kinks))


def word_product(lin: LocalLinearization, word) -> np.ndarray:
    """A_{s_k} ... A_{s_0} for ``word`` = (s_0, ..., s_k)."""
    idx = [lin.index(s) for s in word]
    if not idx:
        raise EmptyWordError("word must be non-empty")
    P = lin.matrices[idx[0]].copy()
    for s in idx[1:]:
        P = lin.matrices[s] @ P
    return P


def growth_factor(lin: LocalLinearization, word) -> float:
    """Per-step asymptotic growth under periodic repetition of ``word``."""
    word = list(word)
    rho = spectral_radius(word_product(lin, word))
    return rho ** (1.0 / len(word))


def dominant_eigenvector(M) -> np.ndarray:
    """Unit (2-norm) real eigenvector of the largest-modulus real eigenvalue."""
    M = np.asarray(M, dtype=float)
    vals, vecs = np.linalg.eig(M)
    k = int(np.argmax(np.abs(vals)))
    if abs(vals[k].imag) > 0:
        raise NumericalError("dominant eigenvalue is complex; no real dominant direction")
    v = np.real(vecs[:, k])
    v = v / np.linalg.norm(v)
    return v if v[np.argmax(np.abs(v))] > 0 else -v
