"""Propagation operators: evaluation on points or batches, and Jacobians."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import expression as ex
from .errors import DimensionError, NumericalError

FD_REL_STEP = 1e-6
FD_MIN_STEP = 1e-6


class NonSmoothWarning(UserWarning):
    """Finite-difference Jacobian taken across a kink of abs/min/max."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_state(x, n=None) -> np.ndarray:
    """Validate and copy a state vector."""
    v = np.array(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"state must be a non-empty vector, got shape {v.shape}")
    if n is not None and v.size != n:
        raise DimensionError(f"state has dimension {v.size}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise NumericalError("state has non-finite components",
                             component=int(np.flatnonzero(~np.isfinite(v))[0]))
    return v


def _check_finite(y, what):
    bad = ~np.isfinite(y)
    if np.any(bad):
        comp = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"{what} produced a non-finite value", component=comp)
    return y


class Operator:
    """Base class. Subclasses implement ``dimension`` and ``apply_batch``."""

    dimension: int
    kind = "operator"
    has_closed_jacobian = False

    def __call__(self, x):
        return self.apply(x)

    def apply(self, x) -> np.ndarray:
        x = as_state(x, self.dimension)
        y = self.apply_batch(x[None, :])[0]
        return _check_finite(y, self.kind)

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x) -> np.ndarray:
        return fd_jacobian(self, x)

    def is_affine(self) -> bool:
        return False


def fd_steps(x):
    return np.maximum(FD_MIN_STEP, FD_REL_STEP * np.abs(x))


def fd_jacobian(op: Operator, x, *, return_kink=False):
    """Central-difference Jacobian with per-coordinate step max(1e-6, 1e-6|x_i|)."""
    x = as_state(x, op.dimension)
    n = x.size
    h = fd_steps(x)
    probes = np.empty((2 * n, n))
    for i in range(n):
        probes[2 * i] = x
        probes[2 * i + 1] = x
        probes[2 * i, i] += h[i]
        probes[2 * i + 1, i] -= h[i]
    Y = op.apply_batch(probes)
    bad = ~np.isfinite(Y)
    if np.any(bad):
        row, comp = np.argwhere(bad)[0]
        raise NumericalError(
            f"{op.kind} evaluation failed at a finite-difference probe along x{row // 2}",
            component=int(comp),
        )
    J = np.empty((n, n))
    for i in range(n):
        J[:, i] = (Y[2 * i] - Y[2 * i + 1]) / (2.0 * h[i])
    kink = op.has_kink(np.vstack([x[None, :], probes])) if hasattr(op, "has_kink") else False
    if kink and not return_kink:
        warnings.warn(f"{op.kind}: Jacobian taken across a non-smooth point", NonSmoothWarning,
                      stacklevel=2)
    if return_kink:
        return J, kink
    return J


@dataclass(frozen=True, eq=False)
class AffineOperator(Operator):
    """x -> A x + c."""

    matrix: np.ndarray
    offset: np.ndarray
    kind = "affine"
    has_closed_jacobian = True

    def __post_init__(self):
        A = _frozen(self.matrix)
        c = _frozen(self.offset)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"affine matrix must be square, got shape {A.shape}")
        if c.shape != (A.shape[0],):
            raise DimensionError(f"offset shape {c.shape} does not match matrix {A.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise NumericalError("affine operator has non-finite coefficients")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", c)

    @classmethod
    def linear(cls, A):
        A = np.asarray(A, dtype=float)
        return cls(A, np.zeros(A.shape[0]))

    @classmethod
    def about(cls, A, x_star):
        """x -> x* + A (x - x*)."""
        A = np.asarray(A, dtype=float)
        x_star = np.asarray(x_star, dtype=float)
        return cls(A, x_star - A @ x_star)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def apply_batch(self, X):
        with np.errstate(all="ignore"):
            return X @ self.matrix.T + self.offset

    def jacobian(self, x):
        as_state(x, self.dimension)
        return self.matrix.copy()

    def is_affine(self):
        return True

    def __repr__(self):
        return f"AffineOperator(matrix={self.matrix.tolist()}, offset={self.offset.tolist()})"


@dataclass(frozen=True, eq=False)
class CollateralOperator(Operator):
    """Two-state collateral/borrowing-capacity map for one financial regime.

    State is (q, b). Side "N" lets borrowing capacity feed collateral values;
    side "C" lets collateral values feed borrowing capacity. The nonlinear
    feedback is centred at q* = qbar/(1-alpha), b* = bbar/(1-beta), so both
    sides share that fixed point.
    """

    side: str
    alpha: float = 0.8
    beta: float = 0.8
    mu: float = 1.6
    nu: float = 1.6
    qbar: float = 0.2
    bbar: float = 0.2
    kind = "collateral"
    has_closed_jacobian = True

    def __post_init__(self):
        if self.side not in ("N", "C"):
            raise ValueError(f"side must be 'N' or 'C', got {self.side!r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("qbar", "bbar"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("mu", "nu"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")

    dimension = 2

    @property
    def q_star(self):
        return self.qbar / (1.0 - self.alpha)

    @property
    def b_star(self):
        return self.bbar / (1.0 - self.beta)

    def fixed_point(self):
        return np.array([self.q_star, self.b_star])

    def apply_batch(self, X):
        q, b = X[:, 0], X[:, 1]
        with np.errstate(all="ignore"):
            if self.side == "N":
                bs = self.b_star
                q1 = self.alpha * q + self.mu * (b / (1 + b) - bs / (1 + bs)) + self.qbar
                b1 = self.beta * b + self.bbar
            else:
                qs = self.q_star
                q1 = self.alpha * q + self.qbar
                b1 = self.beta * b + self.nu * (q / (1 + q) - qs / (1 + qs)) + self.bbar
        return np.column_stack([q1, b1])

    def jacobian(self, x):
        q, b = as_state(x, 2)
        if self.side == "N":
            if b == -1.0:
                raise NumericalError("collateral Jacobian undefined at b = -1", component=0)
            return np.array([[self.alpha, self.mu / (1 + b) ** 2], [0.0, self.beta]])
        if q == -1.0:
            raise NumericalError("collateral Jacobian undefined at q = -1", component=1)
        return np.array([[self.alpha, 0.0], [self.nu / (1 + q) ** 2, self.beta]])


@dataclass(frozen=True, eq=False)
class ExpressionMap(Operator):
    """One parsed expression per output component."""

    trees: tuple
    texts: tuple = field(default=())
    kind = "expression"

    def __post_init__(self):
        trees = tuple(self.trees)
        if not trees:
            raise DimensionError("expression map needs at least one component")
        n = len(trees)
        for i, t in enumerate(trees):
            if ex.max_variable(t) >= n:
                raise DimensionError(f"component {i} references x{ex.max_variable(t)} but dimension is {n}")
        object.__setattr__(self, "trees", trees)
        texts = tuple(self.texts) or tuple(ex.to_text(t) for t in trees)
        object.__setattr__(self, "texts", texts)

    @classmethod
    def from_strings(cls, texts):
        texts = tuple(texts)
        n = len(texts)
        return cls(tuple(ex.parse_expression(t, n) for t in texts), texts)

    @property
    def dimension(self):
        return len(self.trees)

    def apply_batch(self, X):
        return np.column_stack([ex.evaluate(t, X) for t in self.trees])

    def apply(self, x):
        x = as_state(x, self.dimension)
        y = self.apply_batch(x[None, :])[0]
        bad = ~np.isfinite(y)
        if np.any(bad):
            comp = int(np.flatnonzero(bad)[0])
            raise NumericalError(
                f"expression {self.texts[comp]!r} is undefined or overflows at x={x.tolist()}",
                component=comp,
            )
        return y

    def has_kink(self, X):
        flags = []
        for t in self.trees:
            ex.evaluate(t, X, flags)
        return any(flags)


@dataclass(frozen=True, eq=False)
class ComposedOperator(Operator):
    """Functional composition; ``factors`` are applied first to last."""

    factors: tuple
    kind = "composition"

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("composition needs at least one factor")
        n = factors[0].dimension
        if any(f.dimension != n for f in factors):
            raise DimensionError("composed operators disagree on dimension")
        object.__setattr__(self, "factors", factors)

    @property
    def dimension(self):
        return self.factors[0].dimension

    @property
    def has_closed_jacobian(self):
        return all(f.has_closed_jacobian for f in self.factors)

    def apply_batch(self, X):
        for f in self.factors:
            X = f.apply_batch(X)
        return X

    def apply(self, x):
        for f in self.factors:
            x = f.apply(x)
        return x

    def jacobian(self, x):
        # chain rule along the intermediate points
        x = as_state(x, self.dimension)
        J = np.eye(self.dimension)
        for f in self.factors:
            J = f.jacobian(x) @ J
            x = f.apply(x)
        return J

    def has_kink(self, X):
        for f in self.factors:
            if hasattr(f, "has_kink") and f.has_kink(X):
                return True
            X = f.apply_batch(X)
        return False


def apply(op: Operator, x) -> np.ndarray:
    return op.apply(x)


def jacobian(op: Operator, x) -> np.ndarray:
    return op.jacobian(x)
