"""Ready-made regime systems."""

from __future__ import annotations

import numpy as np

from .core import RegimeSystem
from .operators import AffineOperator, CollateralOperator, ExpressionMap

COLLATERAL_PARAMS = dict(alpha=0.8, beta=0.8, mu=1.6, nu=1.6, qbar=0.2, bbar=0.2)


def collateral_system(**params) -> RegimeSystem:
    """Two-regime collateral/borrowing system, labels ("N", "C")."""
    p = {**COLLATERAL_PARAMS, **params}
    return RegimeSystem((CollateralOperator("N", **p), CollateralOperator("C", **p)), ("N", "C"))


def collateral_expressions(**params) -> dict:
    """The same two maps written in the expression language."""
    p = {**COLLATERAL_PARAMS, **params}
    a, b, mu, nu, qb, bb = (repr(float(p[k])) for k in ("alpha", "beta", "mu", "nu", "qbar", "bbar"))
    q_star = p["qbar"] / (1 - p["alpha"])
    b_star = p["bbar"] / (1 - p["beta"])
    cq = repr(q_star / (1 + q_star))
    cb = repr(b_star / (1 + b_star))
    return {
        "N": (f"{a}*x0 + {mu}*(x1/(1+x1) - {cb}) + {qb}", f"{b}*x1 + {bb}"),
        "C": (f"{a}*x0 + {qb}", f"{b}*x1 + {nu}*(x0/(1+x0) - {cq}) + {bb}"),
    }


def collateral_expression_system(**params) -> RegimeSystem:
    exprs = collateral_expressions(**params)
    return RegimeSystem(tuple(ExpressionMap.from_strings(exprs[s]) for s in ("N", "C")), ("N", "C"))


def collateral_jacobians(**params):
    """Closed-form (A_N, A_C) at the common fixed point."""
    p = {**COLLATERAL_PARAMS, **params}
    q_star = p["qbar"] / (1 - p["alpha"])
    b_star = p["bbar"] / (1 - p["beta"])
    A_N = np.array([[p["alpha"], p["mu"] / (1 + b_star) ** 2], [0.0, p["beta"]]])
    A_C = np.array([[p["alpha"], 0.0], [p["nu"] / (1 + q_star) ** 2, p["beta"]]])
    return A_N, A_C


def collateral_linear_system(**params) -> RegimeSystem:
    """Affine maps x* + A_s (x - x*) linearizing the collateral system."""
    p = {**COLLATERAL_PARAMS, **params}
    x_star = np.array([p["qbar"] / (1 - p["alpha"]), p["bbar"] / (1 - p["beta"])])
    A_N, A_C = collateral_jacobians(**params)
    return RegimeSystem((AffineOperator.about(A_N, x_star), AffineOperator.about(A_C, x_star)), ("N", "C"))
