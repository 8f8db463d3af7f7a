"""
Accelerated gradient descent for the smooth, strongly convex inner problems.
"""

from __future__ import annotations
import typing as t
import logging

from math import sqrt
from typing import NamedTuple

import numpy as np

from ..errors import ProxSolverStalled

_log = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-10
MAX_INNER_ITERATIONS = 100_000

# Objective rises within this relative slack are rounding, not uphill moves
_RESTART_SLACK = 1e-14


class DescentResult(NamedTuple):
    x: np.ndarray
    residual: float
    iterations: int


def accelerated_gradient(
        gradient: t.Callable[[np.ndarray], np.ndarray],
        x0: np.ndarray,
        lipschitz: float,
        strong_convexity: float,
        objective: t.Callable[[np.ndarray], float] | None = None,
        tol: float = GRADIENT_TOLERANCE,
        max_iter: int = MAX_INNER_ITERATIONS
    ) -> DescentResult:
    """Nesterov's method with constant momentum and adaptive restart

    Steps are 1/L from the extrapolated point. Momentum is dropped for one
    step whenever the objective went up, so the objective only decreases
    between restarts. Without an `objective` the restart fires when the
    last move went uphill along the new gradient.

    Args:
        gradient (Callable): Gradient of the objective
        x0 (np.ndarray): Starting point
        lipschitz (float): Smoothness constant L of the objective
        strong_convexity (float): Strong convexity modulus, 0 < mu <= L
        objective (Callable, optional): Objective value, drives the restart test
        tol (float, optional): Stop once the gradient norm is at most tol. Defaults to 1e-10.
        max_iter (int, optional): Iteration budget. Defaults to 100000.

    Raises:
        ProxSolverStalled: If the budget runs out first

    Returns:
        DescentResult: Final point, its gradient norm and the iterations used
    """
    x = np.array(x0, dtype=float, copy=True)
    grad_x = gradient(x)
    residual = float(np.linalg.norm(grad_x))
    if residual <= tol:
        return DescentResult(x, residual, 0)

    step = 1.0 / lipschitz
    root = sqrt(min(strong_convexity / lipschitz, 1.0))
    momentum = (1.0 - root) / (1.0 + root)
    value = objective(x) if objective is not None else 0.0

    y, grad_y = x, grad_x
    for it in range(1, max_iter + 1):
        x_next = y - step * grad_y
        grad_next = gradient(x_next)
        residual = float(np.linalg.norm(grad_next))
        if residual <= tol:
            return DescentResult(x_next, residual, it)

        move = x_next - x
        if objective is not None:
            value_next = float(objective(x_next))
            uphill = value_next > value + _RESTART_SLACK * max(1.0, abs(value))
            value = value_next
        else:
            uphill = float(np.dot(grad_next, move)) > 0.0
        if uphill:
            # restart
            y, grad_y = x_next, grad_next
        else:
            y = x_next + momentum * move
            grad_y = gradient(y)
        x = x_next

    _log.warning("accelerated gradient stalled at residual %.3e", residual)
    raise ProxSolverStalled(residual, max_iter)
