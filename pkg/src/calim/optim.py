"""Deterministic full-batch gradient descent with Armijo backtracking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    fun0: float
    grad_norm: float
    iterations: int
    converged: bool


def _projected_grad_norm(x, g, project):
    if project is None:
        return float(np.linalg.norm(g))
    # Gradient mapping with unit step; equals ||g|| away from active bounds.
    return float(np.linalg.norm(x - project(x - g)))


def gradient_descent(
    fun: Objective,
    x0,
    *,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    gtol: float = 1e-7,
    max_iter: int = 10_000,
    c1: float = 1e-4,
    step0: float = 1.0,
    min_step: float = 1e-20,
) -> OptimResult:
    """Minimize ``fun`` starting from ``x0``.

    ``fun`` returns ``(value, gradient)``. Each iteration starts from a
    Barzilai-Borwein trial step (the previous accepted step doubled when the
    curvature estimate is unusable) and halves it until the Armijo
    sufficient-decrease condition holds, so the objective never increases.
    ``project`` maps a point back onto the feasible box, if any.

    Stops when the (projected) gradient norm drops below ``gtol``, after
    ``max_iter`` iterations, or when no decreasing step can be found.
    """
    x = np.array(x0, dtype=float)
    if project is not None:
        x = project(x)
    f, g = fun(x)
    f0 = f
    step = step0
    gnorm = _projected_grad_norm(x, g, project)
    it = 0
    bb = None
    while gnorm >= gtol and it < max_iter:
        t = bb if bb is not None else min(2.0 * step, 1e6)
        while True:
            x_new = x - t * g
            if project is not None:
                x_new = project(x_new)
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f - c1 * float(np.dot(g, x - x_new)):
                break
            t *= 0.5
            if t < min_step:
                return OptimResult(x, f, f0, gnorm, it, False)
        step = t
        s_k, y_k = x_new - x, g_new - g
        sy = float(np.dot(s_k, y_k))
        bb = min(float(np.dot(s_k, s_k)) / sy, 1e6) if sy > 0 else None
        x, f, g = x_new, f_new, g_new
        gnorm = _projected_grad_norm(x, g, project)
        it += 1
    return OptimResult(x, f, f0, gnorm, it, gnorm < gtol)
