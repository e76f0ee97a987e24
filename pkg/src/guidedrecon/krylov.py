"""Conjugate gradient for self-adjoint positive semidefinite operators.

Started from ``x0 = 0`` on a consistent singular system, CG stays in the range
of the operator and converges to the minimum-norm solution. An optional domain
projector ``D`` confines the iteration to a subspace: the residual, search
direction and operator output are re-projected by ``D`` every iteration so
round-off cannot drift out of the domain.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, NumericalBreakdownError
from .signal import LinearOperator, as_vector

__all__ = ["CgParams", "CgStats", "cg_solve", "count_solves", "SolveCounter"]


@dataclass(frozen=True)
class CgParams:
    tol: float = 1e-8
    max_iter: int = 200
    domain_projector: Optional[LinearOperator] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def with_domain(self, projector: Optional[LinearOperator]) -> "CgParams":
        return CgParams(self.tol, self.max_iter, projector)


@dataclass
class CgStats:
    iterations: int
    final_relative_residual: float
    residual_history: list = field(default_factory=list)
    converged: bool = False


class SolveCounter:
    def __init__(self):
        self.count = 0


_active_counters = contextvars.ContextVar("guidedrecon_solve_counters", default=())


@contextlib.contextmanager
def count_solves():
    """Count :func:`cg_solve` invocations made inside the ``with`` block.

    >>> with count_solves() as counter:
    ...     pass
    >>> counter.count
    0
    """
    counter = SolveCounter()
    token = _active_counters.set(_active_counters.get() + (counter,))
    try:
        yield counter
    finally:
        _active_counters.reset(token)


def _check_finite(iteration, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalBreakdownError(iteration)


def cg_solve(A: LinearOperator, b, x0=None, params: CgParams = CgParams()):
    """Solve ``A x = b`` by conjugate gradients.

    Args:
        A: self-adjoint PSD operator (on the range of ``params.domain_projector``
            when one is given).
        b: right-hand side; should lie in the range of ``A``.
        x0: initial guess, zero by default. With a domain projector it must
            already lie in the domain.
        params: tolerance on ``||A x - b|| / ||b||``, iteration cap and optional
            domain projector.

    Returns:
        ``(x, stats)``. Hitting ``max_iter`` or a curvature breakdown is not an
        error; it returns the current iterate with ``stats.converged = False``.

    Raises:
        DimensionError: if ``b`` or ``x0`` do not match ``A.dim``.
        NumericalBreakdownError: if NaN/Inf appear.
    """
    for counter in _active_counters.get():
        counter.count += 1

    n = A.dim
    b = as_vector(b, n).copy()
    D = params.domain_projector
    if D is not None and D.dim != n:
        raise DimensionError(f"domain projector dim {D.dim} does not match {n}")
    if x0 is None:
        x = np.zeros(n)
    else:
        x = as_vector(x0, n).copy()
        if D is not None:
            x_norm = np.linalg.norm(x)
            if x_norm > 0 and np.linalg.norm(D(x) - x) > params.tol * x_norm:
                raise ValueError("x0 does not lie in the range of the domain projector")
    _check_finite(0, b, x)

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return x, CgStats(0, 0.0, [0.0], True)

    r = b - A(x)
    if D is not None:
        r = D(r)
    _check_finite(0, r)
    rr = float(np.dot(r, r))
    history = [np.sqrt(rr) / b_norm]
    if history[-1] <= params.tol:
        return x, CgStats(0, history[-1], history, True)

    p = r.copy()
    converged = False
    it = 0
    while it < params.max_iter:
        Ap = A(p)
        if D is not None:
            Ap = D(Ap)
        _check_finite(it + 1, Ap)
        pAp = float(np.dot(p, Ap))
        if pAp <= 0.0:
            # A is PSD: zero or negative curvature only comes from round-off
            # or a right-hand side outside the range of A
            break
        step = rr / pAp
        x = x + step * p
        r = r - step * Ap
        if D is not None:
            r = D(r)
        _check_finite(it + 1, x, r)
        rr_new = float(np.dot(r, r))
        it += 1
        history.append(np.sqrt(rr_new) / b_norm)
        if history[-1] <= params.tol:
            converged = True
            break
        p = r + (rr_new / rr) * p
        if D is not None:
            p = D(p)
        rr = rr_new

    return x, CgStats(it, history[-1], history, converged)
