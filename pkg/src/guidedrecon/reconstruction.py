"""Reconstructions from an orthogonal projection ``S f`` guided by a subspace ``T``.

Only the actions of the orthogonal projectors ``S`` and ``T`` are needed.
The consistent reconstruction ``f_c`` is the point of the sample-consistent
plane ``S f + range(S)^perp`` nearest to ``range(T)``; the generalized
reconstruction ``f_g = T f_c`` is the point of ``range(T)`` nearest to that
plane. The segment between them is the reconstruction set, and its interior
points coincide with the regularized solutions of

    min ||S g - S f||^2 + rho ||g - T g||^2,   rho = (1 - alpha) / alpha.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DegenerateSetWarning, DimensionError, DomainError
from .krylov import CgParams, cg_solve
from .signal import LinearOperator, as_vector, verify_projector

__all__ = [
    "SubspaceBasis",
    "ReconstructionProblem",
    "ReconstructionSet",
    "consistent_reconstruction",
    "generalized_g1",
    "generalized_g2",
    "generalized_g3",
    "minimax_regret",
    "reconstruction_set",
    "alpha_combine",
    "regularized_reconstruction",
    "rho_alpha_convert",
    "alpha_to_rho",
    "rho_to_alpha",
    "alpha_from_noise",
]

PROJECTOR_TOL = 1e-10
# right-hand sides below this fraction of ||f_du|| are projector round-off
RHS_FLOOR = 1e-12


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal coordinates for ``range(T)``.

    ``analysis`` maps R^n to the ``coeff_dim`` coefficients and ``synthesis``
    maps them back, so that ``synthesis(analysis(x)) == T(x)``.
    """

    analysis: Callable[[np.ndarray], np.ndarray]
    synthesis: Callable[[np.ndarray], np.ndarray]
    coeff_dim: int


@dataclass(frozen=True)
class ReconstructionProblem:
    S: LinearOperator
    T: LinearOperator
    f_du: np.ndarray
    basis: Optional[SubspaceBasis] = None
    validate: bool = True

    def __post_init__(self):
        f_du = as_vector(self.f_du).copy()
        f_du.setflags(write=False)
        object.__setattr__(self, "f_du", f_du)
        if self.S.dim != self.T.dim or self.S.dim != f_du.size:
            raise DimensionError(
                f"S has dim {self.S.dim}, T has dim {self.T.dim}, measurement has length {f_du.size}"
            )
        if self.validate:
            self.check()

    @property
    def dim(self) -> int:
        return self.S.dim

    def check(self, probes: int = 3, seed: int = 0):
        """Raise ConfigurationError if the problem violates its assumptions."""
        for P in (self.S, self.T):
            report = verify_projector(P, probes, seed)
            if not report.passes(PROJECTOR_TOL):
                raise ConfigurationError(f"{P.label or 'operator'} is not an orthogonal projector: {report}")
        scale = max(float(np.linalg.norm(self.f_du)), 1.0)
        if np.linalg.norm(self.S(self.f_du) - self.f_du) > PROJECTOR_TOL * scale:
            raise ConfigurationError("measurement does not lie in the sampling subspace")
        if self.basis is not None:
            rng = np.random.default_rng(seed)
            for _ in range(probes):
                x = rng.standard_normal(self.dim)
                x /= np.linalg.norm(x)
                roundtrip = as_vector(self.basis.synthesis(self.basis.analysis(x)), self.dim)
                if np.linalg.norm(roundtrip - self.T(x)) > 1e-8:
                    raise ConfigurationError("basis synthesis after analysis does not reproduce T")


@dataclass(frozen=True)
class ReconstructionSet:
    f_c: np.ndarray
    f_g: np.ndarray

    @property
    def gap(self) -> float:
        return float(np.linalg.norm(self.f_c - self.f_g))

    def point(self, alpha: float) -> np.ndarray:
        return alpha_combine(self, alpha)


def consistent_reconstruction(p: ReconstructionProblem, cg: CgParams = CgParams()):
    """Sample-consistent reconstruction minimizing the energy outside ``T``.

    Solves ``S^perp T^perp x = -S^perp T^perp f_du`` for ``x`` in ``range(S)^perp``
    by CG from zero (so ties go to the minimum-norm ``x``) and returns
    ``(f_du + x, stats)``.
    """
    S_perp = p.S.complement()
    T_perp = p.T.complement()
    A = LinearOperator(lambda x: S_perp.apply(T_perp.apply(x)), p.dim, "S⊥T⊥|S⊥")
    b = -A(p.f_du)
    if np.linalg.norm(b) <= RHS_FLOOR * np.linalg.norm(p.f_du):
        b = np.zeros_like(b)
    x, stats = cg_solve(A, b, None, cg.with_domain(S_perp))
    return p.f_du + x, stats


def generalized_g1(p: ReconstructionProblem, cg: CgParams = CgParams()):
    """Generalized reconstruction solved in the coefficient space of ``T``.

    Solves ``B* S B y = B* f_du`` where ``B`` is the basis synthesis, then
    returns ``B y``.
    """
    if p.basis is None:
        raise ConfigurationError("generalized_g1 needs an analysis/synthesis basis for T")
    basis = p.basis
    m = basis.coeff_dim

    def gram(y):
        return as_vector(basis.analysis(p.S.apply(as_vector(basis.synthesis(y), p.dim))), m)

    A = LinearOperator(gram, m, "B*SB")
    b = as_vector(basis.analysis(p.f_du), m)
    y, stats = cg_solve(A, b, None, cg.with_domain(None))
    return as_vector(basis.synthesis(y), p.dim), stats


def generalized_g2(p: ReconstructionProblem, cg: CgParams = CgParams()):
    """Generalized reconstruction from ``T S T f = T f_du`` with CG confined to ``range(T)``."""
    T = p.T
    A = LinearOperator(lambda x: T.apply(p.S.apply(T.apply(x))), p.dim, "TST")
    x, stats = cg_solve(A, T(p.f_du), None, cg.with_domain(T))
    return x, stats


def generalized_g3(T: LinearOperator, f_c) -> np.ndarray:
    return T(f_c)


def minimax_regret(T: LinearOperator, f_du) -> np.ndarray:
    return T(f_du)


def reconstruction_set(p: ReconstructionProblem, cg: CgParams = CgParams()):
    """Both endpoints from a single solve: ``(ReconstructionSet(f_c, T f_c), stats)``."""
    f_c, stats = consistent_reconstruction(p, cg)
    return ReconstructionSet(f_c, p.T(f_c)), stats


def alpha_combine(rset: ReconstructionSet, alpha: float) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * rset.f_c + (1.0 - alpha) * rset.f_g


def regularized_reconstruction(p: ReconstructionProblem, rho: float, cg: CgParams = CgParams()):
    """Solve ``(S + rho T^perp) g = f_du`` over the whole space."""
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    T_perp = p.T.complement()
    A = LinearOperator(lambda x: p.S.apply(x) + rho * T_perp.apply(x), p.dim, "S+ρT⊥")
    return cg_solve(A, p.f_du, None, cg.with_domain(None))


def alpha_to_rho(alpha: float) -> float:
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    return (1.0 - alpha) / alpha


def rho_to_alpha(rho: float) -> float:
    if not rho >= 0.0:
        raise DomainError(f"rho must be nonnegative, got {rho}")
    return 1.0 / (1.0 + rho)


def rho_alpha_convert(value: float, direction: str) -> float:
    if direction == "alpha_to_rho":
        return alpha_to_rho(value)
    if direction == "rho_to_alpha":
        return rho_to_alpha(value)
    raise ValueError(f"unknown direction {direction!r}")


def alpha_from_noise(noise_energy: float, rset: ReconstructionSet, rule: str = "linear") -> float:
    """Pick a point on the reconstruction set from the noise energy ``||e||``.

    ``linear``: ``alpha = 1 - ||e|| / gap``; ``quadratic``:
    ``alpha = 1 - ||e||^2 / gap^2``. The result is clamped to [0, 1]. A
    collapsed set (zero gap) with nonzero noise gives 0 and a
    :class:`DegenerateSetWarning`.
    """
    if not noise_energy >= 0:
        raise DomainError(f"noise energy must be nonnegative, got {noise_energy}")
    if rule not in ("linear", "quadratic"):
        raise ValueError(f"unknown rule {rule!r}")
    if noise_energy == 0:
        return 1.0
    gap = rset.gap
    if gap == 0:
        warnings.warn("reconstruction set is a single point but noise is nonzero", DegenerateSetWarning)
        return 0.0
    ratio = noise_energy / gap
    if rule == "quadratic":
        ratio = ratio * ratio
    return min(1.0, max(0.0, 1.0 - ratio))
