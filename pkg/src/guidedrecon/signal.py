"""Ambient-space primitives: signals, inner products and projector operators.

Operators are action-only: a :class:`LinearOperator` wraps a function acting on
flat float64 vectors and never materializes a matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError

__all__ = [
    "Signal",
    "LinearOperator",
    "ProjectorReport",
    "as_vector",
    "inner_product",
    "norm",
    "complement_apply",
    "identity_operator",
    "zero_operator",
    "verify_projector",
]


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a flat float64 array, checking its length if ``dim`` is given."""
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected length {dim}, got {v.size}")
    return v


@dataclass(frozen=True)
class Signal:
    """A real signal on a ``height x width`` grid, stored flat in row-major order."""

    values: np.ndarray
    shape: tuple = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        shape = self.shape
        if shape is None:
            shape = v.shape if v.ndim == 2 else (1, v.size)
        shape = tuple(int(s) for s in shape)
        v = v.reshape(-1)
        if len(shape) != 2 or shape[0] * shape[1] != v.size:
            raise DimensionError(f"shape {shape} does not match {v.size} values")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def from_image(cls, image) -> "Signal":
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 2:
            raise DimensionError("image must be two-dimensional")
        return cls(image, image.shape)

    @property
    def size(self) -> int:
        return self.values.size

    def image(self) -> np.ndarray:
        return self.values.reshape(self.shape)

    def with_values(self, values) -> "Signal":
        return Signal(values, self.shape)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __len__(self):
        return self.values.size


def inner_product(a, b) -> float:
    a = as_vector(a)
    b = as_vector(b)
    if a.size != b.size:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.dot(a, b))


def norm(a) -> float:
    return float(np.linalg.norm(as_vector(a)))


@dataclass(frozen=True)
class LinearOperator:
    """Matrix-free linear map on R^dim.

    ``apply`` receives a flat float64 array of length ``dim`` and must return
    one of the same length. Calling the operator validates both.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    dim: int
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        y = np.asarray(self.apply(as_vector(x, self.dim)), dtype=np.float64).reshape(-1)
        if y.size != self.dim:
            raise DimensionError(f"operator {self.label!r} returned length {y.size}, expected {self.dim}")
        return y

    def complement(self) -> "LinearOperator":
        """The operator ``x -> x - P(x)``; the orthogonal complement projector when P is one."""
        return LinearOperator(lambda x: x - self.apply(x), self.dim, _complement_label(self.label))

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"cannot compose dims {self.dim} and {other.dim}")
        return LinearOperator(lambda x: self.apply(other.apply(x)), self.dim, self.label + other.label)


def _complement_label(label: str) -> str:
    if label.endswith("⊥") and len(label) == 2:
        return label[0]
    return f"{label}⊥" if len(label) <= 1 else f"({label})⊥"


def identity_operator(dim: int, label: str = "I") -> LinearOperator:
    return LinearOperator(lambda x: x.copy(), dim, label)


def zero_operator(dim: int, label: str = "0") -> LinearOperator:
    return LinearOperator(lambda x: np.zeros_like(x), dim, label)


def complement_apply(P: LinearOperator, x) -> np.ndarray:
    """Return ``x - P(x)``."""
    x = as_vector(x)
    if x.size != P.dim:
        raise DimensionError(f"operator dim {P.dim} does not match signal length {x.size}")
    return x - P(x)


@dataclass(frozen=True)
class ProjectorReport:
    max_idempotency_residual: float
    max_self_adjoint_residual: float
    probes: int
    label: str = field(default="", compare=False)

    def passes(self, tol: float) -> bool:
        return self.max_idempotency_residual <= tol and self.max_self_adjoint_residual <= tol


def verify_projector(P: LinearOperator, probes: int, seed: int) -> ProjectorReport:
    """Probe ``P`` with random unit vectors for idempotency and self-adjointness.

    Reports the largest ``||P(P(x)) - P(x)||`` and ``|<P(x), y> - <x, P(y)>|``
    over ``probes`` independent pairs ``(x, y)``.
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    idem = 0.0
    adj = 0.0
    for _ in range(probes):
        x = rng.standard_normal(P.dim)
        y = rng.standard_normal(P.dim)
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        px = P(x)
        py = P(y)
        idem = max(idem, float(np.linalg.norm(P(px) - px)))
        adj = max(adj, abs(float(np.dot(px, y) - np.dot(x, py))))
    return ProjectorReport(idem, adj, probes, P.label)
