"""Order parameter, all-to-all coupling field and the reduced Jacobian.

Phase vectors may be 1-D (one state) or 2-D (a batch of states, one per
row); the vectorized helpers reduce along the last axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError

# Below this magnitude the centroid direction is rounding noise.
ZERO_ORDER_THRESHOLD = 1e-9


def _phases(x, min_n: int = 2) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] < min_n:
        n = 0 if x.ndim == 0 else x.shape[-1]
        raise DimensionError(f"need at least {min_n} phases, got {n}")
    return x


@dataclass(frozen=True)
class OrderParameter:
    R: float
    psi: Optional[float]

    @property
    def L(self) -> float:
        return self.R * self.R


@dataclass(frozen=True)
class PhaseState:
    """Phases on the zero-mean subspace."""

    x: np.ndarray

    def __post_init__(self):
        x = _phases(self.x)
        if x.ndim != 1:
            raise DimensionError("PhaseState holds a single 1-D phase vector")
        n = x.shape[0]
        if abs(math.fsum(x)) > 1e-10 * n:
            raise ParameterError(f"phases do not sum to zero (sum={math.fsum(x):.3e})")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def grounded(cls, theta) -> "PhaseState":
        """Project raw phases onto the zero-mean subspace."""
        theta = _phases(theta)
        return cls(theta - theta.mean())

    @property
    def n(self) -> int:
        return self.x.shape[0]


def _as_array(state) -> np.ndarray:
    return state.x if isinstance(state, PhaseState) else _phases(state)


def order_complex(x) -> np.ndarray | complex:
    """Complex centroid (1/N) sum exp(i x_j) along the last axis."""
    x = _as_array(x)
    return np.mean(np.cos(x), axis=-1) + 1j * np.mean(np.sin(x), axis=-1)


def order_magnitude(x) -> np.ndarray | float:
    return np.abs(order_complex(x))


def order_parameter(state) -> OrderParameter:
    x = _as_array(state)
    if x.ndim != 1:
        raise DimensionError("order_parameter takes a single phase vector; use order_complex for batches")
    z = complex(order_complex(x))
    R = min(abs(z), 1.0)
    if R < ZERO_ORDER_THRESHOLD:
        return OrderParameter(R=R, psi=None)
    psi = math.atan2(z.imag, z.real) % (2.0 * math.pi)
    return OrderParameter(R=R, psi=psi)


def coupling_field(state) -> np.ndarray:
    """f_i(x) = (1/N) sum_j sin(x_j - x_i), evaluated in O(N) per state.

    Expands sin(x_j - x_i) = sin x_j cos x_i - cos x_j sin x_i so the two
    sums are formed once.
    """
    x = _as_array(state)
    s, c = np.sin(x), np.cos(x)
    S = np.sum(s, axis=-1, keepdims=True)
    C = np.sum(c, axis=-1, keepdims=True)
    return (S * c - C * s) / x.shape[-1]


def reduced_jacobian(state) -> np.ndarray:
    """Jacobian of y -> f(y_1, ..., y_{N-1}, -sum(y)) restricted to its first N-1 rows.

    Evaluated at the first N-1 coordinates of ``state``; the last phase is
    taken from ``state`` as given (equal to minus the sum when the state is
    grounded).
    """
    x = _as_array(state)
    if x.ndim != 1:
        raise DimensionError("reduced_jacobian takes a single phase vector")
    n = x.shape[0]
    diff = np.cos(x[None, :] - x[:, None])  # diff[i, j] = cos(x_j - x_i)
    full = diff.copy()
    np.fill_diagonal(full, 0.0)
    full[np.diag_indices(n)] = -full.sum(axis=1)
    full /= n
    # chain rule through the embedding: d x_N / d y_j = -1
    return full[:-1, :-1] - full[:-1, -1:]


class FixedPointKind(enum.Enum):
    NOT_FIXED = "NotFixed"
    ZERO_ORDER = "ZeroOrder"
    PHASE_ALIGNED = "PhaseAligned"
    BOTH = "Both"


def classify_homogeneous_fixed_point(state, tol: float = 1e-9) -> FixedPointKind:
    """Which zero-set condition makes f(x) vanish, if any.

    A zero of f has either R(x) = 0, or every pairwise phase difference a
    multiple of pi. Both can hold at once (e.g. an even antipodal split).
    """
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    x = _as_array(state)
    if np.max(np.abs(coupling_field(x))) > tol:
        return FixedPointKind.NOT_FIXED
    zero_order = float(order_magnitude(x)) <= tol
    # all pairwise sines vanish iff every phase is x_0 mod pi
    aligned = float(np.max(np.abs(np.sin(x - x[0])))) <= tol
    if zero_order and aligned:
        return FixedPointKind.BOTH
    if zero_order:
        return FixedPointKind.ZERO_ORDER
    if aligned:
        return FixedPointKind.PHASE_ALIGNED
    return FixedPointKind.NOT_FIXED


def field_norm_bound_gap(state) -> np.ndarray | float:
    """sqrt(N R^2 (1 - R^2)) - ||f(x)||_2; never negative beyond rounding."""
    x = _as_array(state)
    n = x.shape[-1]
    z = order_complex(x)
    L = np.abs(z) ** 2
    # 1 - R^2 = mean |e^{i x_j} - z|^2, which avoids cancellation when R is near 1
    spread = np.mean(np.abs(np.exp(1j * x) - np.expand_dims(z, -1)) ** 2, axis=-1)
    bound = np.sqrt(n * L * spread)
    gap = bound - np.linalg.norm(coupling_field(x), axis=-1)
    return float(gap) if np.ndim(gap) == 0 else gap
