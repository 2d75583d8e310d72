"""Lattice geometry, transverse field profile and its symmetric-gauge potential.

Natural units throughout: hbar = q = d = 1 and m = 1/2, so the hopping
energy J is 1 and site coordinates are the 1-based indices themselves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MIN_SIDE = 5


class ProfileError(ValueError):
    """Raised when a field profile is outside the admissible (b0, m_x) window.

    ``reason`` is ``"reversal"`` (b0 < m_x L) or ``"magnetic_length"`` (b0 > 1).
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class LatticeSpec:
    n_x: int
    n_y: int
    lattice_constant: float = 1.0
    hopping_energy: float = 1.0

    def __post_init__(self):
        if int(self.n_x) != self.n_x or int(self.n_y) != self.n_y:
            raise TypeError("lattice sizes must be integers")
        if self.n_x < MIN_SIDE or self.n_y < MIN_SIDE:
            raise ValueError(f"lattice must be at least {MIN_SIDE}x{MIN_SIDE}, got {self.n_x}x{self.n_y}")

    @property
    def dimension(self) -> int:
        return self.n_x * self.n_y

    @property
    def center(self) -> tuple[int, int]:
        """1-based center site; rounded down on even sides."""
        return (self.n_x + 1) // 2, (self.n_y + 1) // 2

    @property
    def canonical(self) -> bool:
        # odd sides have a true center with equal site counts on either side
        return self.n_x % 2 == 1 and self.n_y % 2 == 1

    @property
    def half_width(self) -> int:
        """L = max_x |x - x0| over the lattice."""
        x0 = self.center[0]
        return max(x0 - 1, self.n_x - x0)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Site coordinates as (n_y, n_x) arrays ``(x, y)``, row-major in k."""
        d = self.lattice_constant
        j = np.arange(1, self.n_x + 1, dtype=float) * d
        k = np.arange(1, self.n_y + 1, dtype=float) * d
        y, x = np.meshgrid(k, j, indexing="ij")
        return x, y


@dataclass(frozen=True)
class FieldProfile:
    """Field B(x) = b0 - m_x |x - x0| along z, constant in y."""

    b0: float
    m_x: float = 0.0
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not self.b0 > 0:
            raise ValueError(f"b0 must be positive, got {self.b0}")
        if self.m_x < 0:
            raise ValueError(f"m_x must be nonnegative, got {self.m_x}")

    @classmethod
    def centered(cls, spec: LatticeSpec, b0: float, m_x: float = 0.0) -> FieldProfile:
        x0, y0 = spec.center
        d = spec.lattice_constant
        return cls(b0=float(b0), m_x=float(m_x), x0=x0 * d, y0=y0 * d)

    @property
    def alpha(self) -> float:
        # slope of the auxiliary gauge function f(x) = b0 - alpha |x - x0|
        return 2.0 * self.m_x / 3.0

    def gauge_function(self, x):
        return self.b0 - self.alpha * np.abs(np.asarray(x, dtype=float) - self.x0)


def field_magnitude(profile: FieldProfile, x):
    """Return B0 - m_x |x - x0|. Works elementwise on arrays."""
    return profile.b0 - profile.m_x * np.abs(np.asarray(x, dtype=float) - profile.x0)


def magnetic_length(b: float) -> float:
    if not b > 0:
        raise ValueError(f"magnetic length needs a positive field, got {b}")
    return b ** -0.5


def validate_profile(spec: LatticeSpec, profile: FieldProfile) -> None:
    """Check m_x L <= b0 <= 1. Raises :class:`ProfileError` naming the failed bound."""
    lower = profile.m_x * spec.half_width * spec.lattice_constant
    if profile.b0 < lower:
        raise ProfileError(
            "reversal",
            f"b0={profile.b0} < m_x*L={lower}: field reverses sign near the x edges",
        )
    if profile.b0 > 1.0:
        raise ProfileError(
            "magnetic_length",
            f"b0={profile.b0} > 1: magnetic length {magnetic_length(profile.b0):.4g} below lattice constant",
        )
    if not spec.canonical:
        logger.warning("lattice %dx%d has no true center; using site %s", spec.n_x, spec.n_y, spec.center)


@dataclass(frozen=True)
class VectorPotentialField:
    """Sampled (A_x, A_y) as (n_y, n_x) arrays indexed ``[k - 1, j - 1]``."""

    a_x: np.ndarray
    a_y: np.ndarray

    def __post_init__(self):
        if self.a_x.shape != self.a_y.shape:
            raise ValueError("a_x and a_y must have the same shape")
        self.a_x.setflags(write=False)
        self.a_y.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.a_x.shape

    def at(self, j: int, k: int) -> tuple[float, float]:
        return float(self.a_x[k - 1, j - 1]), float(self.a_y[k - 1, j - 1])

    def shifted(self, cx: float, cy: float) -> VectorPotentialField:
        """Same potential plus a constant vector (a pure gauge change in the continuum)."""
        return VectorPotentialField(self.a_x + cx, self.a_y + cy)


def sample_vector_potential(spec: LatticeSpec, profile: FieldProfile) -> VectorPotentialField:
    x, y = spec.coordinates()
    half_f = 0.5 * profile.gauge_function(x)
    a_x = -half_f * (y - profile.y0)
    a_y = half_f * (x - profile.x0)
    # avoid -0.0 so dumps and byte comparisons are stable
    return VectorPotentialField(a_x + 0.0, a_y + 0.0)


def _five_point_derivative(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    # (f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / 12h, valid where two neighbours exist
    n = f.shape[axis]
    take = lambda a, b: np.take(f, np.arange(a, n + b), axis=axis)  # noqa: E731
    return (take(0, -4) - 8 * take(1, -3) + 8 * take(3, -1) - take(4, 0)) / (12 * h)


def discrete_curl(potential: VectorPotentialField, lattice_constant: float = 1.0) -> np.ndarray:
    """dA_y/dx - dA_x/dy with five-point differences on sites two away from every edge.

    Returns an (n_y - 4, n_x - 4) array.
    """
    dy_ax = _five_point_derivative(potential.a_x, axis=0, h=lattice_constant)[:, 2:-2]
    dx_ay = _five_point_derivative(potential.a_y, axis=1, h=lattice_constant)[2:-2, :]
    return dx_ay - dy_ax
