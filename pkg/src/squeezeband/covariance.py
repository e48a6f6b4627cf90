"""Gaussian second moments of the two quadratures and their principal axes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# Floating-point slack allowed on the determinant before a triple is rejected.
PSD_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CovarianceTriple:
    """Variances ``v_x``, ``v_y`` and symmetrized covariance ``c``.

    Fields may be scalars or equally shaped arrays; validation applies
    elementwise.
    """

    v_x: float
    v_y: float
    c: float = 0.0

    def __post_init__(self):
        v_x, v_y, c = (np.asarray(v, dtype=float) for v in (self.v_x, self.v_y, self.c))
        if not (np.all(np.isfinite(v_x)) and np.all(np.isfinite(v_y)) and np.all(np.isfinite(c))):
            raise ParameterError("covariance entries must be finite")
        if np.any(v_x <= 0) or np.any(v_y <= 0):
            raise ParameterError("variances must be positive")
        scale = np.maximum(v_x * v_y, 1.0)
        if np.any(v_x * v_y - c**2 < -PSD_TOLERANCE * scale):
            raise ParameterError("covariance is not positive semidefinite")

    @classmethod
    def from_matrix(cls, m) -> CovarianceTriple:
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[1, 1]), 0.5 * float(m[0, 1] + m[1, 0]))

    def as_array(self) -> np.ndarray:
        return np.array([self.v_x, self.v_y, self.c], dtype=float)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.v_x, self.c], [self.c, self.v_y]], dtype=float)

    @property
    def determinant(self):
        return self.v_x * self.v_y - self.c**2


@dataclass(frozen=True)
class SqueezingSolution:
    """Principal variances and the antisqueezing angle, measured from the Y axis."""

    v_minus: float
    v_plus: float
    angle: float


def principal_axes(cov: CovarianceTriple) -> SqueezingSolution:
    """Diagonalize a covariance triple.

    The squeezed variance is the minimum over ``a`` of
    ``v_x cos^2 a + v_y sin^2 a - 2 c cos a sin a``, attained at the returned
    ``angle``; the antisqueezed axis sits at the same angle from Y. An isotropic
    triple reports ``angle = 0``.
    """
    mean = 0.5 * (cov.v_x + cov.v_y)
    half_diff = 0.5 * (cov.v_y - cov.v_x)
    radius = math.hypot(half_diff, cov.c)
    if radius == 0.0:
        return SqueezingSolution(mean, mean, 0.0)
    angle = 0.5 * math.atan2(cov.c, half_diff)
    v_plus = mean + radius
    # product form avoids cancellation for strongly squeezed ellipses
    v_minus = cov.determinant / v_plus
    return SqueezingSolution(v_minus, v_plus, angle)


def covariance_from_axes(v_minus: float, v_plus: float, angle: float) -> CovarianceTriple:
    """Inverse of :func:`principal_axes`."""
    cs, sn = math.cos(angle), math.sin(angle)
    return CovarianceTriple(
        v_minus * cs**2 + v_plus * sn**2,
        v_minus * sn**2 + v_plus * cs**2,
        (v_plus - v_minus) * sn * cs,
    )


def rotation(phi: float) -> np.ndarray:
    return np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])


def rotate(cov: CovarianceTriple, phi: float) -> CovarianceTriple:
    """Covariance of the rotated quadratures ``R(phi) @ (X, Y)``.

    Shifting the pump phase from ``theta`` to ``theta - phi`` maps every
    steady state (conditional or not) through this rotation.
    """
    r = rotation(phi)
    return CovarianceTriple.from_matrix(r @ cov.as_matrix() @ r.T)
