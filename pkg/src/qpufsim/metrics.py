"""Exact distinguishability metrics for unitary channels and states.

The numerical range of a unitary is the convex hull of its eigenvalues, so
its minimum modulus reduces to a circular-gap scan over the eigenphases:
if the largest gap between consecutive sorted phases is g >= pi, every
eigenvalue fits in an arc theta = 2*pi - g <= pi and the minimum is
cos(theta/2); otherwise the hull contains the origin and the minimum is 0.
That minimum feeds the closed form 2*sqrt(1 - delta^2) for the diamond
distance between two unitary channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .qmath import (
    TWO_PI,
    ComplexMatrix,
    DensityMatrix,
    UnitaryMatrix,
    trace_norm_distance,
    unitary_eigensystem,
)

__all__ = [
    "NumericalRangeResult",
    "HelstromResult",
    "numerical_range_min",
    "delta_from_angles",
    "diamond_distance_unitary",
    "diamond_distance_from_angles",
    "p_distinguish",
    "helstrom_measurement",
]

_GAP_TIE_TOL = 1e-12


@dataclass(frozen=True)
class NumericalRangeResult:
    """Minimum modulus of W(U), the enclosing eigenphase arc, and hull status."""

    delta: float
    arc_theta: float
    origin_enclosed: bool


@dataclass(frozen=True)
class HelstromResult:
    """Optimal two-outcome discrimination measurement and its success rate."""

    projector: ComplexMatrix
    success_probability: float


def _largest_circular_gap(angles: np.ndarray) -> float:
    """Largest gap between consecutive eigenphases on the unit circle."""
    s = np.sort(angles)
    gaps = np.diff(s)
    wrap = s[0] + TWO_PI - s[-1]
    if gaps.size == 0:
        return TWO_PI
    return float(max(np.max(gaps), wrap))


def delta_from_angles(angles: np.ndarray) -> NumericalRangeResult:
    """Circular-gap evaluation of min |W| given the eigenphase multiset."""
    arr = np.asarray(angles, dtype=float).reshape(-1)
    if arr.size < 2:
        raise DimensionError("need at least two eigenphases (d >= 2)")
    gap = _largest_circular_gap(arr)
    arc = TWO_PI - gap
    if arc <= np.pi + _GAP_TIE_TOL:
        delta = float(np.sqrt(max(0.0, 0.5 + 0.5 * np.cos(arc))))
    else:
        delta = 0.0
    return NumericalRangeResult(delta=delta, arc_theta=arc, origin_enclosed=(delta == 0.0))


def numerical_range_min(u: UnitaryMatrix) -> NumericalRangeResult:
    """Minimum modulus over the numerical range of ``u``."""
    if u.dim < 2:
        raise DimensionError("numerical_range_min requires d >= 2")
    angles, _ = unitary_eigensystem(u)
    return delta_from_angles(angles)


def diamond_distance_unitary(u0: UnitaryMatrix, u1: UnitaryMatrix) -> float:
    """Exact diamond distance 2*sqrt(1 - delta(U0†U1)^2) between unitary channels."""
    if u0.dim != u1.dim:
        raise DimensionError(f"dimension mismatch: {u0.dim} vs {u1.dim}")
    rel = UnitaryMatrix(u0.entries.conj().T @ u1.entries)
    delta = numerical_range_min(rel).delta
    return float(2.0 * np.sqrt(max(0.0, 1.0 - delta * delta)))


def diamond_distance_from_angles(angles: np.ndarray) -> float:
    """Diamond distance of two unitary channels given eigenphases of U0†U1."""
    delta = delta_from_angles(angles).delta
    return float(2.0 * np.sqrt(max(0.0, 1.0 - delta * delta)))


def p_distinguish(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Helstrom success probability 1/2 + ||rho1 - rho2||_1 / 4."""
    return 0.5 + 0.25 * trace_norm_distance(rho1, rho2)


def helstrom_measurement(rho1: DensityMatrix, rho2: DensityMatrix) -> HelstromResult:
    """Optimal projector (positive eigenspace of rho1 - rho2) and its success rate."""
    if rho1.dim != rho2.dim:
        raise DimensionError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    diff = rho1.entries - rho2.entries
    w, v = np.linalg.eigh(diff)
    keep = v[:, w > 0.0]
    proj = keep @ keep.conj().T
    success = 0.5 + 0.5 * float(
        np.real(np.trace(proj @ diff))
    )  # = 1/2 (Tr P rho1 + Tr (I-P) rho2)
    return HelstromResult(projector=ComplexMatrix(proj), success_probability=success)
