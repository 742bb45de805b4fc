"""Dense complex linear algebra and quantum-state primitives.

Validated wrapper types around numpy arrays (matrices, unitaries, pure
states, density matrices, eigenphases) plus the basic operations the rest
of the toolkit is built on: tensor products, fidelity, trace-norm
distance, Haar sampling, and eigenphase extraction for unitaries.

All wrapper types are immutable after construction (backing arrays are
marked read-only) and safe to share across threads.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionError, ValidationError

__all__ = [
    "ComplexMatrix",
    "UnitaryMatrix",
    "DensityMatrix",
    "PureState",
    "EigenAngles",
    "UNITARITY_TOL",
    "kron",
    "fidelity",
    "trace_norm_distance",
    "haar_unitary",
    "haar_pure_state",
    "eig_unitary",
    "unitary_eigensystem",
]

UNITARITY_TOL = 1e-10
STATE_NORM_TOL = 1e-10
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9

TWO_PI = 2.0 * np.pi


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class ComplexMatrix:
    """Dense complex matrix with finite entries."""

    __slots__ = ("_entries",)

    def __init__(self, entries) -> None:
        arr = np.array(entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"expected a 2-D matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("matrix entries must be finite (no NaN/Inf)")
        self._entries = _freeze(arr)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def rows(self) -> int:
        return self._entries.shape[0]

    @property
    def cols(self) -> int:
        return self._entries.shape[1]

    def dagger(self) -> "ComplexMatrix":
        return ComplexMatrix(self._entries.conj().T)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ComplexMatrix)
            and self._entries.shape == other._entries.shape
            and bool(np.array_equal(self._entries, other._entries))
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self._entries.shape})"


class UnitaryMatrix(ComplexMatrix):
    """Square matrix validated to satisfy ``max|U†U - I| <= 1e-10``."""

    __slots__ = ()

    def __init__(self, entries) -> None:
        super().__init__(entries)
        u = self._entries
        if u.shape[0] != u.shape[1]:
            raise ValidationError(f"unitary must be square, got shape {u.shape}")
        defect = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if defect > UNITARITY_TOL:
            raise ValidationError(f"unitarity defect {defect:.3e} exceeds {UNITARITY_TOL:.0e}")

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def dagger(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self._entries.conj().T)

    @classmethod
    def identity(cls, d: int) -> "UnitaryMatrix":
        return cls(np.eye(int(d)))

    def __matmul__(self, other: "UnitaryMatrix") -> "UnitaryMatrix":
        if not isinstance(other, UnitaryMatrix):
            return NotImplemented
        if self.dim != other.dim:
            raise DimensionError(f"cannot multiply {self.dim}-dim by {other.dim}-dim unitary")
        return UnitaryMatrix(self._entries @ other._entries)


class DensityMatrix(ComplexMatrix):
    """Hermitian, unit-trace, positive-semidefinite (within tolerance) operator."""

    __slots__ = ()

    def __init__(self, entries) -> None:
        super().__init__(entries)
        m = self._entries
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {m.shape}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValidationError(f"hermiticity defect {herm:.3e} exceeds {HERMITICITY_TOL:.0e}")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace {tr} deviates from 1 beyond {TRACE_TOL:.0e}")
        wmin = float(np.linalg.eigvalsh((m + m.conj().T) / 2.0).min())
        if wmin < EIGENVALUE_FLOOR:
            raise ValidationError(f"minimum eigenvalue {wmin:.3e} below floor {EIGENVALUE_FLOOR:.0e}")

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self._entries @ self._entries)))


class PureState:
    """Normalized state vector on a ``d``-dimensional Hilbert space."""

    __slots__ = ("_amplitudes",)

    def __init__(self, amplitudes) -> None:
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        if vec.size < 1:
            raise ValidationError("state vector must be non-empty")
        if not np.all(np.isfinite(vec)):
            raise ValidationError("amplitudes must be finite")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValidationError(f"norm {norm} deviates from 1 beyond {STATE_NORM_TOL:.0e}")
        self._amplitudes = _freeze(vec)

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def dim(self) -> int:
        return self._amplitudes.size

    def density(self) -> DensityMatrix:
        v = self._amplitudes
        return DensityMatrix(np.outer(v, v.conj()))

    @classmethod
    def basis(cls, d: int, index: int = 0) -> "PureState":
        vec = np.zeros(int(d), dtype=complex)
        vec[int(index)] = 1.0
        return cls(vec)

    def __repr__(self) -> str:
        return f"PureState(dim={self.dim})"


class EigenAngles:
    """Eigenphases of a unitary: ``d`` angles in ``[0, 2)``."""

    __slots__ = ("_angles",)

    def __init__(self, angles) -> None:
        arr = np.array(angles, dtype=float).reshape(-1)
        if arr.size < 1:
            raise ValidationError("need at least one angle")
        if np.any(arr < 0.0) or np.any(arr >= TWO_PI):
            raise ValidationError("angles must lie in [0, 2*pi)")
        self._angles = _freeze(arr)

    @property
    def angles(self) -> np.ndarray:
        return self._angles

    @property
    def dim(self) -> int:
        return self._angles.size

    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self._angles)


def _require_same_dim(a: DensityMatrix, b: DensityMatrix) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Tensor (Kronecker) product; stays a UnitaryMatrix when both inputs are."""
    out = np.kron(a.entries, b.entries)
    if isinstance(a, UnitaryMatrix) and isinstance(b, UnitaryMatrix):
        return UnitaryMatrix(out)
    return ComplexMatrix(out)


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix via eigendecomposition."""
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _dominant_pure_part(rho: DensityMatrix):
    """Return the state vector when ``rho`` is numerically rank one, else None."""
    if abs(rho.purity() - 1.0) > 1e-12:
        return None
    w, v = np.linalg.eigh(rho.entries)
    if w[-1] < 1.0 - 1e-10:
        return None
    return v[:, -1]


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Fidelity F(rho, sigma) = Tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1].

    Rank-one inputs take the exact fast path F = sqrt(<psi|sigma|psi>),
    which agrees with the general eigendecomposition path to well below
    1e-9 and avoids the sqrt amplification of noise-level eigenvalues.
    """
    _require_same_dim(rho, sigma)
    for a, b in ((rho, sigma), (sigma, rho)):
        psi = _dominant_pure_part(a)
        if psi is not None:
            val = float(np.real(psi.conj() @ b.entries @ psi))
            return float(np.sqrt(min(max(val, 0.0), 1.0)))
    sq = _sqrtm_psd(rho.entries)
    w = np.linalg.eigvalsh(sq @ sigma.entries @ sq)
    # Zero out noise-level eigenvalues: sqrt() would otherwise inflate
    # O(eps) round-off into O(sqrt(eps)) contributions.
    cutoff = max(float(w[-1]), 0.0) * w.size * 1e-14
    w = np.where(w > cutoff, w, 0.0)
    return float(min(np.sum(np.sqrt(w)), 1.0))


def trace_norm_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Trace norm ||rho - sigma||_1, in [0, 2]."""
    _require_same_dim(rho, sigma)
    w = np.linalg.eigvalsh(rho.entries - sigma.entries)
    return float(np.sum(np.abs(w)))


def haar_unitary(d: int, rng: np.random.Generator) -> UnitaryMatrix:
    """Sample from the Haar measure on U(d) via Ginibre + QR.

    The QR phase ambiguity is fixed by normalizing the diagonal of R to be
    real positive, which makes the distribution exactly Haar.
    """
    d = int(d)
    if d < 2:
        raise ValueError("haar_unitary requires d >= 2")
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    phase = np.diagonal(r).copy()
    phase /= np.abs(phase)
    return UnitaryMatrix(q * phase)


def haar_pure_state(d: int, rng: np.random.Generator) -> PureState:
    """Sample a uniformly random pure state on the complex unit sphere."""
    d = int(d)
    if d < 2:
        raise ValueError("haar_pure_state requires d >= 2")
    vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(vec / np.linalg.norm(vec))


def unitary_eigensystem(u: UnitaryMatrix):
    """Eigenphases and unitary eigenbasis of ``u``.

    Returns ``(angles, basis)`` with angles in [0, 2*pi) such that
    ``basis @ diag(exp(1j*angles)) @ basis†`` reconstructs ``u``.  Uses the
    complex Schur form, which is unitarily diagonal for normal input.
    """
    t, q = scipy.linalg.schur(u.entries, output="complex")
    lam = np.diagonal(t)
    angles = np.mod(np.angle(lam), TWO_PI)
    angles[angles >= TWO_PI] = 0.0
    return angles, q


def eig_unitary(u: UnitaryMatrix) -> EigenAngles:
    """Eigenphase multiset of a unitary as an EigenAngles record."""
    angles, _ = unitary_eigensystem(u)
    return EigenAngles(angles)
