"""Small dense complex-matrix kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` and
shape ``(dim, dim)``. Density matrices are wrapped in :class:`DensityMatrix`
once they have been validated, so downstream code can rely on the
Hermitian / unit-trace / PSD invariants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-10
HS_HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = (SIGMA_X + 1j * SIGMA_Y) / 2
SIGMA_MINUS = (SIGMA_X - 1j * SIGMA_Y) / 2
#: sigma_0 = identity followed by the three Pauli matrices
PAULIS = np.stack([I2, SIGMA_X, SIGMA_Y, SIGMA_Z])

for _m in (I2, SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_PLUS, SIGMA_MINUS, PAULIS):
    _m.setflags(write=False)


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(ValueError):
    """A matrix required to be Hermitian is not."""


class InvalidDensityMatrix(ValueError):
    """Base class for density-matrix validation failures."""


class DensityNotHermitian(InvalidDensityMatrix, NotHermitianError):
    pass


class TraceNotOne(InvalidDensityMatrix):
    pass


class NegativeEigenvalue(InvalidDensityMatrix):
    pass


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a square, finite complex matrix."""
    if isinstance(a, DensityMatrix):
        return a.mat
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state. Construct through :func:`validate_density`."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


def multiply(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def hermiticity_defect(a) -> float:
    a = as_matrix(a)
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_defect(a) <= tol


def hs_product(a, b) -> float:
    """Real Hilbert-Schmidt pairing ``Re tr(a b)`` of two Hermitian matrices.

    Raises
    ------
    NotHermitianError
        If either operand deviates from Hermiticity by more than 1e-10, or
        if the imaginary part of the trace exceeds 1e-10.
    """
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    for name, m in (("a", a), ("b", b)):
        if not is_hermitian(m, HS_HERMITIAN_TOL):
            raise NotHermitianError(f"hs_product operand {name} is not Hermitian")
    # tr(a b) = sum_ij a_ij b_ji
    value = complex(np.sum(a * b.T))
    if abs(value.imag) > HS_HERMITIAN_TOL:
        raise NotHermitianError(f"tr(a b) has imaginary part {value.imag:.3e}")
    return value.real


def purity(rho) -> float:
    """``tr(rho^2)`` of a validated density matrix."""
    if not isinstance(rho, DensityMatrix):
        rho = validate_density(rho)
    return hs_product(rho.mat, rho.mat)


def pauli_components(h) -> np.ndarray:
    """Coefficients ``(a0, ax, ay, az)`` with ``h = a0 I + a . sigma``."""
    h = as_matrix(h)
    if h.shape != (2, 2):
        raise DimensionError("Pauli decomposition needs a 2x2 matrix")
    return np.einsum("kij,ji->k", PAULIS, h) / 2


def _expm_2x2(h: np.ndarray, s: float) -> np.ndarray:
    a = pauli_components(h).real
    norm = float(np.linalg.norm(a[1:]))
    phase = np.exp(1j * s * a[0])
    if norm == 0.0:
        return phase * I2.copy()
    n_sigma = np.einsum("k,kij->ij", a[1:] / norm, PAULIS[1:])
    return phase * (np.cos(s * norm) * I2 + 1j * np.sin(s * norm) * n_sigma)


def expm_unitary(h, s: float) -> np.ndarray:
    """``exp(i s h)`` for Hermitian ``h``.

    2x2 inputs use the Pauli closed form
    ``e^{i s a0} (cos(s|a|) I + i sin(s|a|) a.sigma/|a|)``; larger ones go
    through the Hermitian eigendecomposition.
    """
    h = as_matrix(h)
    if not is_hermitian(h, HS_HERMITIAN_TOL):
        raise NotHermitianError("expm_unitary requires a Hermitian generator")
    h = (h + h.conj().T) / 2
    if h.shape == (2, 2):
        return _expm_2x2(h, float(s))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * float(s) * w)) @ v.conj().T


def min_eigenvalue(h) -> float:
    """Smallest eigenvalue of a Hermitian matrix (closed form for 2x2)."""
    h = as_matrix(h)
    if h.shape == (2, 2):
        mean = (h[0, 0].real + h[1, 1].real) / 2
        half_gap = np.hypot((h[0, 0].real - h[1, 1].real) / 2, abs(h[0, 1]))
        return float(mean - half_gap)
    return float(np.linalg.eigvalsh(h)[0])


def validate_density(m, tol: float = HERMITIAN_TOL) -> DensityMatrix:
    """Check the three density-matrix invariants and wrap ``m``.

    Hermiticity and the trace are checked at ``tol``; the eigenvalue floor
    is ``PSD_FLOOR``, or ``-tol`` when that is looser.
    """
    if isinstance(m, DensityMatrix):
        return m
    m = as_matrix(m)
    defect = hermiticity_defect(m)
    if defect > tol:
        raise DensityNotHermitian(f"matrix is not Hermitian (defect {defect:.3e})")
    tr = np.trace(m)
    if abs(tr - 1) > tol:
        raise TraceNotOne(f"trace is {tr:.15g}, expected 1")
    floor = min(PSD_FLOOR, -tol)
    lam = min_eigenvalue(m)
    if lam < floor:
        raise NegativeEigenvalue(f"minimum eigenvalue {lam:.3e} below {floor:.1e}")
    mat = (m + m.conj().T) / 2
    mat.setflags(write=False)
    return DensityMatrix(mat)


def bloch_to_density(v) -> DensityMatrix:
    """Qubit state ``(I + v . sigma) / 2`` for a Bloch vector with ``|v| <= 1``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise DimensionError("Bloch vector must have three components")
    if np.linalg.norm(v) > 1 + 1e-12:
        raise ValueError(f"Bloch vector norm {np.linalg.norm(v):.15g} exceeds 1")
    return validate_density((I2 + np.einsum("k,kij->ij", v, PAULIS[1:])) / 2)


def pure_state(psi) -> DensityMatrix:
    """Projector onto a (normalised here) state vector."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return validate_density(np.outer(psi, psi.conj()))
