"""Quantum channels ``T(rho, lam) = sum_i A_i(lam) rho A_i(lam)^dagger``.

Every channel is a :class:`ParamChannel` mapping a control vector ``lam`` to a
Kraus set. Besides the single-point :meth:`ParamChannel.apply`, channels
provide a vectorised :meth:`ParamChannel.apply_batch` that the averaging
engines use to evaluate many perturbed control vectors at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import matcore
from .matcore import PAULIS, SIGMA_MINUS, SIGMA_PLUS, DimensionError

MAX_DEGREE = 4


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Kraus operators with optional signed weights.

    ``weights`` is ``None`` for an ordinary operator-sum. Signed weights
    (+1/-1) appear only for depolarizing controls that have left the
    probability simplex; they keep ``T`` linear in the controls there.
    """

    operators: tuple[np.ndarray, ...]
    weights: tuple[float, ...] | None = None

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def _weights(self):
        return self.weights if self.weights is not None else (1.0,) * len(self.operators)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for w, a in zip(self._weights(), self.operators):
            out += w * (a @ rho @ a.conj().T)
        return out


def check_completeness(ks: KrausSet, tol: float = 1e-9) -> tuple[bool, float]:
    """Trace-preservation test ``sum_i A_i^dagger A_i = I``.

    Returns ``(passed, defect)`` where ``defect`` is the largest entrywise
    deviation from the identity.
    """
    if len(ks.operators) == 0:
        raise ValueError("empty Kraus set")
    dims = {a.shape for a in ks.operators}
    if len(dims) != 1:
        raise DimensionError(f"Kraus operators have mixed shapes {sorted(dims)}")
    total = sum(w * (a.conj().T @ a) for w, a in zip(ks._weights(), ks.operators))
    defect = float(np.max(np.abs(total - np.eye(ks.dim))))
    return defect <= tol, defect


def _controls(lam, arity: int) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (arity,):
        raise ValueError(f"expected {arity} control parameters, got {lam.size}")
    if not np.all(np.isfinite(lam)):
        raise ValueError("control vector has non-finite entries")
    return lam


def _state(rho, dim: int) -> np.ndarray:
    m = matcore.validate_density(rho).mat
    if m.shape != (dim, dim):
        raise DimensionError(f"state has dim {m.shape[0]}, channel has dim {dim}")
    return m


class ParamChannel:
    """Base class for channels depending on classical controls.

    Subclasses implement :meth:`kraus_at`; the batch path defaults to a loop
    and is overridden where a closed form vectorises.
    """

    kind = "custom"
    affine_in_controls = False

    def __init__(self, arity: int, dim: int):
        self.arity = arity
        self.dim = dim

    def kraus_at(self, lam) -> KrausSet:
        raise NotImplementedError

    def _apply(self, rho: np.ndarray, lam: np.ndarray) -> np.ndarray:
        return self.kraus_at(lam).apply(rho)

    def apply(self, rho, lam) -> np.ndarray:
        return self._apply(_state(rho, self.dim), _controls(lam, self.arity))

    def apply_batch(self, rho, lams) -> np.ndarray:
        """``T(rho, lams[k])`` for each row; returns shape ``(n, dim, dim)``."""
        rho = _state(rho, self.dim)
        lams = np.asarray(lams, dtype=float).reshape(-1, self.arity)
        return np.stack([self._apply(rho, lam) for lam in lams])

    def __repr__(self) -> str:
        return f"{type(self).__name__}(arity={self.arity}, dim={self.dim})"


def kraus_at(ch: ParamChannel, lam) -> KrausSet:
    return ch.kraus_at(_controls(lam, ch.arity))


def apply(ch: ParamChannel, rho, lam) -> np.ndarray:
    return ch.apply(rho, lam)


# -- ion-trap single-qubit gate ------------------------------------------------


def ion_trap_gate(theta, phi) -> np.ndarray:
    """``R(theta, phi) = cos(theta/2) I + i sin(theta/2) (cos phi sx - sin phi sy)``.

    Broadcasts over array-valued ``theta`` and ``phi``; the last two axes are
    the matrix axes.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    # e^{i phi} s+ + e^{-i phi} s- has 0 diagonal and e^{+-i phi} off-diagonal
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = 1j * s * np.exp(1j * phi)
    out[..., 1, 0] = 1j * s * np.exp(-1j * phi)
    return out


def ion_trap_generator(phi: float) -> np.ndarray:
    """``e^{i phi} s+ + e^{-i phi} s-``, the unit-angle rotation generator."""
    return np.exp(1j * phi) * SIGMA_PLUS + np.exp(-1j * phi) * SIGMA_MINUS


class IonTrapChannel(ParamChannel):
    """Single-qubit gate with controls ``(theta, phi)``."""

    kind = "ion_trap"

    def __init__(self):
        super().__init__(arity=2, dim=2)

    def kraus_at(self, lam) -> KrausSet:
        theta, phi = lam
        return KrausSet((ion_trap_gate(theta, phi),))

    def _apply(self, rho, lam):
        r = ion_trap_gate(lam[0], lam[1])
        return r @ rho @ r.conj().T

    def apply_batch(self, rho, lams):
        rho = _state(rho, 2)
        lams = np.asarray(lams, dtype=float).reshape(-1, 2)
        r = ion_trap_gate(lams[:, 0], lams[:, 1])
        return r @ rho @ np.conj(np.swapaxes(r, -1, -2))


def ion_trap_channel() -> IonTrapChannel:
    return IonTrapChannel()


# -- anisotropic depolarizing channel -----------------------------------------


class DepolarizingChannel(ParamChannel):
    """``T(rho, p) = sum_i p_i sigma_i rho sigma_i`` with controls ``p``.

    ``p`` is not projected onto the probability simplex: off-simplex
    controls give a signed (non-CP) map, which is what perturbed averages
    require. ``strict=True`` rejects negative entries instead.
    """

    kind = "depolarizing"
    affine_in_controls = True

    def __init__(self, baseline=None, strict: bool = False):
        super().__init__(arity=4, dim=2)
        self.strict = strict
        self.baseline = None
        if baseline is not None:
            self.baseline = _controls(baseline, 4)
            self._check(self.baseline)

    def _check(self, p):
        if self.strict and np.any(p < 0):
            raise ValueError(f"negative depolarizing probability in {p.tolist()}")

    def kraus_at(self, lam) -> KrausSet:
        self._check(lam)
        ops = tuple(np.sqrt(abs(pi)) * s for pi, s in zip(lam, PAULIS))
        weights = tuple(1.0 if pi >= 0 else -1.0 for pi in lam)
        return KrausSet(ops, None if min(weights) > 0 else weights)

    def _apply(self, rho, lam):
        self._check(lam)
        return np.einsum("k,kij->ij", lam, PAULIS @ rho @ PAULIS)

    def apply_batch(self, rho, lams):
        rho = _state(rho, 2)
        lams = np.asarray(lams, dtype=float).reshape(-1, 4)
        if self.strict and np.any(lams < 0):
            raise ValueError("negative depolarizing probability in batch")
        return np.einsum("nk,kij->nij", lams, PAULIS @ rho @ PAULIS)


def depolarizing_channel(p=None, strict: bool = False) -> DepolarizingChannel:
    return DepolarizingChannel(p, strict=strict)


# -- one-parameter unitary family exp(i lam H) ---------------------------------


class UnitaryGeneratorChannel(ParamChannel):
    kind = "unitary_generator"

    def __init__(self, h):
        h = matcore.as_matrix(h)
        if not matcore.is_hermitian(h, matcore.HS_HERMITIAN_TOL):
            raise matcore.NotHermitianError("generator must be Hermitian")
        super().__init__(arity=1, dim=h.shape[0])
        self.generator = (h + h.conj().T) / 2
        self._w, self._v = np.linalg.eigh(self.generator)

    def kraus_at(self, lam) -> KrausSet:
        return KrausSet((matcore.expm_unitary(self.generator, lam[0]),))

    def apply_batch(self, rho, lams):
        rho = _state(rho, self.dim)
        lams = np.asarray(lams, dtype=float).reshape(-1)
        v = self._v
        u = (v[None] * np.exp(1j * lams[:, None] * self._w)[:, None, :]) @ v.conj().T
        return u @ rho @ np.conj(np.swapaxes(u, -1, -2))


def unitary_generator_channel(h) -> UnitaryGeneratorChannel:
    return UnitaryGeneratorChannel(h)


# -- custom polynomial Kraus channels ------------------------------------------


@dataclass(frozen=True, eq=False)
class PolynomialKraus:
    """One Kraus operator as ``sum_e C_e prod_mu lam_mu^e_mu``."""

    terms: Mapping[tuple[int, ...], np.ndarray] = field(default_factory=dict)


class CustomChannel(ParamChannel):
    """Channel whose Kraus entries are polynomials in the controls.

    Each exponent tuple must have length ``arity`` with entries in
    ``0..4``.
    """

    kind = "custom"

    def __init__(self, dim: int, arity: int, kraus: Sequence[Mapping[tuple[int, ...], object]]):
        super().__init__(arity=arity, dim=dim)
        if not kraus:
            raise ValueError("custom channel needs at least one Kraus operator")
        ops = []
        for k, terms in enumerate(kraus):
            clean = {}
            for exps, coeff in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != arity:
                    raise ValueError(f"Kraus {k}: exponent {exps} does not match arity {arity}")
                if any(e < 0 or e > MAX_DEGREE for e in exps):
                    raise ValueError(f"Kraus {k}: exponents must lie in 0..{MAX_DEGREE}, got {exps}")
                c = matcore.as_matrix(coeff)
                if c.shape != (dim, dim):
                    raise DimensionError(f"Kraus {k}: coefficient has shape {c.shape}")
                clean[exps] = clean.get(exps, 0) + c
            ops.append(PolynomialKraus(clean))
        self.kraus = tuple(ops)
        self.affine_in_controls = all(
            sum(e) == 0 for op in self.kraus for e in op.terms
        )

    def kraus_at(self, lam) -> KrausSet:
        mats = []
        for op in self.kraus:
            m = np.zeros((self.dim, self.dim), dtype=complex)
            for exps, c in op.terms.items():
                m = m + np.prod(np.power(lam, exps)) * c
            mats.append(m)
        return KrausSet(tuple(mats))

    def apply_batch(self, rho, lams):
        rho = _state(rho, self.dim)
        lams = np.asarray(lams, dtype=float).reshape(-1, self.arity)
        out = np.zeros((lams.shape[0], self.dim, self.dim), dtype=complex)
        for op in self.kraus:
            a = np.zeros_like(out)
            for exps, c in op.terms.items():
                a += np.prod(lams ** np.asarray(exps), axis=1)[:, None, None] * c
            out += a @ rho @ np.conj(np.swapaxes(a, -1, -2))
        return out


def custom_channel(dim: int, arity: int, kraus) -> CustomChannel:
    return CustomChannel(dim, arity, kraus)


def identity_channel(dim: int = 2, arity: int = 1) -> CustomChannel:
    """Constant channel ``T(rho, lam) = rho``."""
    return CustomChannel(dim, arity, [{(0,) * arity: np.eye(dim)}])
