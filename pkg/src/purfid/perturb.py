"""Perturbative predictors of the channel purity and fidelity.

Biased errors (nonzero mean) give the first-order predictions::

    P ~ P0 + 2 tr(T d_mu T) E[dlam_mu]      F ~ P0 + tr(T d_mu T) E[dlam_mu]

and zero-mean errors the second-order ones::

    P ~ P0 + tr(T d_mu d_nu T) E[dlam_mu dlam_nu]
    F ~ P0 + 1/2 tr(T d_mu d_nu T) E[dlam_mu dlam_nu]

The generic predictor obtains the derivatives by central differences. The
ion-trap gate and the depolarizing channel also have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore, noise
from .channels import PAULIS, ParamChannel, ion_trap_generator
from .matcore import hs_product

H_FIRST = 1e-4
H_SECOND = 1e-3
SERIES_THRESHOLD = 1e-3


@dataclass(frozen=True)
class PredictorOutput:
    p0: float
    p_pred: float
    f_pred: float
    order: str
    correction_term: float

    @property
    def residual(self) -> float:
        return self.f_pred - (self.p_pred + self.p0) / 2


def _output(p0: float, correction: float, order: str) -> PredictorOutput:
    return PredictorOutput(p0, p0 + 2 * correction, p0 + correction, order, correction)


def _hermitize(m: np.ndarray) -> np.ndarray:
    # differences of Hermitian outputs, divided by h^2, amplify roundoff asymmetry
    return (m + m.conj().T) / 2


def _unit(lam, mu: int, h: float) -> np.ndarray:
    lam = np.array(lam, dtype=float)
    lam[mu] += h
    return lam


def d1_channel(ch: ParamChannel, rho, lam, mu: int, h: float = H_FIRST) -> np.ndarray:
    """Central difference ``(T(lam + h e_mu) - T(lam - h e_mu)) / 2h``."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    lam = np.asarray(lam, dtype=float)
    plus = ch.apply(rho, _unit(lam, mu, h))
    minus = ch.apply(rho, _unit(lam, mu, -h))
    return _hermitize((plus - minus) / (2 * h))


def d2_channel(ch: ParamChannel, rho, lam, mu: int, nu: int, h: float = H_SECOND) -> np.ndarray:
    """Second partial ``d_mu d_nu T`` by central differences.

    The diagonal uses the 3-point stencil; the mixed derivative uses the
    four corner points of the 3x3 stencil (centre and edge weights are 0).
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    lam = np.asarray(lam, dtype=float)
    if mu == nu:
        plus = ch.apply(rho, _unit(lam, mu, h))
        minus = ch.apply(rho, _unit(lam, mu, -h))
        return _hermitize((plus - 2 * ch.apply(rho, lam) + minus) / h**2)
    corners = [
        ch.apply(rho, _unit(_unit(lam, mu, a * h), nu, b * h))
        for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1))
    ]
    return _hermitize((corners[0] - corners[1] - corners[2] + corners[3]) / (4 * h**2))


def predict(
    ch: ParamChannel,
    rho,
    lam,
    model: noise.FluctuationModel,
    h1: float = H_FIRST,
    h2: float = H_SECOND,
) -> PredictorOutput:
    """Generic finite-difference predictor.

    Nonzero mean with zero covariance gives the first-order prediction and
    zero mean the second-order one. With both present, the two corrections
    are added, the second-order term using the full second moments.
    """
    if model.dim != ch.arity:
        raise ValueError(f"noise has {model.dim} components, channel arity is {ch.arity}")
    lam = np.asarray(lam, dtype=float)
    t = ch.apply(rho, lam)
    p0 = hs_product(t, t)
    mean, second = noise.moments(model)
    biased = bool(np.any(mean != 0))
    spread = model.scale > 0 and bool(np.any(model.cov != 0))
    correction = 0.0
    if biased:
        for mu in np.flatnonzero(mean):
            correction += hs_product(t, d1_channel(ch, rho, lam, mu, h1)) * mean[mu]
    if spread:
        for mu in range(ch.arity):
            for nu in range(mu, ch.arity):
                if second[mu, nu] == 0:
                    continue
                weight = 1.0 if mu == nu else 2.0
                d2 = d2_channel(ch, rho, lam, mu, nu, h2)
                correction += 0.5 * weight * hs_product(t, d2) * second[mu, nu]
    order = "first" if biased and not spread else "second"
    return _output(p0, correction, order)


# -- ion-trap closed form ------------------------------------------------------

# Maclaurin coefficients in theta (ascending even/odd powers) used below the
# series threshold where the closed forms are 0/0.
_SERIES = {
    "f0": ((0, 1.0), (2, -1 / 6), (4, 1 / 120), (6, -1 / 5040)),
    "f1": ((1, -1 / 3), (3, 1 / 30), (5, -1 / 840), (7, 1 / 45360)),
    "f2": ((0, -1 / 6), (2, 1 / 20), (4, -1 / 336), (6, 1 / 12960)),
    "g0": ((0, 1 / 2), (2, -1 / 24), (4, 1 / 720), (6, -1 / 40320)),
    "g1": ((1, -1 / 12), (3, 1 / 180), (5, -1 / 6720), (7, 1 / 453600)),
    "g2": ((0, -1 / 24), (2, 1 / 120), (4, -1 / 2688), (6, 1 / 129600)),
}


def ion_trap_coefficients(theta0: float) -> dict[str, float]:
    """Scalar coefficient functions of the gate expansion at ``theta0``.

    ``f1``, ``f2``, ``g1``, ``g2`` and ``h2`` are the coefficients of
    ``dtheta`` and ``dtheta^2``, i.e. the moments are not yet applied.
    """
    t = float(theta0)
    c, s = np.cos(t), np.sin(t)
    one_minus_c = 2 * np.sin(0.5 * t) ** 2  # avoids cancellation in 1 - cos
    out = {"h0": 0.5 * (1 + c), "h2": -0.25 * c}
    if abs(t) < SERIES_THRESHOLD:
        for name, terms in _SERIES.items():
            out[name] = sum(a * t**k for k, a in terms)
        return out
    out["f0"] = s / t
    out["f1"] = c / t - s / t**2
    out["f2"] = 0.5 * (2 * s / t**3 - 2 * c / t**2 - s / t)
    out["g0"] = one_minus_c / t**2
    out["g1"] = s / t**2 - 2 * one_minus_c / t**3
    out["g2"] = 0.5 * (6 * one_minus_c / t**4 - 4 * s / t**3 + c / t**2)
    return out


@dataclass(frozen=True, eq=False)
class IonTrapExpansion:
    """Zeroth and moment-averaged second-order terms of the gate output.

    ``x1_theta``/``x1_phi`` are the operator coefficients of ``dtheta`` and
    ``dphi`` in the first-order generator correction; ``x2_phiphi`` and
    ``x2_thetaphi`` those of ``dphi^2`` and ``dtheta dphi`` in the second.
    """

    g0: np.ndarray
    g2_bar: np.ndarray
    coefficients: dict
    x0: np.ndarray
    x1_theta: np.ndarray
    x1_phi: np.ndarray
    x2_phiphi: np.ndarray
    x2_thetaphi: np.ndarray


def _comm(a, b):
    return a @ b - b @ a


def ion_trap_expansion(rho, theta0: float, phi0: float, second_moments) -> IonTrapExpansion:
    """Build ``G0`` and ``Gbar2`` for the ion-trap gate.

    ``second_moments`` is the 2x2 matrix of ``E[dtheta^2], E[dtheta dphi],
    E[dphi^2]`` (in that layout). Terms odd in the errors are dropped.
    """
    r = matcore.validate_density(rho).mat
    m = np.asarray(second_moments, dtype=float)
    m_tt, m_tp, m_pp = m[0, 0], 0.5 * (m[0, 1] + m[1, 0]), m[1, 1]
    k = ion_trap_coefficients(theta0)

    n0 = ion_trap_generator(phi0)
    # i (e^{i phi} s+ - e^{-i phi} s-), the phi-derivative direction
    n_perp = 1j * (np.exp(1j * phi0) * matcore.SIGMA_PLUS - np.exp(-1j * phi0) * matcore.SIGMA_MINUS)
    x0 = theta0 * n0
    x1_theta, x1_phi = n0, theta0 * n_perp
    x2_phiphi, x2_thetaphi = -0.5 * theta0 * n0, n_perp

    def sand(a, b):
        return a @ r @ b

    g0 = k["h0"] * r + 0.5j * k["f0"] * _comm(x0, r) + 0.5 * k["g0"] * sand(x0, x0)

    # coefficient of dtheta^2
    m_theta = (
        k["h2"] * r
        + 0.5j * k["f2"] * _comm(x0, r)
        + 0.5j * k["f1"] * _comm(x1_theta, r)
        + 0.5 * k["g0"] * sand(x1_theta, x1_theta)
        + 0.5 * k["g1"] * (sand(x1_theta, x0) + sand(x0, x1_theta))
        + 0.5 * k["g2"] * sand(x0, x0)
    )
    # coefficient of dtheta dphi
    m_cross = (
        0.5j * k["f1"] * _comm(x1_phi, r)
        + 0.5j * k["f0"] * _comm(x2_thetaphi, r)
        + 0.5 * k["g0"] * (sand(x0, x2_thetaphi) + sand(x2_thetaphi, x0))
        + 0.5 * k["g0"] * (sand(x1_phi, x1_theta) + sand(x1_theta, x1_phi))
        + 0.5 * k["g1"] * (sand(x1_phi, x0) + sand(x0, x1_phi))
    )
    # coefficient of dphi^2
    m_phi = (
        0.5j * k["f0"] * _comm(x2_phiphi, r)
        + 0.5 * k["g0"] * (sand(x0, x2_phiphi) + sand(x2_phiphi, x0))
        + 0.5 * k["g0"] * sand(x1_phi, x1_phi)
    )
    g2_bar = m_theta * m_tt + m_cross * m_tp + m_phi * m_pp
    return IonTrapExpansion(
        g0=g0,
        g2_bar=g2_bar,
        coefficients=k,
        x0=x0,
        x1_theta=x1_theta,
        x1_phi=x1_phi,
        x2_phiphi=x2_phiphi,
        x2_thetaphi=x2_thetaphi,
    )


def ion_trap_predict(rho, theta0: float, phi0: float, model: noise.FluctuationModel) -> PredictorOutput:
    """Closed-form second-order predictor for the ion-trap gate (zero-mean errors)."""
    if model.dim != 2:
        raise ValueError("ion-trap noise model must have two components (theta, phi)")
    mean, second = noise.moments(model)
    if np.any(mean != 0):
        raise ValueError("ion_trap_predict requires zero-mean control errors")
    rho = matcore.validate_density(rho)
    exp = ion_trap_expansion(rho, theta0, phi0, second)
    p0 = matcore.purity(rho)
    correction = hs_product(exp.g0, exp.g2_bar)
    return _output(p0, correction, "second")


# -- depolarizing closed form --------------------------------------------------


def depolarizing_predict(rho, p, mean_dp) -> PredictorOutput:
    """First-order predictor ``correction = tr sum_ij p_i dp_j s_i rho s_i s_j rho s_j``."""
    r = matcore.validate_density(rho).mat
    p = np.asarray(p, dtype=float)
    dp = np.asarray(mean_dp, dtype=float)
    if p.shape != (4,) or dp.shape != (4,):
        raise ValueError("depolarizing controls and their mean errors need four components")
    conj = PAULIS @ r @ PAULIS
    t = np.einsum("i,ijk->jk", p, conj)
    shifted = np.einsum("j,jkl->kl", dp, conj)
    p0 = hs_product(t, t)
    return _output(p0, hs_product(t, shifted), "first")
