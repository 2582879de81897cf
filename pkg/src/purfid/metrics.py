"""Noiseless purity ``P0``, channel purity ``P`` and channel fidelity ``F``.

With ``T = T(rho, lam)`` and ``Tbar`` the error-averaged output::

    P0 = tr(T T)      P = tr(Tbar Tbar)      F = tr(T Tbar)

Expanding the three bilinear forms gives the exact identity

    F - (P + P0) / 2 = -1/2 tr[(Tbar - T)^2]

so the residual of the small-error law is never positive and is
quadratic in the deviation of the averaged output.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import noise
from .channels import ParamChannel
from .matcore import hs_product


@dataclass(frozen=True)
class MetricsReport:
    p0: float
    p: float
    f: float
    residual: float
    trace_defect: float
    stderr_p: float
    stderr_f: float
    method: str
    # -1/2 tr[(Tbar - T)^2], computed independently of the three metrics
    residual_identity: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def purity_noiseless(ch: ParamChannel, rho, lam) -> float:
    t = ch.apply(rho, lam)
    return hs_product(t, t)


def _delta_stderr(v: np.ndarray, avg: noise.AveragedOutput, factor: float) -> float:
    # first-order delta method on the linear functional  factor * <v, vec(T_k)>
    if avg.cov is None:
        return 0.0
    if not np.all(np.isfinite(avg.cov)):
        return math.inf
    var = float((v.conj() @ avg.cov @ v).real) * factor**2
    return math.sqrt(max(var, 0.0) / avg.samples)


def _purity_stderr(tbar: np.ndarray, avg: noise.AveragedOutput) -> float:
    se = _delta_stderr(tbar.reshape(-1), avg, 2.0)
    if avg.cov is not None and math.isfinite(se):
        # O(1/n) bias of tr(Tbar^2) from the estimator's own variance
        se += float(np.trace(avg.cov).real) / avg.samples
    return se


def channel_purity(ch, rho, lam, model, spec, threads: int = 1) -> tuple[float, float]:
    """``(P, stderr)`` with ``P = tr(Tbar^2)``."""
    avg = noise.average(ch, rho, lam, model, spec, threads)
    return hs_product(avg.mean, avg.mean), _purity_stderr(avg.mean, avg)


def channel_fidelity(ch, rho, lam, model, spec, threads: int = 1) -> tuple[float, float]:
    """``(F, stderr)`` with ``F = tr(T Tbar)``."""
    t = ch.apply(rho, lam)
    avg = noise.average(ch, rho, lam, model, spec, threads)
    return hs_product(t, avg.mean), _delta_stderr(t.reshape(-1), avg, 1.0)


def report_from_outputs(t: np.ndarray, avg: noise.AveragedOutput) -> MetricsReport:
    """Assemble all metrics from one ideal output and one averaged output."""
    tbar = avg.mean
    p0 = hs_product(t, t)
    p = hs_product(tbar, tbar)
    f = hs_product(t, tbar)
    d = tbar - t
    return MetricsReport(
        p0=p0,
        p=p,
        f=f,
        residual=f - (p + p0) / 2,
        trace_defect=abs(complex(np.trace(tbar)) - 1),
        stderr_p=_purity_stderr(tbar, avg),
        stderr_f=_delta_stderr(t.reshape(-1), avg, 1.0),
        method=avg.method,
        residual_identity=-0.5 * hs_product(d, d),
    )


def evaluate(ch, rho, lam, model, spec, threads: int = 1) -> MetricsReport:
    """All metrics from a single averaging pass."""
    t = ch.apply(rho, lam)
    avg = noise.average(ch, rho, lam, model, spec, threads)
    return report_from_outputs(t, avg)


def identity_tolerance(report: MetricsReport) -> float:
    """Allowed gap between ``residual`` and ``residual_identity``."""
    if report.method == "monte_carlo":
        return max(5 * (report.stderr_p + report.stderr_f), 1e-12)
    return 1e-12
