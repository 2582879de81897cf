"""Scale sweeps: metrics and predictors row by row, plus fitted orders."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import metrics, noise, perturb
from .config import ExperimentConfig
from .slopes import InsufficientPoints, SlopeFit, fit_slope

log = logging.getLogger(__name__)

COLUMNS = (
    "scale", "p0", "p", "f", "residual", "stderr_p", "stderr_f", "trace_defect",
    "p_pred", "f_pred", "pred_defect_p", "pred_defect_f",
)

# fitted quantity -> how to read it off a row
SLOPE_QUANTITIES = {
    "residual": lambda row: row["residual"],
    "p0_minus_p": lambda row: row["p0"] - row["p"],
    "pred_defect_p": lambda row: row["pred_defect_p"],
    "pred_defect_f": lambda row: row["pred_defect_f"],
}

DETERMINISTIC_FLOOR = 1e-13


class NumericalInvariantError(RuntimeError):
    """A computed row violates an identity that must hold exactly."""


class SweepError(RuntimeError):
    def __init__(self, scale: float, cause: Exception):
        self.scale = scale
        super().__init__(f"at scale {scale!r}: {cause}")


@dataclass
class SweepReport:
    rows: list[dict]
    slopes: dict[str, SlopeFit | None] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def noise_floor(row: dict) -> float:
    """Monte Carlo rows: 100x the estimator noise; deterministic rows: 1e-13."""
    est = row["stderr_p"] + row["stderr_f"]
    return 100 * est if est > 0 else DETERMINISTIC_FLOOR


def fit_report_slopes(rows: list[dict]) -> dict[str, SlopeFit | None]:
    out: dict[str, SlopeFit | None] = {}
    floors = [noise_floor(row) for row in rows]
    for name, getter in SLOPE_QUANTITIES.items():
        points = [(row["scale"], getter(row)) for row in rows]
        try:
            out[name] = fit_slope(points, floors)
        except InsufficientPoints:
            out[name] = None
    return out


def _predict(cfg: ExperimentConfig, model) -> perturb.PredictorOutput:
    if cfg.predict_method == "closed_form":
        if cfg.channel.kind == "ion_trap":
            return perturb.ion_trap_predict(cfg.rho, cfg.controls[0], cfg.controls[1], model)
        mean, _ = noise.moments(model)
        return perturb.depolarizing_predict(cfg.rho, cfg.controls, mean)
    return perturb.predict(cfg.channel, cfg.rho, cfg.controls, model, cfg.h1, cfg.h2)


def evaluate_row(cfg: ExperimentConfig, scale: float, threads: int = 1) -> dict:
    model = cfg.noise.scaled(scale)
    try:
        rep = metrics.evaluate(cfg.channel, cfg.rho, cfg.controls, model, cfg.averaging, threads)
        pred = _predict(cfg, model)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise SweepError(scale, exc) from exc
    tol = metrics.identity_tolerance(rep)
    gap = abs(rep.residual - rep.residual_identity)
    if not gap <= tol:
        raise NumericalInvariantError(
            f"at scale {scale!r}: residual {rep.residual:.17g} differs from "
            f"-1/2 tr[(Tbar - T)^2] = {rep.residual_identity:.17g} by {gap:.3e} (> {tol:.1e})"
        )
    return {
        "scale": float(scale),
        "p0": rep.p0,
        "p": rep.p,
        "f": rep.f,
        "residual": rep.residual,
        "stderr_p": rep.stderr_p,
        "stderr_f": rep.stderr_f,
        "trace_defect": rep.trace_defect,
        "p_pred": pred.p_pred,
        "f_pred": pred.f_pred,
        "pred_defect_p": abs(rep.p - pred.p_pred),
        "pred_defect_f": abs(rep.f - pred.f_pred),
    }


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepReport:
    """Evaluate every sweep scale in order and fit the convergence orders."""
    rows = []
    for scale in cfg.sweep:
        log.debug("evaluating scale %g", scale)
        rows.append(evaluate_row(cfg, scale, threads))
    meta = {
        "name": cfg.name,
        "channel": cfg.channel.kind,
        "noise": cfg.noise.kind,
        "method": cfg.averaging.method,
        "predictor": cfg.predict_method,
    }
    if cfg.averaging.method == "monte_carlo":
        meta.update(samples=cfg.averaging.samples, seed=cfg.averaging.seed,
                    shards=cfg.averaging.shards)
    elif cfg.averaging.method == "gauss_hermite":
        meta["order"] = cfg.averaging.order
    return SweepReport(rows, fit_report_slopes(rows), meta)
