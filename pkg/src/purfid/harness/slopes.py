"""Least-squares convergence orders on log-log axes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class InsufficientPoints(ValueError):
    pass


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    used: tuple[int, ...]
    excluded: tuple[int, ...]


def fit_slope(points: Sequence[tuple[float, float]], floor: float | Sequence[float] = 0.0) -> SlopeFit:
    """Fit ``ln|y| = slope * ln x + intercept``.

    Points with ``|y| <= floor`` (a scalar or one floor per point) are
    excluded and their indices reported in ``excluded``.

    Raises
    ------
    InsufficientPoints
        If fewer than three points survive the floor.
    """
    pts = [(float(x), float(y)) for x, y in points]
    floors = [float(floor)] * len(pts) if np.isscalar(floor) else [float(f) for f in floor]
    if len(floors) != len(pts):
        raise ValueError("need one floor per point")
    used, excluded = [], []
    for k, ((x, y), fl) in enumerate(zip(pts, floors)):
        if x <= 0:
            raise ValueError(f"abscissa must be positive, got {x}")
        (used if math.isfinite(y) and abs(y) > fl else excluded).append(k)
    if len(used) < 3:
        raise InsufficientPoints(f"only {len(used)} point(s) above the noise floor; need 3")
    lx = np.log([pts[k][0] for k in used])
    ly = np.log([abs(pts[k][1]) for k in used])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), r2, tuple(used), tuple(excluded))
