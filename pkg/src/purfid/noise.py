"""Stochastic control errors and the averaged channel output.

A :class:`FluctuationModel` describes ``dlam``; :func:`average` computes
``Tbar = E[T(rho, lam + dlam)]`` with one of three engines:

``monte_carlo``
    sharded, seeded sampling. Shard ``k`` draws from its own stream seeded
    with ``mix64(seed, k)``, shard sums are combined in index order, so
    the result does not depend on the number of worker threads.
``gauss_hermite``
    tensor-product quadrature over the (possibly rank-deficient) Gaussian.
``affine_exact``
    evaluation at the mean, exact when ``T`` is affine in the controls or
    the error is a deterministic shift.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import ParamChannel

KINDS = ("deterministic_shift", "gaussian", "uniform")
METHODS = ("monte_carlo", "gauss_hermite", "affine_exact")

MASK64 = (1 << 64) - 1
MC_CHUNK = 1 << 14
GH_CHUNK = 1 << 17


class IncompatibleMethod(ValueError):
    pass


class CholeskyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FluctuationModel:
    """Distribution of the control error.

    ``scale`` multiplies the mean and the square root of ``cov``:
    ``dlam = scale * mean + scale * L z`` with ``L L^T = cov``.
    """

    kind: str
    mean: np.ndarray
    cov: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fluctuation kind {self.kind!r}; expected one of {KINDS}")
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        n = mean.size
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (n, n):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {n}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-14:
            raise ValueError("covariance is not symmetric")
        if n and np.linalg.eigvalsh((cov + cov.T) / 2)[0] < -1e-12:
            raise ValueError("covariance is not positive semidefinite")
        if self.kind == "deterministic_shift" and np.any(cov != 0):
            raise ValueError("deterministic_shift must have zero covariance")
        if self.kind == "uniform" and np.any(cov[~np.eye(n, dtype=bool)] != 0):
            raise ValueError("uniform noise requires a diagonal covariance")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ValueError(f"scale must be a finite nonnegative number, got {self.scale}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dim(self) -> int:
        return self.mean.size

    def scaled(self, scale: float) -> FluctuationModel:
        return FluctuationModel(self.kind, self.mean, self.cov, scale)

    @property
    def is_zero(self) -> bool:
        return self.scale == 0 or (not np.any(self.mean) and not np.any(self.cov))


def gaussian(sigma=None, mean=None, cov=None, scale: float = 1.0) -> FluctuationModel:
    """Gaussian model from per-parameter ``sigma`` or a full ``cov``."""
    if cov is None:
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        cov = np.diag(sigma**2)
    cov = np.asarray(cov, dtype=float)
    if mean is None:
        mean = np.zeros(cov.shape[0])
    return FluctuationModel("gaussian", mean, cov, scale)


def uniform(sigma, mean=None, scale: float = 1.0) -> FluctuationModel:
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if mean is None:
        mean = np.zeros(sigma.size)
    return FluctuationModel("uniform", mean, np.diag(sigma**2), scale)


def shift(mean, scale: float = 1.0) -> FluctuationModel:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    return FluctuationModel("deterministic_shift", mean, np.zeros((mean.size, mean.size)), scale)


def moments(model: FluctuationModel) -> tuple[np.ndarray, np.ndarray]:
    """``(E[dlam], E[dlam dlam^T])`` including the scale."""
    m = model.scale * model.mean
    return m, model.scale**2 * model.cov + np.outer(m, m)


def psd_cholesky(cov, rtol: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = cov`` for PSD, possibly singular ``cov``.

    Pivots below ``rtol * max(diag)`` are treated as zero; the matching
    column must then vanish too, otherwise the matrix is not PSD.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    L = np.zeros_like(cov)
    tol = rtol * max(float(np.max(np.abs(np.diag(cov)), initial=0.0)), 1e-300)
    for j in range(n):
        d = cov[j, j] - L[j, :j] @ L[j, :j]
        col = cov[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]
        if d < -tol:
            raise CholeskyError(f"covariance not PSD (pivot {j} = {d:.3e})")
        if d <= tol:
            if np.any(np.abs(col) > math.sqrt(tol)):
                raise CholeskyError(f"covariance not PSD (zero pivot {j} with nonzero column)")
            continue
        L[j, j] = math.sqrt(d)
        L[j + 1:, j] = col / L[j, j]
    return L


def mix64(seed: int, k: int) -> int:
    """SplitMix64 output for stream ``k`` of master ``seed``."""
    z = (seed + (k + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream(seed: int, k: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(mix64(seed, k)))


def sample_batch(model: FluctuationModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` draws of ``dlam``, shape ``(n, N)``."""
    shift_ = model.scale * model.mean
    N = model.dim
    if model.scale == 0:
        return np.zeros((n, N))
    if model.kind == "deterministic_shift":
        return np.broadcast_to(shift_, (n, N)).copy()
    if model.kind == "gaussian":
        L = psd_cholesky(model.cov)
        z = rng.standard_normal((n, N))
        return shift_ + model.scale * z @ L.T
    half_width = model.scale * math.sqrt(3.0) * np.sqrt(np.diag(model.cov))
    return shift_ + half_width * rng.uniform(-1.0, 1.0, size=(n, N))


def sample(model: FluctuationModel, rng: np.random.Generator) -> np.ndarray:
    """One draw of ``dlam``."""
    return sample_batch(model, rng, 1)[0]


@dataclass(frozen=True)
class AveragingSpec:
    method: str = "gauss_hermite"
    samples: int = 100_000
    seed: int = 0
    order: int = 20
    shards: int = 8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown averaging method {self.method!r}; expected one of {METHODS}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.order < 1:
            raise ValueError("quadrature order must be positive")
        if self.shards < 1:
            raise ValueError("shard count must be positive")
        if self.method == "monte_carlo" and self.samples < 1:
            raise ValueError("monte_carlo needs at least one sample")


@dataclass(frozen=True, eq=False)
class AveragedOutput:
    """Averaged output plus what the metrics need for error propagation.

    ``cov`` is the sample covariance of ``vec(T_k)`` (Monte Carlo only).
    """

    mean: np.ndarray
    stderr: float
    method: str
    samples: int = 0
    cov: np.ndarray | None = field(default=None, repr=False)


def check_compatible(ch: ParamChannel, model: FluctuationModel, spec: AveragingSpec) -> None:
    if model.dim != ch.arity:
        raise ValueError(f"noise has {model.dim} components, channel arity is {ch.arity}")
    if spec.method == "gauss_hermite" and model.kind not in ("gaussian", "deterministic_shift"):
        raise IncompatibleMethod(f"gauss_hermite requires gaussian noise, got {model.kind}")
    if spec.method == "affine_exact" and not (
        ch.affine_in_controls or model.kind == "deterministic_shift"
    ):
        raise IncompatibleMethod(
            f"affine_exact requires a channel affine in its controls ({ch.kind} is not) "
            "or a deterministic shift"
        )


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _gauss_hermite(ch, rho, lam, model, order):
    L = model.scale * psd_cholesky(model.cov)
    L = L[:, np.any(L != 0, axis=0)]
    center = lam + model.scale * model.mean
    r = L.shape[1]
    if r == 0:
        return ch.apply(rho, center)
    t, w = np.polynomial.hermite.hermgauss(order)
    t = math.sqrt(2.0) * t
    w = w / math.sqrt(math.pi)
    idx = np.indices((order,) * r).reshape(r, -1).T
    weights = np.prod(w[idx], axis=1)
    points = center + t[idx] @ L.T
    total = np.zeros((ch.dim, ch.dim), dtype=complex)
    for start in range(0, len(points), GH_CHUNK):
        sl = slice(start, start + GH_CHUNK)
        total += np.einsum("n,nij->ij", weights[sl], ch.apply_batch(rho, points[sl]))
    return total


def _mc_shard(ch, rho, lam, model, ref, seed, k, n):
    rng = stream(seed, k)
    d2 = ch.dim**2
    s1 = np.zeros(d2, dtype=complex)
    s2 = np.zeros((d2, d2), dtype=complex)
    done = 0
    while done < n:
        m = min(MC_CHUNK, n - done)
        outs = ch.apply_batch(rho, lam + sample_batch(model, rng, m))
        dv = (outs - ref).reshape(m, d2)
        s1 += dv.sum(axis=0)
        s2 += dv.T @ dv.conj()
        done += m
    return s1, s2


def _monte_carlo(ch, rho, lam, model, spec, threads):
    n = spec.samples
    ref = ch.apply(rho, lam)
    counts = [n // spec.shards + (k < n % spec.shards) for k in range(spec.shards)]

    def run(k):
        return _mc_shard(ch, rho, lam, model, ref, spec.seed, k, counts[k])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(spec.shards)))
    else:
        parts = [run(k) for k in range(spec.shards)]
    d2 = ch.dim**2
    s1 = np.zeros(d2, dtype=complex)
    s2 = np.zeros((d2, d2), dtype=complex)
    for a, b in parts:
        s1 += a
        s2 += b
    mean_dev = s1 / n
    if n > 1:
        cov = (s2 - n * np.outer(mean_dev, mean_dev.conj())) / (n - 1)
        stderr = float(np.sqrt(np.max(np.diag(cov).real.clip(min=0)) / n))
    else:
        cov = np.full((d2, d2), np.inf + 0j)
        stderr = math.inf
    return ref + mean_dev.reshape(ch.dim, ch.dim), stderr, cov


def average(
    ch: ParamChannel,
    rho,
    lam,
    model: FluctuationModel,
    spec: AveragingSpec,
    threads: int = 1,
) -> AveragedOutput:
    """Average ``T(rho, lam + dlam)`` over the fluctuation model."""
    check_compatible(ch, model, spec)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if model.scale == 0:
        return AveragedOutput(ch.apply(rho, lam), 0.0, spec.method)
    if spec.method == "affine_exact":
        return AveragedOutput(
            _hermitize(ch.apply(rho, lam + model.scale * model.mean)), 0.0, spec.method
        )
    if spec.method == "gauss_hermite":
        mean = _gauss_hermite(ch, rho, lam, model, spec.order)
        return AveragedOutput(_hermitize(mean), 0.0, spec.method)
    mean, stderr, cov = _monte_carlo(ch, rho, lam, model, spec, threads)
    return AveragedOutput(_hermitize(mean), stderr, spec.method, spec.samples, cov)


def average_output(ch, rho, lam, model, spec, threads: int = 1) -> tuple[np.ndarray, float]:
    """``(Tbar, stderr)``; ``stderr`` is 0 for the deterministic engines."""
    out = average(ch, rho, lam, model, spec, threads)
    return out.mean, out.stderr
