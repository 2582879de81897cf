"""Flat ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment, section names are dotted::

    channel.kind = ion_trap
    controls = 1.0, 0.3
    state.bloch = 0, 0, 1
    noise.kind = gaussian
    noise.sigma = 1, 1
    average.method = gauss_hermite
    sweep = 0.02, 0.04, 0.06

Matrix entries are addressed by index, e.g. ``noise.cov.0.1``,
``state.rho.1.0`` or ``channel.h.0.1``. Custom-channel Kraus polynomials
use ``channel.kraus.<k>.e<exponents>.<row>.<col>`` where ``<exponents>``
has one digit per control parameter (``e10`` is ``lam_1^1 lam_2^0``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import channels, matcore, noise

PREDICT_METHODS = ("generic", "closed_form")
FORMATS = ("csv", "json")
CHANNEL_KINDS = ("ion_trap", "depolarizing", "unitary_generator", "custom")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _str(v):
    return v


def _int(v):
    return int(v, 0)


def _float(v):
    x = float(v)
    if not np.isfinite(x):
        raise ValueError("not finite")
    return x


def _bool(v):
    lowered = v.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError("expected true/false")


def _complex(v):
    z = complex(v.replace(" ", ""))
    if not np.isfinite(z):
        raise ValueError("not finite")
    return z


def _floats(v):
    return [_float(x) for x in v.split(",")]


def _choice(options):
    def parse(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


SCALAR_KEYS = {
    "name": _str,
    "channel.kind": _choice(CHANNEL_KINDS),
    "channel.strict": _bool,
    "channel.p": _floats,
    "channel.dim": _int,
    "channel.arity": _int,
    "state.bloch": _floats,
    "state.dim": _int,
    "controls": _floats,
    "noise.kind": _choice(noise.KINDS),
    "noise.mean": _floats,
    "noise.sigma": _floats,
    "average.method": _choice(noise.METHODS),
    "average.samples": _int,
    "average.seed": _int,
    "average.order": _int,
    "average.shards": _int,
    "predict.method": _choice(PREDICT_METHODS),
    "predict.h1": _float,
    "predict.h2": _float,
    "sweep": _floats,
    "output.path": _str,
    "output.format": _choice(FORMATS),
}

INDEXED_KEYS = [
    (re.compile(r"noise\.cov\.(\d+)\.(\d+)$"), _float),
    (re.compile(r"state\.rho\.(\d+)\.(\d+)$"), _complex),
    (re.compile(r"channel\.h\.(\d+)\.(\d+)$"), _complex),
    (re.compile(r"channel\.kraus\.(\d+)\.e(\d+)\.(\d+)\.(\d+)$"), _complex),
]


@dataclass
class ExperimentConfig:
    channel: channels.ParamChannel
    rho: matcore.DensityMatrix
    controls: np.ndarray
    noise: noise.FluctuationModel
    averaging: noise.AveragingSpec
    sweep: tuple[float, ...]
    predict_method: str = "generic"
    h1: float = 1e-4
    h2: float = 1e-3
    output_path: str | None = None
    output_format: str | None = None
    name: str = ""
    raw: dict = field(default_factory=dict, repr=False)


def _lex(text: str) -> dict[str, tuple[object, int]]:
    values: dict[str, tuple[object, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in content.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate assignment (first on line {values[key][1]})", lineno, key)
        if not value:
            raise ConfigError("empty value", lineno, key)
        parser = SCALAR_KEYS.get(key)
        if parser is None:
            for pattern, p in INDEXED_KEYS:
                if pattern.match(key):
                    parser = p
                    break
        if parser is None:
            raise ConfigError("unknown key", lineno, key)
        try:
            values[key] = (parser(value), lineno)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r} ({exc})", lineno, key) from None
    return values


class _Reader:
    def __init__(self, values):
        self.values = values

    def line(self, key):
        return self.values[key][1] if key in self.values else None

    def get(self, key, default=None):
        return self.values[key][0] if key in self.values else default

    def require(self, key):
        if key not in self.values:
            raise ConfigError("missing required key", key=key)
        return self.values[key][0]

    def fail(self, key, message):
        raise ConfigError(message, line=self.line(key), key=key)

    def indexed(self, prefix):
        """``{index tuple: value}`` for keys under ``prefix``."""
        out = {}
        for key, (value, _) in self.values.items():
            if key.startswith(prefix + "."):
                out[tuple(key[len(prefix) + 1:].split("."))] = (key, value)
        return out

    def matrix(self, prefix, dim, dtype):
        m = np.zeros((dim, dim), dtype=dtype)
        for (i, j), (key, value) in self.indexed(prefix).items():
            i, j = int(i), int(j)
            if i >= dim or j >= dim:
                self.fail(key, f"index out of range for dimension {dim}")
            m[i, j] = value
        return m


def _channel(r: _Reader) -> channels.ParamChannel:
    kind = r.require("channel.kind")
    own = {
        "ion_trap": set(),
        "depolarizing": {"channel.p", "channel.strict"},
        "unitary_generator": {"channel.dim"},
        "custom": {"channel.dim", "channel.arity"},
    }[kind]
    for key in r.values:
        if key.startswith("channel.") and key != "channel.kind":
            allowed = key in own or (
                (kind == "unitary_generator" and key.startswith("channel.h."))
                or (kind == "custom" and key.startswith("channel.kraus."))
            )
            if not allowed:
                r.fail(key, f"not applicable to channel kind {kind}")
    try:
        if kind == "ion_trap":
            return channels.ion_trap_channel()
        if kind == "depolarizing":
            p = r.get("channel.p")
            if p is not None and len(p) != 4:
                r.fail("channel.p", "depolarizing needs four probabilities")
            return channels.depolarizing_channel(p, strict=r.get("channel.strict", False))
        dim = r.require("channel.dim")
        if dim < 1:
            r.fail("channel.dim", "dimension must be positive")
        if kind == "unitary_generator":
            return channels.unitary_generator_channel(r.matrix("channel.h", dim, complex))
        arity = r.require("channel.arity")
        if arity < 1:
            r.fail("channel.arity", "arity must be positive")
        kraus: dict[int, dict] = {}
        for (k, exps, i, j), (key, value) in r.indexed("channel.kraus").items():
            exps = exps[1:]
            if len(exps) != arity:
                r.fail(key, f"exponent string needs {arity} digits")
            i, j = int(i), int(j)
            if i >= dim or j >= dim:
                r.fail(key, f"index out of range for dimension {dim}")
            terms = kraus.setdefault(int(k), {})
            mat = terms.setdefault(tuple(int(e) for e in exps), np.zeros((dim, dim), complex))
            mat[i, j] = value
        if not kraus:
            raise ConfigError("custom channel needs channel.kraus entries", key="channel.kraus")
        return channels.custom_channel(dim, arity, [kraus[k] for k in sorted(kraus)])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), line=r.line("channel.kind"), key="channel.kind") from None


def _state(r: _Reader) -> matcore.DensityMatrix:
    has_bloch = "state.bloch" in r.values
    has_rho = bool(r.indexed("state.rho"))
    if has_bloch == has_rho:
        raise ConfigError("give exactly one of state.bloch or state.rho.<i>.<j>", key="state")
    try:
        if has_bloch:
            v = r.get("state.bloch")
            if len(v) != 3:
                r.fail("state.bloch", "Bloch vector needs three components")
            return matcore.bloch_to_density(v)
        dim = r.require("state.dim")
        return matcore.validate_density(r.matrix("state.rho", dim, complex))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), key="state.bloch" if has_bloch else "state.rho") from None


def _noise(r: _Reader, arity: int) -> noise.FluctuationModel:
    kind = r.require("noise.kind")
    mean = r.get("noise.mean", [0.0] * arity)
    if len(mean) != arity:
        r.fail("noise.mean", f"has {len(mean)} components, channel arity is {arity}")
    sigma = r.get("noise.sigma")
    cov_entries = r.indexed("noise.cov")
    if sigma is not None and cov_entries:
        r.fail("noise.sigma", "give noise.sigma or noise.cov entries, not both")
    if sigma is not None:
        if len(sigma) != arity:
            r.fail("noise.sigma", f"has {len(sigma)} components, channel arity is {arity}")
        if min(sigma) < 0:
            r.fail("noise.sigma", "standard deviations must be nonnegative")
        cov = np.diag(np.square(sigma))
    else:
        cov = np.zeros((arity, arity))
        for (i, j), (key, value) in cov_entries.items():
            i, j = int(i), int(j)
            if i >= arity or j >= arity:
                r.fail(key, f"index out of range for arity {arity}")
            mirror = f"noise.cov.{j}.{i}"
            if mirror in r.values and r.get(mirror) != value:
                r.fail(key, f"asymmetric with {mirror}")
            cov[i, j] = cov[j, i] = value
    if kind == "deterministic_shift":
        if sigma is not None or cov_entries:
            r.fail("noise.kind", "deterministic_shift takes no spread")
        if "noise.mean" not in r.values:
            r.fail("noise.kind", "deterministic_shift needs noise.mean")
    elif sigma is None and not cov_entries:
        r.fail("noise.kind", f"{kind} noise needs noise.sigma or noise.cov entries")
    try:
        return noise.FluctuationModel(kind, mean, cov, 1.0)
    except ValueError as exc:
        raise ConfigError(str(exc), line=r.line("noise.kind"), key="noise") from None


def _default_method(ch, model) -> str:
    if model.kind == "deterministic_shift" or ch.affine_in_controls:
        return "affine_exact"
    if model.kind == "gaussian":
        return "gauss_hermite"
    return "monte_carlo"


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate an experiment configuration.

    Raises
    ------
    ConfigError
        With the offending line and key wherever they are known.
    """
    r = _Reader(_lex(text))
    ch = _channel(r)
    rho = _state(r)
    if rho.dim != ch.dim:
        raise ConfigError(f"state dimension {rho.dim} does not match channel dimension {ch.dim}",
                          key="state")

    controls = r.get("controls")
    if controls is None and isinstance(ch, channels.DepolarizingChannel) and ch.baseline is not None:
        controls = list(ch.baseline)
    if controls is None:
        raise ConfigError("missing required key", key="controls")
    if len(controls) != ch.arity:
        r.fail("controls", f"has {len(controls)} components, channel arity is {ch.arity}")

    model = _noise(r, ch.arity)

    method = r.get("average.method") or _default_method(ch, model)
    defaults = noise.AveragingSpec()
    try:
        spec = noise.AveragingSpec(
            method=method,
            samples=r.get("average.samples", defaults.samples),
            seed=r.get("average.seed", defaults.seed),
            order=r.get("average.order", defaults.order),
            shards=r.get("average.shards", defaults.shards),
        )
        noise.check_compatible(ch, model, spec)
    except ValueError as exc:
        raise ConfigError(str(exc), line=r.line("average.method"), key="average") from None

    sweep = r.require("sweep")
    if any(s <= 0 for s in sweep):
        r.fail("sweep", "scales must be > 0")
    if any(b <= a for a, b in zip(sweep, sweep[1:])):
        r.fail("sweep", "scales must be strictly increasing")

    predict_method = r.get("predict.method", "generic")
    if predict_method == "closed_form":
        if ch.kind not in ("ion_trap", "depolarizing"):
            r.fail("predict.method", f"no closed-form predictor for channel kind {ch.kind}")
        if ch.kind == "ion_trap" and np.any(model.mean != 0):
            r.fail("predict.method", "the ion-trap closed form needs zero-mean noise")
    h1 = r.get("predict.h1", 1e-4)
    h2 = r.get("predict.h2", 1e-3)
    for key, h in (("predict.h1", h1), ("predict.h2", h2)):
        if h <= 0:
            r.fail(key, "finite-difference step must be positive")

    return ExperimentConfig(
        channel=ch,
        rho=rho,
        controls=np.asarray(controls, dtype=float),
        noise=model,
        averaging=spec,
        sweep=tuple(sweep),
        predict_method=predict_method,
        h1=h1,
        h2=h2,
        output_path=r.get("output.path"),
        output_format=r.get("output.format"),
        name=r.get("name", ""),
        raw={k: v for k, (v, _) in r.values.items()},
    )


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
