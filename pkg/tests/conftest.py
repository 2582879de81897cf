import numpy as np
import pytest

from purfid import matcore, perturb

ACCEPTANCE_LINES: list[str] = []
PREDICTOR_LAW_TOL = 1e-14
_PREDICTOR_LAW = {"calls": 0, "worst": 0.0, "violations": 0}


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


@pytest.fixture(autouse=True)
def _check_predictor_law(monkeypatch):
    """Every predictor output in the suite must satisfy f = (p + p0)/2 to 1e-14."""
    original = perturb._output

    def checked(p0, correction, order):
        out = original(p0, correction, order)
        gap = abs(out.f_pred - (out.p_pred + out.p0) / 2)
        _PREDICTOR_LAW["calls"] += 1
        _PREDICTOR_LAW["worst"] = max(_PREDICTOR_LAW["worst"], gap)
        if not gap <= PREDICTOR_LAW_TOL:
            _PREDICTOR_LAW["violations"] += 1
        assert gap <= PREDICTOR_LAW_TOL, f"predictor law violated by {gap:.3e}"
        return out

    monkeypatch.setattr(perturb, "_output", checked)


@pytest.fixture
def predictor_law_stats():
    return _PREDICTOR_LAW


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, dim=2, pure=None):
    """Random density matrix; pure with probability 1/2 unless forced."""
    if pure is None:
        pure = bool(rng.integers(2))
    if pure:
        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return matcore.pure_state(psi)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return matcore.validate_density(m / np.trace(m).real)


def random_hermitian(rng, dim, scale=1.0):
    g = rng.uniform(-scale, scale, size=(dim, dim)) + 1j * rng.uniform(-scale, scale, size=(dim, dim))
    return (g + g.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    stats = _PREDICTOR_LAW
    if stats["calls"]:
        verdict = "PASS" if stats["violations"] == 0 else "FAIL"
        terminalreporter.write_line(
            f"[{verdict}] C7 (whole session) f_pred = (p_pred + P0)/2 on {stats['calls']} "
            f"predictor invocations, worst gap {stats['worst']:.2e}, {stats['violations']} violations"
        )
