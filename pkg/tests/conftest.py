import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ecgfuse.embedding import TimeSeries
from ecgfuse.synthgen import synth_vcg


def lorenz_x(n=5000, dt=0.01, transient=1000):
    def rhs(_, s):
        x, y, z = s
        return [10.0 * (y - x), x * (28.0 - z) - y, x * y - 8.0 / 3.0 * z]

    t = np.arange(n + transient) * dt
    sol = solve_ivp(rhs, (0, t[-1]), [1.0, 1.0, 1.0], t_eval=t, rtol=1e-10, atol=1e-10, method="DOP853")
    return sol.y[0, transient:]


def logistic(n, r=3.9, x0=0.4, transient=100):
    x = np.empty(n + transient)
    x[0] = x0
    for i in range(1, x.size):
        x[i] = r * x[i - 1] * (1 - x[i - 1])
    return x[transient:]


def sine(n=2000, fs=100.0, f=1.0):
    return TimeSeries(np.sin(2 * np.pi * f * np.arange(n) / fs), fs, "sine")


@pytest.fixture(scope="session")
def lorenz():
    return TimeSeries(lorenz_x(), 100.0, "lorenz_x")


@pytest.fixture(scope="session")
def vcg():
    return synth_vcg(sample_rate_hz=500.0, duration_s=10.0)


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
