"""Shared fixtures: small deterministic datasets and log-file builders."""

import numpy as np
import pytest

from quadpower.core import Dataset, FlightSample
from quadpower.synth import SynthConfig, generate_dataset


def make_sample(**overrides) -> FlightSample:
    base = dict(
        t=0.0, mass=3.68,
        v=(1.0, 0.5, -0.2), a=(0.1, -0.1, 0.05),
        euler=(0.01, -0.02, 1.5), euler_rate=(0.001, 0.002, -0.01),
        wind=(2.0, -1.0), power=350.0,
        flight_id="f0", aircraft="Matrice 100",
    )
    base.update(overrides)
    return FlightSample(**base)


def random_dataset(m: int = 60, seed: int = 0, n_flights: int = 3) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, 15))
    y = 100.0 + 10.0 * X[:, 0] + rng.normal(scale=0.5, size=m)
    fids = tuple(f"f{i % n_flights}" for i in range(m))
    return Dataset(X=X, y=y, flight_ids=fids, t=np.arange(m, dtype=float))


@pytest.fixture(scope="session")
def small_fleet() -> Dataset:
    """A small synthetic fleet for fast integration tests."""
    return generate_dataset(SynthConfig(n_flights=4, seed=7))


def matrice_log_text(duration_s: float = 6.0, flight_id: str = "m100-1",
                     payload_g: float | None = None) -> str:
    """A well-formed Matrice-100-dialect log covering ``duration_s`` seconds."""
    rng = np.random.default_rng(3)
    lines = ["# schema: matrice100", f"# flight_id: {flight_id}"]
    if payload_g is not None:
        lines.append(f"# payload_g: {payload_g:g}")

    lines.append("[kinematic_state @ 10]")
    lines.append("t,v_n,v_e,v_d,a_n,a_e,a_d,roll,pitch,yaw")
    t = np.arange(0.0, duration_s, 0.1)
    for ti in t:
        v = [2.0 + 0.1 * np.sin(ti), 0.5, -0.1]
        a = [0.1 * np.cos(ti), 0.0, 0.0]
        e = [0.02, -0.05, 1.0 + 0.01 * ti]
        lines.append(",".join(repr(float(x)) for x in (ti, *v, *a, *e)))

    lines.append("[wind @ 10]")
    lines.append("t,wind_speed,wind_direction_deg")
    for ti in t:
        lines.append(f"{float(ti)!r},3.0,90.0")

    lines.append("[battery @ 5]")
    lines.append("t,voltage_v,current_a")
    for ti in np.arange(0.0, duration_s, 0.2):
        amps = 16.0 + 0.5 * rng.standard_normal()
        lines.append(f"{float(ti)!r},22.2,{float(amps)!r}")
    return "\n".join(lines) + "\n"


class StubModel:
    """A fixed-output model for analysis tests; predict ignores features."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)

    def predict(self, X):
        return self.values[: np.asarray(X).shape[0]].copy()
