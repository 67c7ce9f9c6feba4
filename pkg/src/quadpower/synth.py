"""Deterministic synthetic fleet generator with a physics-style power oracle.

The oracle combines a constant avionics load, actuator-disk induced power
driven by thrust, and cubic parasite drag in airspeed. It is smooth,
strictly positive, and nonlinear in the kinematic features, so the learners
face a realistic estimation problem without any real flight logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, Dataset, FlightSample
from .preprocess import differentiate, samples_to_dataset

G = 9.81

_MANEUVERS = ("hover", "cruise", "climb", "descent", "turn")


@dataclass(frozen=True)
class OraclePcm:
    """Ground-truth power model: avionics + induced + parasite-drag terms."""

    c0_w: float = 30.0            # constant avionics/electronics load
    c1_induced: float = 1.4       # induced-power scale (covers rotor losses)
    c2_parasite: float = 0.08     # parasite drag scale, W per (m/s)^3
    air_density: float = 1.225
    disk_area_m2: float = 0.342   # total rotor disk area

    def __post_init__(self):
        if min(self.c0_w, self.c1_induced, self.c2_parasite,
               self.air_density, self.disk_area_m2) <= 0:
            raise ContractError("oracle coefficients must be positive")

    def power(self, mass, v, a, wind) -> np.ndarray:
        """Instantaneous power in W for arrays of shape (..., 3)/(..., 2)."""
        v = np.asarray(v, dtype=np.float64)
        a = np.asarray(a, dtype=np.float64)
        wind = np.asarray(wind, dtype=np.float64)
        # thrust balances gravity plus the commanded acceleration; positive
        # downward acceleration sheds lift, hence less power
        net = a.copy()
        net[..., 2] -= G
        thrust = np.asarray(mass) * np.sqrt(np.sum(net * net, axis=-1))
        induced = (self.c1_induced * thrust ** 1.5
                   / math.sqrt(2.0 * self.air_density * self.disk_area_m2))
        air = v.copy()
        air[..., 0] -= wind[..., 0]
        air[..., 1] -= wind[..., 1]
        airspeed = np.sqrt(np.sum(air * air, axis=-1))
        return self.c0_w + induced + self.c2_parasite * airspeed ** 3


def oracle_power(sample: FlightSample, pcm: OraclePcm | None = None) -> float:
    pcm = pcm or OraclePcm()
    return float(pcm.power(sample.mass, np.array(sample.v),
                           np.array(sample.a), np.array(sample.wind)))


@dataclass(frozen=True)
class SynthConfig:
    n_flights: int = 20
    duration_range_s: tuple = (240, 400)
    mass_options_kg: tuple = (3.68, 3.93, 4.18, 4.43)
    wind_speed_range_mps: tuple = (0.0, 8.0)
    maneuver_mix: dict = field(default_factory=lambda: {
        "hover": 0.2, "cruise": 0.4, "climb": 0.15,
        "descent": 0.15, "turn": 0.1})
    segment_range_s: tuple = (10, 30)
    noise_std_w: float = 20.0
    seed: int = 0
    aircraft: str = "Synth 100"

    def __post_init__(self):
        if self.n_flights < 1:
            raise ContractError("need at least one flight")
        if self.duration_range_s[0] < 10 or \
                self.duration_range_s[0] > self.duration_range_s[1]:
            raise ContractError("bad duration range")
        if any(m <= 0 for m in self.mass_options_kg):
            raise ContractError("masses must be positive")
        if self.noise_std_w < 0:
            raise ContractError("noise std must be non-negative")
        if set(self.maneuver_mix) - set(_MANEUVERS):
            raise ContractError(f"maneuvers must be among {_MANEUVERS}")
        if abs(sum(self.maneuver_mix.values()) - 1.0) > 1e-9:
            raise ContractError("maneuver mix fractions must sum to 1")


def _smooth(x: np.ndarray, width: float = 3.0) -> np.ndarray:
    """Gaussian smoothing with edge padding; keeps length."""
    half = int(math.ceil(3 * width))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / width) ** 2)
    k /= k.sum()
    padded = np.concatenate([np.full(half, x[0]), x, np.full(half, x[-1])])
    return np.convolve(padded, k, mode="valid")


def _flight_profile(duration: int, cfg: SynthConfig, rng: np.random.Generator):
    """Per-second target velocity and heading from a random maneuver plan."""
    names = list(cfg.maneuver_mix)
    probs = np.array([cfg.maneuver_mix[n] for n in names])
    heading = rng.uniform(-math.pi, math.pi)
    speed = 0.0
    v_target = np.zeros((duration, 3))
    head_target = np.zeros(duration)
    t = 0
    while t < duration:
        seg = int(rng.integers(cfg.segment_range_s[0],
                               cfg.segment_range_s[1] + 1))
        seg = min(seg, duration - t)
        maneuver = names[int(rng.choice(len(names), p=probs))]
        vd = 0.0
        if maneuver == "hover":
            speed = 0.0
        elif maneuver == "cruise":
            speed = rng.uniform(4.0, 14.0)
        elif maneuver == "climb":
            speed = rng.uniform(0.0, 6.0)
            vd = -rng.uniform(1.0, 4.0)   # NED: climbing is negative v_d
        elif maneuver == "descent":
            speed = rng.uniform(0.0, 6.0)
            vd = rng.uniform(1.0, 3.0)
        else:  # turn: sweep the heading at constant speed
            speed = max(speed, rng.uniform(3.0, 8.0))
            turn_rate = rng.uniform(-0.3, 0.3)
            for i in range(seg):
                heading += turn_rate
                v_target[t + i] = (speed * math.cos(heading),
                                   speed * math.sin(heading), 0.0)
                head_target[t + i] = heading
            t += seg
            continue
        v_target[t:t + seg] = (speed * math.cos(heading),
                               speed * math.sin(heading), vd)
        head_target[t:t + seg] = heading
        t += seg
    return v_target, head_target


def _generate_flight(cfg: SynthConfig, pcm: OraclePcm, flight_id: str,
                     seed) -> list[FlightSample]:
    rng = np.random.default_rng(seed)
    duration = int(rng.integers(cfg.duration_range_s[0],
                                cfg.duration_range_s[1] + 1))
    mass = float(rng.choice(np.asarray(cfg.mass_options_kg)))
    wind_speed = rng.uniform(*cfg.wind_speed_range_mps)
    wind_dir = rng.uniform(-math.pi, math.pi)
    wind = np.array([wind_speed * math.cos(wind_dir),
                     wind_speed * math.sin(wind_dir)])

    t = np.arange(duration, dtype=np.float64)
    v_target, head_target = _flight_profile(duration, cfg, rng)
    v = np.column_stack([_smooth(v_target[:, j]) for j in range(3)])
    a = np.column_stack([differentiate(t, v[:, j]) for j in range(3)])
    yaw = _smooth(head_target)

    # tilt follows the horizontal force demand: inertial + drag
    air_h = v[:, :2] - wind
    drag = 0.1 * np.linalg.norm(air_h, axis=1, keepdims=True) * air_h
    f_h = mass * a[:, :2] + drag
    cos_y, sin_y = np.cos(yaw), np.sin(yaw)
    f_fwd = cos_y * f_h[:, 0] + sin_y * f_h[:, 1]
    f_side = -sin_y * f_h[:, 0] + cos_y * f_h[:, 1]
    pitch = -np.arctan2(f_fwd, mass * G)
    roll = np.arctan2(f_side, mass * G)

    rates = np.column_stack([differentiate(t, roll),
                             differentiate(t, pitch),
                             differentiate(t, yaw)])
    wind_full = np.broadcast_to(wind, (duration, 2))
    power = pcm.power(mass, v, a, wind_full)
    power = power + rng.normal(0.0, cfg.noise_std_w, duration)

    yaw_wrapped = (yaw + math.pi) % (2 * math.pi) - math.pi
    samples = []
    for i in range(duration):
        samples.append(FlightSample(
            t=float(t[i]), mass=mass,
            v=tuple(v[i]), a=tuple(a[i]),
            euler=(float(roll[i]), float(pitch[i]), float(yaw_wrapped[i])),
            euler_rate=tuple(rates[i]),
            wind=tuple(wind),
            power=float(power[i]),
            flight_id=flight_id,
            aircraft=cfg.aircraft,
        ))
    return samples


def generate_fleet(cfg: SynthConfig | None = None,
                   pcm: OraclePcm | None = None) -> list[list[FlightSample]]:
    """Seed-deterministic list of flights; power = oracle + Gaussian noise."""
    cfg = cfg or SynthConfig()
    pcm = pcm or OraclePcm()
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_flights)
    flights = []
    for i, s in enumerate(seeds):
        flights.append(_generate_flight(cfg, pcm, f"synth-{i:04d}", s))
    return flights


def fleet_dataset(flights: list[list[FlightSample]]) -> Dataset:
    return samples_to_dataset([s for fl in flights for s in fl])


def generate_dataset(cfg: SynthConfig | None = None,
                     pcm: OraclePcm | None = None) -> Dataset:
    return fleet_dataset(generate_fleet(cfg, pcm))
