"""Raw multi-rate channels -> clean 1 Hz flight samples.

Pipeline order: median filter at native rate, derive velocities/rates by
time-differentiation, align everything to 1 second bins, then drop samples at
or below the power floor. Denoising precedes differentiation because
differentiation amplifies sensor noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, FlightSample, Dataset, FEATURE_COLUMNS
from .ingest import ParsedLog, RawChannel

logger = logging.getLogger(__name__)

# Canonical per-second field names a flight needs before assembly.
_SAMPLE_FIELDS = ("v_n", "v_e", "v_d", "a_n", "a_e", "a_d",
                  "roll", "pitch", "yaw",
                  "roll_rate", "pitch_rate", "yaw_rate",
                  "w_n", "w_e", "power_w")


@dataclass(frozen=True)
class FilterConfig:
    median_window: int = 5
    align_step: float = 1.0  # fixed; the pipeline is defined at 1 Hz
    power_floor: float = 20.0
    wind_convention: str = "from"  # meteorological from-bearing; or "to"
    unwrap_angles: bool = True

    def __post_init__(self):
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ContractError("median_window must be an odd integer >= 3")
        if self.power_floor < 0:
            raise ContractError("power_floor must be non-negative")
        if self.align_step != 1.0:
            raise ContractError("align_step is fixed at 1.0 s")
        if self.wind_convention not in ("from", "to"):
            raise ContractError("wind_convention must be 'from' or 'to'")


def median_filter(series, window: int) -> np.ndarray:
    """Running median with a shrunken symmetric window at the edges."""
    x = np.asarray(series, dtype=np.float64)
    if window % 2 == 0:
        raise ContractError(f"median window must be odd, got {window}")
    n = x.size
    if window > n:
        raise ContractError(f"window {window} exceeds series length {n}")
    if window == 1 or n == 0:
        return x.copy()
    half = window // 2
    out = np.empty_like(x)
    core = np.lib.stride_tricks.sliding_window_view(x, window)
    out[half:n - half] = np.median(core, axis=1)
    for i in range(half):
        h = min(i, n - 1 - i)
        out[i] = np.median(x[i - h:i + h + 1])
        j = n - 1 - i
        h = min(j, n - 1 - j)
        out[j] = np.median(x[j - h:j + h + 1])
    return out


def differentiate(t, x) -> np.ndarray:
    """Time derivative: central differences inside, one-sided at the ends."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if t.shape != x.shape or t.ndim != 1:
        raise ContractError("t and x must be 1-d sequences of equal length")
    if t.size < 2:
        raise ContractError("need at least 2 points to differentiate")
    dt = np.diff(t)
    if np.any(dt <= 0):
        bad = int(np.flatnonzero(dt <= 0)[0])
        raise ContractError(f"timestamps not strictly increasing at index {bad + 1}")
    out = np.empty_like(x)
    out[0] = (x[1] - x[0]) / (t[1] - t[0])
    out[-1] = (x[-1] - x[-2]) / (t[-1] - t[-2])
    if t.size > 2:
        out[1:-1] = (x[2:] - x[:-2]) / (t[2:] - t[:-2])
    return out


def _bin_means(ts: np.ndarray, vals: np.ndarray, seconds: np.ndarray):
    """Mean of vals per [k, k+1) bin; returns (means, counts), NaN where empty."""
    k0 = int(seconds[0])
    idx = np.floor(ts).astype(np.int64) - k0
    keep = (idx >= 0) & (idx < seconds.size)
    idx = idx[keep]
    vals = vals[keep]
    counts = np.bincount(idx, minlength=seconds.size)
    means = np.full((seconds.size, vals.shape[1]), np.nan)
    for c in range(vals.shape[1]):
        sums = np.bincount(idx, weights=vals[:, c], minlength=seconds.size)
        nz = counts > 0
        means[nz, c] = sums[nz] / counts[nz]
    return means, counts


def align_1hz(channels: list[RawChannel], mass: float, flight_id: str,
              aircraft: str = "unknown") -> list[FlightSample]:
    """Bin canonical channels into 1 s means and assemble flight samples.

    The channels must jointly provide every field in ``_SAMPLE_FIELDS``.
    Seconds where any channel has an empty bin are dropped.
    """
    if not channels:
        raise ContractError("no channels to align")
    start = max(ch.timestamps[0] for ch in channels)
    end = min(ch.timestamps[-1] for ch in channels)
    k0, k1 = math.ceil(start), math.floor(end)
    if end - start < 2:
        raise ContractError("channels share no common span of at least 2 s")
    seconds = np.arange(k0, k1 + 1, dtype=np.int64)

    fields: dict[str, np.ndarray] = {}
    valid = np.ones(seconds.size, dtype=bool)
    for ch in channels:
        means, counts = _bin_means(ch.timestamps, ch.values, seconds)
        valid &= counts > 0
        for j, name in enumerate(ch.fields):
            fields[name] = means[:, j]
    missing = [f for f in _SAMPLE_FIELDS if f not in fields]
    if missing:
        raise ContractError(f"aligned channels lack fields {missing}")

    samples = []
    t0 = seconds[valid][0] if valid.any() else 0
    for i in np.flatnonzero(valid):
        g = {f: float(fields[f][i]) for f in _SAMPLE_FIELDS}
        samples.append(FlightSample(
            t=float(seconds[i] - t0),
            mass=mass,
            v=(g["v_n"], g["v_e"], g["v_d"]),
            a=(g["a_n"], g["a_e"], g["a_d"]),
            euler=(_wrap_angle(g["roll"]), _wrap_angle(g["pitch"]),
                   _wrap_angle(g["yaw"])),
            euler_rate=(g["roll_rate"], g["pitch_rate"], g["yaw_rate"]),
            wind=(g["w_n"], g["w_e"]),
            power=g["power_w"],
            flight_id=flight_id,
            aircraft=aircraft,
        ))
    return samples


def _wrap_angle(a: float) -> float:
    return float((a + math.pi) % (2.0 * math.pi) - math.pi)


def apply_power_floor(samples: list[FlightSample],
                      floor: float = 20.0) -> list[FlightSample]:
    """Drop samples at or below the power floor (aircraft on ground/idle)."""
    kept = [s for s in samples if s.power > floor]
    dropped = len(samples) - len(kept)
    if dropped:
        logger.warning("power floor %.1f W removed %d of %d samples",
                       floor, dropped, len(samples))
    return kept


def wind_components(speed, direction_deg, convention: str = "from"):
    """(w_n, w_e) from wind speed and bearing in degrees.

    'from' is the meteorological convention: the bearing the wind blows from,
    so the velocity vector points the opposite way.
    """
    d = np.deg2rad(np.asarray(direction_deg, dtype=np.float64))
    s = np.asarray(speed, dtype=np.float64)
    sign = -1.0 if convention == "from" else 1.0
    return sign * s * np.cos(d), sign * s * np.sin(d)


def _derived_channels(log: ParsedLog, cfg: FilterConfig) -> list[RawChannel]:
    """Median-filter raw channels and derive the canonical per-field channels."""
    filt = {}
    for ch in log.channels:
        cols = [median_filter(ch.values[:, j], min(cfg.median_window,
                                                   _odd_cap(ch.values.shape[0])))
                for j in range(ch.values.shape[1])]
        filt[ch.name] = ch.with_values(np.column_stack(cols))

    out: list[RawChannel] = []
    if log.schema in ("mavic_pro", "inspire"):
        gps = filt["gps_position"]
        t = gps.timestamps
        v = np.column_stack([differentiate(t, gps.column(c))
                             for c in ("x_n", "x_e", "x_d")])
        a = np.column_stack([differentiate(t, v[:, j]) for j in range(3)])
        out.append(RawChannel("velocity", gps.rate_hz, t,
                              ("v_n", "v_e", "v_d"), v))
        out.append(RawChannel("acceleration", gps.rate_hz, t,
                              ("a_n", "a_e", "a_d"), a))
        imu = filt["imu"]
        out.append(_euler_channels(imu, cfg))
    else:  # matrice100: kinematics pre-filtered upstream, velocities given
        kin = filt["kinematic_state"]
        out.append(RawChannel("velocity", kin.rate_hz, kin.timestamps,
                              ("v_n", "v_e", "v_d"),
                              np.column_stack([kin.column(c)
                                               for c in ("v_n", "v_e", "v_d")])))
        out.append(RawChannel("acceleration", kin.rate_hz, kin.timestamps,
                              ("a_n", "a_e", "a_d"),
                              np.column_stack([kin.column(c)
                                               for c in ("a_n", "a_e", "a_d")])))
        out.append(_euler_channels(kin, cfg))

    wind = filt["wind"]
    w_n, w_e = wind_components(wind.column("wind_speed"),
                               wind.column("wind_direction_deg"),
                               cfg.wind_convention)
    out.append(RawChannel("wind_ne", wind.rate_hz, wind.timestamps,
                          ("w_n", "w_e"), np.column_stack([w_n, w_e])))
    bat = filt["battery"]
    p = bat.column("voltage_v") * bat.column("current_a")
    out.append(RawChannel("power", bat.rate_hz, bat.timestamps,
                          ("power_w",), p.reshape(-1, 1)))
    return out


def _odd_cap(n: int) -> int:
    return n if n % 2 == 1 else n - 1


def _euler_channels(src: RawChannel, cfg: FilterConfig) -> RawChannel:
    """Angles plus angular rates; angles unwrapped before differentiation."""
    t = src.timestamps
    angles = np.column_stack([src.column(c) for c in ("roll", "pitch", "yaw")])
    if cfg.unwrap_angles:
        angles = np.unwrap(angles, axis=0)
    rates = np.column_stack([differentiate(t, angles[:, j]) for j in range(3)])
    return RawChannel("attitude", src.rate_hz, t,
                      ("roll", "pitch", "yaw",
                       "roll_rate", "pitch_rate", "yaw_rate"),
                      np.column_stack([angles, rates]))


def preprocess_log(log: ParsedLog, cfg: FilterConfig | None = None
                   ) -> list[FlightSample]:
    """Run the full cleaning pipeline on one parsed flight log."""
    cfg = cfg or FilterConfig()
    channels = _derived_channels(log, cfg)
    samples = align_1hz(channels, log.mass_kg(), log.flight_id,
                        log.aircraft.name)
    return apply_power_floor(samples, cfg.power_floor)


def to_feature_matrix(samples: list[FlightSample]):
    """Stack samples into the fixed-order (m x 15) matrix and power targets."""
    if not samples:
        raise ContractError("no samples to convert")
    X = np.empty((len(samples), len(FEATURE_COLUMNS)))
    y = np.empty(len(samples))
    for i, s in enumerate(samples):
        row = s.feature_row()
        if not np.isfinite(row).all():
            j = int(np.flatnonzero(~np.isfinite(row))[0])
            raise ContractError(
                f"sample {i}: non-finite field {FEATURE_COLUMNS[j]!r}")
        if not math.isfinite(s.power):
            raise ContractError(f"sample {i}: non-finite field 'power'")
        X[i] = row
        y[i] = s.power
    return X, y


def samples_to_dataset(samples: list[FlightSample]) -> Dataset:
    X, y = to_feature_matrix(samples)
    return Dataset(X=X, y=y,
                   flight_ids=tuple(s.flight_id for s in samples),
                   t=np.array([s.t for s in samples]),
                   aircraft=tuple(s.aircraft for s in samples))


def correlation_heatmap(X, y) -> np.ndarray:
    """16x16 Pearson correlation matrix of the 15 features plus power.

    Entries involving a constant column are NaN (undefined correlation).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    if X.shape[0] < 3:
        raise ContractError("need at least 3 rows for correlation analysis")
    Z = np.hstack([X, y])
    sd = Z.std(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.corrcoef(Z, rowvar=False)
    C[sd == 0, :] = np.nan
    C[:, sd == 0] = np.nan
    ok = sd > 0
    C[np.ix_(ok, ok)] = np.clip(C[np.ix_(ok, ok)], -1.0, 1.0)
    np.fill_diagonal(C, np.where(ok, 1.0, np.nan))
    return C
