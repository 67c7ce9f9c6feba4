"""Flight-log parsing for the three supported tabular log dialects.

A log file is sectioned delimiter-separated text: comment lines starting with
``#`` carry ``key: value`` metadata (schema, flight_id, optional payload_g),
and each channel section opens with ``[name @ rate_hz]`` followed by a CSV
header row and data rows. Column dictionaries per schema are in ``SCHEMAS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import ContractError


class LogFormatError(ValueError):
    """Raised for malformed or unsupported flight-log files."""


@dataclass(frozen=True)
class AircraftSpec:
    name: str
    empty_weight_g: float
    payload_options_g: frozenset
    max_speed_mps: float
    max_ascent_mps: float
    max_descent_mps: float
    max_flight_time_min: float

    def __post_init__(self):
        if min(self.empty_weight_g, self.max_speed_mps, self.max_ascent_mps,
               self.max_descent_mps, self.max_flight_time_min) <= 0:
            raise ContractError("aircraft spec values must be positive")
        if any(p < 0 for p in self.payload_options_g):
            raise ContractError("payload options must be non-negative")

    def mass_kg(self, payload_g: float = 0.0) -> float:
        """Take-off mass in kg; battery mass change during flight is ignored."""
        if payload_g not in self.payload_options_g:
            raise ContractError(
                f"payload {payload_g} g not offered by {self.name}: "
                f"{sorted(self.payload_options_g)}")
        return (self.empty_weight_g + payload_g) / 1000.0


_BUILTIN = (
    AircraftSpec("Mavic Pro", 734, frozenset({0.0}), 18, 5, 3, 27),
    AircraftSpec("Inspire", 2845, frozenset({0.0}), 22, 5, 4, 18),
    AircraftSpec("Matrice 100", 3680, frozenset({0.0, 250.0, 500.0, 750.0}),
                 22, 5, 4, 22),
)


def builtin_aircraft() -> list[AircraftSpec]:
    """The three supported aircraft types."""
    return list(_BUILTIN)


def aircraft_by_name(name: str) -> AircraftSpec:
    for spec in _BUILTIN:
        if spec.name == name:
            return spec
    raise ContractError(f"unknown aircraft {name!r}")


# Channel layouts per log dialect: channel name -> (rate_hz, field names).
_DJI_SELF_COLLECTED = {
    "imu": (200.0, ("roll", "pitch", "yaw")),
    "gps_position": (5.0, ("x_n", "x_e", "x_d")),
    "wind": (5.0, ("wind_speed", "wind_direction_deg")),
    "battery": (1.0, ("voltage_v", "current_a")),
}
SCHEMAS: dict[str, dict] = {
    "mavic_pro": {"aircraft": "Mavic Pro", "channels": _DJI_SELF_COLLECTED},
    "inspire": {"aircraft": "Inspire", "channels": _DJI_SELF_COLLECTED},
    "matrice100": {
        "aircraft": "Matrice 100",
        "channels": {
            "kinematic_state": (10.0, ("v_n", "v_e", "v_d",
                                       "a_n", "a_e", "a_d",
                                       "roll", "pitch", "yaw")),
            "wind": (10.0, ("wind_speed", "wind_direction_deg")),
            "battery": (5.0, ("voltage_v", "current_a")),
        },
    },
}

# Declared rate must match the observed sampling interval within this factor.
_RATE_TOLERANCE = 0.2


@dataclass(frozen=True)
class RawChannel:
    """One sensor channel at its native rate: timestamps plus named columns."""

    name: str
    rate_hz: float
    timestamps: np.ndarray
    fields: tuple[str, ...]
    values: np.ndarray  # shape (n, len(fields))

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape != (ts.size, len(self.fields)):
            raise ContractError(
                f"channel {self.name}: values shape {vals.shape} does not "
                f"match {ts.size} timestamps x {len(self.fields)} fields")
        if ts.size >= 2:
            bad = np.flatnonzero(np.diff(ts) < 0)
            if bad.size:
                raise LogFormatError(
                    f"channel {self.name}: non-monotone timestamp at row {bad[0] + 1}")
            dts = np.diff(ts)
            dts = dts[dts > 0]
            if dts.size:
                observed = 1.0 / float(np.median(dts))
                if abs(observed - self.rate_hz) > _RATE_TOLERANCE * self.rate_hz:
                    raise LogFormatError(
                        f"channel {self.name}: observed rate {observed:.2f} Hz "
                        f"deviates more than {_RATE_TOLERANCE:.0%} from declared "
                        f"{self.rate_hz} Hz")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def column(self, field: str) -> np.ndarray:
        return self.values[:, self.fields.index(field)]

    def with_values(self, values: np.ndarray) -> "RawChannel":
        return replace(self, values=np.asarray(values, dtype=np.float64))


@dataclass(frozen=True)
class ParsedLog:
    schema: str
    flight_id: str
    aircraft: AircraftSpec
    payload_g: float
    channels: tuple[RawChannel, ...]

    def channel(self, name: str) -> RawChannel:
        for ch in self.channels:
            if ch.name == name:
                return ch
        raise LogFormatError(f"channel {name!r} absent from log")

    def power_channel(self) -> RawChannel:
        """Electrical power in W from the main battery: P = voltage * current."""
        bat = self.channel("battery")
        p = bat.column("voltage_v") * bat.column("current_a")
        return RawChannel("power", bat.rate_hz, bat.timestamps,
                          ("power_w",), p.reshape(-1, 1))

    def mass_kg(self) -> float:
        return self.aircraft.mass_kg(self.payload_g)


def parse_log(path: str | Path, schema: str | None = None) -> ParsedLog:
    """Parse one flight-log file into per-sensor channels at native rates."""
    path = Path(path)
    if not path.exists():
        raise LogFormatError(f"log file not found: {path}")
    lines = path.read_text().splitlines()
    meta: dict[str, str] = {}
    sections: list[tuple[str, float, list[str]]] = []
    current: list[str] | None = None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if ":" in line:
                key, _, val = line.lstrip("#").partition(":")
                meta[key.strip()] = val.strip()
            continue
        if line.startswith("[") and line.endswith("]"):
            head = line[1:-1]
            if "@" not in head:
                raise LogFormatError(
                    f"{path}:{lineno}: section header must be '[name @ rate_hz]'")
            name, _, rate = head.partition("@")
            current = []
            sections.append((name.strip(), float(rate), current))
            continue
        if current is None:
            raise LogFormatError(f"{path}:{lineno}: data before any section header")
        current.append(line)

    declared = meta.get("schema", schema)
    if declared is None:
        raise LogFormatError(f"{path}: no schema declared and none given")
    if schema is not None and declared != schema:
        raise LogFormatError(
            f"{path}: declares schema {declared!r}, expected {schema!r}")
    if declared not in SCHEMAS:
        raise LogFormatError(f"{path}: unknown schema {declared!r}")
    layout = SCHEMAS[declared]
    if not sections:
        raise LogFormatError(f"{path}: empty log, no channel sections")

    channels = []
    seen = set()
    for name, rate, rows in sections:
        if name not in layout["channels"]:
            raise LogFormatError(
                f"{path}: channel {name!r} not part of schema {declared!r}")
        _, fields = layout["channels"][name]
        if not rows:
            raise LogFormatError(f"{path}: channel {name!r} has no rows")
        header = tuple(c.strip() for c in rows[0].split(","))
        expected = ("t",) + fields
        for col in expected:
            if col not in header:
                raise LogFormatError(
                    f"{path}: channel {name!r} is missing column {col!r}")
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        if data.size == 0:
            raise LogFormatError(f"{path}: channel {name!r} has a header but no data")
        idx = [header.index(c) for c in expected]
        data = data[:, idx]
        channels.append(RawChannel(name, rate, data[:, 0], fields, data[:, 1:]))
        seen.add(name)

    missing = set(layout["channels"]) - seen
    if missing:
        raise LogFormatError(f"{path}: missing channels {sorted(missing)}")

    payload = float(meta.get("payload_g", 0.0))
    aircraft = aircraft_by_name(layout["aircraft"])
    flight_id = meta.get("flight_id", path.stem)
    return ParsedLog(declared, flight_id, aircraft, payload, tuple(channels))


def write_log(log: ParsedLog, path: str | Path) -> None:
    """Write a parsed log back to its tabular dialect (round-trip safe)."""
    out = [f"# schema: {log.schema}", f"# flight_id: {log.flight_id}"]
    if log.payload_g:
        out.append(f"# payload_g: {log.payload_g:g}")
    for ch in log.channels:
        out.append(f"[{ch.name} @ {ch.rate_hz:g}]")
        out.append(",".join(("t",) + ch.fields))
        for t, row in zip(ch.timestamps, ch.values):
            out.append(",".join(repr(float(v)) for v in (t, *row)))
    Path(path).write_text("\n".join(out) + "\n")
