"""Post-training analyses: instantaneous error distribution, per-flight
accumulated energy error, and prediction-vs-ground-truth traces."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ContractError, Dataset
from .evaluate import EvalReport, evaluate_model

logger = logging.getLogger(__name__)

# Standard battery capacity of the reference aircraft, in Joules (129.96 Wh).
DEFAULT_BATTERY_CAPACITY_J = 467_856.0
# Per-flight energy error bound used for the coverage statistic.
DEFAULT_ENERGY_BOUND_J = 2000.0
ALIGN_STEP_S = 1.0


@dataclass(frozen=True)
class ErrorDistribution:
    errors: np.ndarray
    mean: float
    std: float              # population standard deviation
    frac_within_1std: float
    frac_within_2std: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray


def error_distribution(y, yhat, n_bins: int = 50) -> ErrorDistribution:
    """Residual distribution with one/two-sigma coverage fractions.

    A degenerate zero-spread residual set reports both fractions as 1.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape != yhat.shape or y.size < 2:
        raise ContractError("need two equal-length series of length >= 2")
    e = y - yhat
    mean = float(np.mean(e))
    std = float(np.std(e))
    if std == 0.0:
        f1 = f2 = 1.0
    else:
        f1 = float(np.mean(np.abs(e) <= std))
        f2 = float(np.mean(np.abs(e) <= 2.0 * std))
    counts, edges = np.histogram(e, bins=n_bins)
    return ErrorDistribution(errors=e, mean=mean, std=std,
                             frac_within_1std=f1, frac_within_2std=f2,
                             bin_edges=edges, bin_counts=counts)


@dataclass(frozen=True)
class FlightEnergyError:
    flight_id: str
    predicted_j: float
    measured_j: float
    error_j: float
    error_capacity_fraction: float


def group_by_flight(dataset: Dataset) -> dict[str, np.ndarray]:
    """Row indices per flight_id, preserving row order within each flight."""
    groups: dict[str, list[int]] = {}
    for i, fid in enumerate(dataset.flight_ids):
        groups.setdefault(fid, []).append(i)
    return {fid: np.array(idx) for fid, idx in groups.items()}


def flight_energy_errors(model, dataset: Dataset,
                         capacity_j: float = DEFAULT_BATTERY_CAPACITY_J,
                         bound_j: float = DEFAULT_ENERGY_BOUND_J,
                         ) -> tuple[list[FlightEnergyError], float]:
    """Accumulated energy error per flight, and the fraction of flights whose
    |error| stays within ``bound_j`` (a left Riemann sum at the 1 s step)."""
    yhat = model.predict(dataset.X)
    results = []
    for fid, idx in group_by_flight(dataset).items():
        if idx.size == 0:
            logger.warning("flight %s is empty, skipped", fid)
            continue
        measured = float(np.sum(dataset.y[idx]) * ALIGN_STEP_S)
        predicted = float(np.sum(yhat[idx]) * ALIGN_STEP_S)
        # energy error is the accumulated instantaneous error, so the
        # per-flight identity holds exactly in floating point
        err = float(np.sum(yhat[idx] - dataset.y[idx]) * ALIGN_STEP_S)
        results.append(FlightEnergyError(
            flight_id=fid, predicted_j=predicted, measured_j=measured,
            error_j=err, error_capacity_fraction=err / capacity_j))
    if not results:
        return results, float("nan")
    coverage = float(np.mean([abs(r.error_j) <= bound_j for r in results]))
    return results, coverage


@dataclass(frozen=True)
class TraceComparison:
    flight_id: str
    t: np.ndarray
    ground_truth: np.ndarray
    prediction: np.ndarray
    report: EvalReport


def trace_comparison(model, flight: Dataset, model_id: str = "model",
                     trained_flight_ids=None) -> TraceComparison:
    """Aligned (ground truth, prediction) pair for one held-out flight."""
    ids = set(flight.flight_ids)
    if len(ids) != 1:
        raise ContractError("trace comparison expects exactly one flight")
    fid = next(iter(ids))
    if trained_flight_ids is not None and fid in set(trained_flight_ids):
        raise ContractError(f"flight {fid!r} was seen in training")
    yhat = model.predict(flight.X)
    report = evaluate_model(model, flight.X, flight.y, model_id, fid, "testing")
    return TraceComparison(flight_id=fid, t=flight.t.copy(),
                           ground_truth=flight.y.copy(), prediction=yhat,
                           report=report)


def write_error_histogram(dist: ErrorDistribution, path: str | Path) -> None:
    lines = ["bin_left,bin_right,count"]
    for lo, hi, c in zip(dist.bin_edges[:-1], dist.bin_edges[1:],
                         dist.bin_counts):
        lines.append(f"{float(lo)!r},{float(hi)!r},{int(c)}")
    lines.append(f"# mean={dist.mean!r} std={dist.std!r} "
                 f"frac_1std={dist.frac_within_1std!r} "
                 f"frac_2std={dist.frac_within_2std!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_flight_energy(results: list[FlightEnergyError], coverage: float,
                        bound_j: float, path: str | Path) -> None:
    lines = ["flight_id,predicted_j,measured_j,error_j,error_capacity_fraction"]
    for r in results:
        lines.append(f"{r.flight_id},{r.predicted_j!r},{r.measured_j!r},"
                     f"{r.error_j!r},{r.error_capacity_fraction!r}")
    lines.append(f"# fraction_within_{bound_j:g}J={coverage!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace(trace: TraceComparison, path: str | Path) -> None:
    lines = ["t,ground_truth_w,prediction_w"]
    for t, g, p in zip(trace.t, trace.ground_truth, trace.prediction):
        lines.append(f"{float(t)!r},{float(g)!r},{float(p)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
