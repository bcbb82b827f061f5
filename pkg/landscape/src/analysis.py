from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import os
import numpy as np
from scipy.spatial.distance import cdist, pdist
from .critical import SaddleScan
from .dynamics import ControlField, trapezoid_weights
from .errors import GridMismatchError, NumericalError
from .exporter_csv import ExporterCSV
from .flow import ASCEND, FlowConfig, FlowTrajectory
from .objectives import evaluate_with_gradient, hessian
from .system import QuantumSystem
from .utils import get_logger

logger = get_logger("landscape.analysis")

WITHIN_A = "within_a"
WITHIN_B = "within_b"
CROSS = "cross"
PAIRWISE_MODES = [WITHIN_A, WITHIN_B, CROSS]

# Time points with |Delta E(t)| below this fraction of its maximum are left out of rho'(s)
DELTA_MASK_FRACTION = 1e-3


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    seed: int
    r_value: float
    d_pl: float
    d_el: float
    j_start: float
    j_end: float
    n_steps: int
    initial_field: ControlField
    final_field: ControlField

    def summary(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "r_value": self.r_value,
            "d_pl": self.d_pl,
            "d_el": self.d_el,
            "j_start": self.j_start,
            "j_end": self.j_end,
            "n_steps": self.n_steps,
        }


@dataclass(frozen=True)
class EigenRelationSample:
    s: float
    rayleigh: float
    hessian_spectrum: np.ndarray
    nearest_eig_gap: float
    rho_ratio: float
    rho_prime: float
    rho_second: float

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.hessian_spectrum)))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    median: float
    maximum: float

    def rows(self) -> list:
        return [
            [low, high, count]
            for low, high, count in zip(self.edges[:-1], self.edges[1:], self.counts)
        ]


def _scaled_samples(fields: list) -> np.ndarray:
    """
    Field samples scaled by sqrt(w_k / T), so that plain Euclidean distances
    between rows are the trapezoidal distances between fields
    """
    grid = fields[0].grid
    for field in fields:
        if field.grid != grid:
            raise GridMismatchError("All fields must share one time grid")
    scale = np.sqrt(trapezoid_weights(grid) / grid.horizon)
    return np.stack([field.values for field in fields]) * scale


def pairwise_distances(
    fields_a: list,
    fields_b: list | None = None,
    mode: str = WITHIN_A,
    matched: bool = False,
) -> np.ndarray:
    """
    within_a / within_b: every unordered pair of one list, n (n - 1) / 2 values.
    cross: every (a, b) pair, or only (a_i, b_i) when matched.
    """
    if mode not in PAIRWISE_MODES:
        raise ValueError(f"Value for mode should be one of: {','.join(PAIRWISE_MODES)}")

    if mode == WITHIN_A:
        if not fields_a:
            raise ValueError("pairwise_distances needs a non-empty list")
        return pdist(_scaled_samples(fields_a))
    if mode == WITHIN_B:
        if not fields_b:
            raise ValueError("pairwise_distances needs a non-empty list")
        return pdist(_scaled_samples(fields_b))

    if not fields_a or not fields_b:
        raise ValueError("Cross distances need two non-empty lists")
    samples = _scaled_samples(list(fields_a) + list(fields_b))
    samples_a, samples_b = samples[: len(fields_a)], samples[len(fields_a) :]
    if matched:
        if len(fields_a) != len(fields_b):
            raise ValueError("Matched cross distances need lists of equal length")
        return np.linalg.norm(samples_a - samples_b, axis=1)
    return cdist(samples_a, samples_b).ravel()


def split_by_r(records: list[RunRecord], k: int) -> tuple[list[RunRecord], list[RunRecord]]:
    """
    The k records with the lowest R and the k with the highest, ties broken by run_id
    """
    if k < 0 or 2 * k > len(records):
        raise ValueError(f"Cannot take {k} lowest and {k} highest of {len(records)} records")

    ordered = sorted(records, key=lambda record: (record.r_value, record.run_id))
    return ordered[:k], ordered[len(ordered) - k :]


def histogram(values: np.ndarray, bin_width: float, start: float = 0.0) -> Histogram:
    """
    Counts on bins [start + i w, start + (i + 1) w) covering every value
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return Histogram(np.array([start, start + bin_width]), np.zeros(1, dtype=int), np.nan, np.nan, np.nan)

    clipped = np.maximum(values, start)
    n_bins = max(1, int(np.floor((clipped.max() - start) / bin_width)) + 1)
    edges = start + bin_width * np.arange(n_bins + 1)
    indices = np.minimum(((clipped - start) / bin_width).astype(int), n_bins - 1)
    counts = np.bincount(indices, minlength=n_bins)

    return Histogram(edges, counts, float(values.mean()), float(np.median(values)), float(values.max()))


def r_histogram(records: list[RunRecord], bin_width: float) -> Histogram:
    """
    Distribution of R over [1, max R]; values within rounding below 1 go to the first bin
    """
    return histogram(np.array([record.r_value for record in records]), bin_width, start=1.0)


def _velocity_ratio(velocity: np.ndarray, delta: np.ndarray, weights: np.ndarray, mask: np.ndarray) -> float:
    return float(np.sum(weights[mask] * velocity[mask] / delta[mask]) / np.sum(weights[mask]))


def eigen_relation_scan(
    system: QuantumSystem,
    objective,
    traj: FlowTrajectory,
    stride: int = 1,
    config: FlowConfig | None = None,
    workers: int = 1,
) -> list[EigenRelationSample]:
    """
    Compares g_hat . H . g_hat with rho''(s) / rho'(s) along a trajectory.

    With E(s, t) = E(0, t) + rho(s) Delta E(t), the flow velocity dE/ds is
    rho'(s) Delta E(t); rho' is read off as the masked average of the velocity
    divided by Delta E and differentiated once more over s. The ratio is stored
    in the sign convention of the Hessian eigenvalue, so that descending flows
    compare directly too.
    """
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    config = config or FlowConfig()
    sign = 1.0 if config.resolve_direction(objective) == ASCEND else -1.0

    grid = traj.grid
    weights = trapezoid_weights(grid)
    delta = traj.final_field.values - traj.initial_field.values
    largest = float(np.max(np.abs(delta)))
    mask = np.abs(delta) >= DELTA_MASK_FRACTION * largest
    if largest == 0.0 or not mask.any():
        raise NumericalError("ERROR: Delta E vanishes, rho'(s) is undefined")

    gradients = [
        evaluate_with_gradient(system, objective, field, config.gradient_method)[1].values
        for field in traj.fields
    ]
    rho_prime = np.array([_velocity_ratio(sign * g, delta, weights, mask) for g in gradients])
    if traj.n_samples > 1:
        rho_second = np.gradient(rho_prime, traj.s_values, edge_order=1)
    else:
        rho_second = np.zeros(1)

    def sample(k: int) -> EigenRelationSample:
        h = hessian(system, objective, traj.fields[k])
        spectrum = h.spectrum()

        g = gradients[k]
        norm = np.sqrt(np.sum(weights * g**2))
        direction = weights * g / norm if norm > 0 else np.zeros_like(g)
        rayleigh = float(direction @ h.values @ direction)

        ratio = sign * rho_second[k] / rho_prime[k] if rho_prime[k] != 0 else float("nan")
        logger.debug(f"sample {k}: s = {traj.s_values[k]:.6g}, rayleigh = {rayleigh:.6g}, ratio = {ratio:.6g}")
        return EigenRelationSample(
            float(traj.s_values[k]),
            rayleigh,
            spectrum,
            float(np.min(np.abs(spectrum - rayleigh))),
            float(ratio),
            float(rho_prime[k]),
            float(rho_second[k]),
        )

    indices = list(range(0, traj.n_samples, stride))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(sample, indices))
    return [sample(k) for k in indices]


def eigen_relation_agreement(samples: list[EigenRelationSample], middle_fraction: float = 0.8) -> float:
    """
    Relative RMS deviation of rho''/rho' from the Rayleigh quotient over the
    middle part of the scanned samples
    """
    n_samples = len(samples)
    cut = int(round(n_samples * (1 - middle_fraction) / 2))
    middle = samples[cut : n_samples - cut] or samples

    rayleigh = np.array([sample.rayleigh for sample in middle])
    ratio = np.array([sample.rho_ratio for sample in middle])
    return float(np.sqrt(np.mean((rayleigh - ratio) ** 2)) / np.sqrt(np.mean(rayleigh**2)))


def sign_changes(values: np.ndarray) -> int:
    signs = np.sign(np.asarray(values))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@dataclass(frozen=True)
class SaddleSummary:
    run_id: int
    r_value: float
    # Smallest distance to any saddle submanifold along the run
    min_saddle_distance: float
    s_at_min: float
    grad_norm_at_min: float

    def row(self) -> list:
        return [self.run_id, self.r_value, self.min_saddle_distance, self.s_at_min, self.grad_norm_at_min]


def saddle_summary(scans: list[tuple[RunRecord, SaddleScan]]) -> list[SaddleSummary]:
    summaries = []
    for record, scan in sorted(scans, key=lambda item: item[0].run_id):
        columns = scan.saddle_columns()
        if not columns:
            summaries.append(SaddleSummary(record.run_id, record.r_value, float("nan"), float("nan"), float("nan")))
            continue
        nearest = scan.distances[:, columns].min(axis=1)
        k = int(np.argmin(nearest))
        summaries.append(
            SaddleSummary(
                record.run_id,
                record.r_value,
                float(nearest[k]),
                float(scan.s_values[k]),
                float(scan.grad_norms[k]),
            )
        )
    return summaries


def write_eigen_relation(samples: list[EigenRelationSample], directory: str) -> list[str]:
    """
    eigen_relation.csv, and eigen_spectrum.csv with the full weighted Hessian
    spectrum per scanned sample
    """
    os.makedirs(directory, exist_ok=True)
    exporter = ExporterCSV()

    exporter.write(
        ["s", "rayleigh", "rho_ratio", "nearest_eig_gap", "spectrum_min", "spectrum_max"],
        [
            [
                sample.s,
                sample.rayleigh,
                sample.rho_ratio,
                sample.nearest_eig_gap,
                float(sample.hessian_spectrum.min()),
                float(sample.hessian_spectrum.max()),
            ]
            for sample in samples
        ],
        os.path.join(directory, "eigen_relation.csv"),
    )

    if samples:
        n_eigenvalues = len(samples[0].hessian_spectrum)
        exporter.write(
            ["s"] + [f"eig_{k}" for k in range(n_eigenvalues)],
            [[sample.s] + list(sample.hessian_spectrum) for sample in samples],
            os.path.join(directory, "eigen_spectrum.csv"),
        )
    return exporter.written
