from __future__ import annotations
from dataclasses import dataclass, replace
from itertools import count
import os
import numpy as np
from scipy.integrate import RK45
from scipy.optimize import minimize_scalar
from .dynamics import ControlField, TimeGrid, fluence, trapezoid_weights
from .errors import FlowConvergenceError, FlowError, FlowStallError, GridMismatchError
from .exporter_csv import ExporterCSV, read_csv
from .objectives import evaluate, evaluate_with_gradient, landscape_extremes
from .rng import substream
from .system import MAXIMIZE, QuantumSystem
from .utils import get_logger

logger = get_logger("landscape.flow")

ASCEND = "ascend"
DESCEND = "descend"
DIRECTIONS = [ASCEND, DESCEND]

# Gaussian envelope exp(-0.3 (t - T/2)^2) of the random initial fields
ENVELOPE_WIDTH = 0.3

STALL_FRACTION = 1e-12
MAX_BISECTIONS = 200
MAX_FIELD_ATTEMPTS = 100
# Largest relative change of R allowed when the integrator tolerances are halved
CONVERGENCE_TOLERANCE = 5e-3


@dataclass(frozen=True)
class FlowConfig:
    # None follows the objective: maximize ascends, minimize descends
    direction: str | None = None
    j_start_fraction: float = 0.01
    j_end_fraction: float = 0.01
    rel_step_tolerance: float = 1e-6
    abs_step_tolerance: float = 1e-9
    # None means 1e-6 of the objective range
    level_tolerance: float | None = None
    max_s_steps: int = 20000
    record_every_step: bool = True
    march_step: float = 0.02
    gradient_method: str = "exact"
    # Re-run every climb at half the tolerances and compare R
    convergence_check: bool = False

    def __post_init__(self):
        if self.direction is not None and self.direction not in DIRECTIONS:
            raise ValueError(f"Value for direction should be one of: {','.join(DIRECTIONS)}")
        for name in ["j_start_fraction", "j_end_fraction"]:
            value = getattr(self, name)
            if not 0 < value < 0.5:
                raise ValueError(f"{name} must lie in (0, 0.5), got {value}")
        if self.rel_step_tolerance <= 0 or self.abs_step_tolerance <= 0:
            raise ValueError("Integrator tolerances must be positive")
        if self.max_s_steps < 1:
            raise ValueError(f"max_s_steps must be at least 1, got {self.max_s_steps}")

    def resolve_direction(self, objective) -> str:
        if self.direction is not None:
            return self.direction
        return ASCEND if objective.direction == MAXIMIZE else DESCEND

    def resolve_level_tolerance(self, objective) -> float:
        if self.level_tolerance is not None:
            return self.level_tolerance
        j_min, j_max = landscape_extremes(objective)
        return 1e-6 * (j_max - j_min)

    def loosened(self, factor: float = 10.0) -> FlowConfig:
        return replace(
            self,
            rel_step_tolerance=self.rel_step_tolerance * factor,
            abs_step_tolerance=self.abs_step_tolerance * factor,
        )


@dataclass(frozen=True)
class FlowTrajectory:
    """
    Control trajectory E(s, t), one recorded field per accepted flow step
    """

    s_values: np.ndarray
    fields: list
    j_values: np.ndarray
    grad_norms: np.ndarray

    @property
    def n_samples(self) -> int:
        return len(self.fields)

    @property
    def grid(self) -> TimeGrid:
        return self.fields[0].grid

    @property
    def initial_field(self) -> ControlField:
        return self.fields[0]

    @property
    def final_field(self) -> ControlField:
        return self.fields[-1]

    def field_matrix(self) -> np.ndarray:
        return np.stack([field.values for field in self.fields])


def kernel_norm(grid: TimeGrid, values: np.ndarray) -> float:
    return float(np.sqrt(np.sum(trapezoid_weights(grid) * values**2) / grid.horizon))


def field_from_parameters(
    grid: TimeGrid, amplitudes: np.ndarray, phases: np.ndarray
) -> ControlField:
    """
    E(t) = exp[-0.3 (t - T/2)^2] sum_n a_n sin(n t + phi_n), scaled to unit fluence
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if amplitudes.shape != phases.shape or amplitudes.ndim != 1 or len(amplitudes) < 1:
        raise ValueError("Amplitudes and phases must be matching non-empty vectors")

    times = grid.times
    frequencies = np.arange(1, len(amplitudes) + 1)
    envelope = np.exp(-ENVELOPE_WIDTH * (times - grid.horizon / 2) ** 2)
    raw = ControlField(grid, envelope * (np.sin(np.outer(times, frequencies) + phases) @ amplitudes))

    energy = fluence(raw)
    if not np.isfinite(energy) or energy < 1e-300 or np.all(np.abs(amplitudes) < 1e-300):
        raise ValueError("Degenerate field: all amplitudes vanish")
    return raw.with_values(raw.values / np.sqrt(energy))


def generate_random_field(grid: TimeGrid, n_components: int, seed: int) -> ControlField:
    """
    Random unit-fluence field with a_n ~ U[0, 1] and phi_n ~ U[0, 2 pi]
    """
    if n_components < 1:
        raise ValueError(f"A field needs at least one component, got {n_components}")

    for attempt in count():
        if attempt >= MAX_FIELD_ATTEMPTS:
            raise FlowError(f"ERROR: no usable random field for seed {seed}")
        rng = substream(seed, "field", attempt)
        amplitudes = rng.uniform(0.0, 1.0, n_components)
        phases = rng.uniform(0.0, 2 * np.pi, n_components)
        try:
            return field_from_parameters(grid, amplitudes, phases)
        except ValueError:
            logger.debug(f"Degenerate field for seed {seed}, attempt {attempt}")


def level_targets(objective, config: FlowConfig) -> tuple[float, float]:
    """
    (J^I, J^F), the levels a trajectory starts and ends on
    """
    j_min, j_max = landscape_extremes(objective)
    j_range = j_max - j_min
    if config.resolve_direction(objective) == ASCEND:
        return (
            j_min + config.j_start_fraction * j_range,
            j_max - config.j_end_fraction * j_range,
        )
    return (
        j_max - config.j_start_fraction * j_range,
        j_min + config.j_end_fraction * j_range,
    )


class GradientFlow:
    """
    Right hand side dE/ds = sign * dJ/dE(t) of the flow.
    The last evaluation is kept so that J at an accepted step comes for free.
    """

    def __init__(self, system: QuantumSystem, objective, grid: TimeGrid, sign: float, method: str):
        self.system: QuantumSystem = system
        self.objective = objective
        self.grid: TimeGrid = grid
        self.sign: float = sign
        self.method: str = method
        self.n_evaluations: int = 0

        self.last_values: np.ndarray | None = None
        self.last_j: float = 0.0
        self.last_kernel: np.ndarray | None = None

    def evaluate(self, values: np.ndarray) -> tuple[float, np.ndarray]:
        if self.last_values is not None and np.array_equal(values, self.last_values):
            return self.last_j, self.last_kernel

        self.n_evaluations += 1
        field = ControlField(self.grid, values)
        j, gradient = evaluate_with_gradient(self.system, self.objective, field, self.method)
        self.last_values = np.array(values, dtype=float)
        self.last_j = j
        self.last_kernel = gradient.values
        return j, gradient.values

    def __call__(self, s: float, values: np.ndarray) -> np.ndarray:
        return self.sign * self.evaluate(values)[1]


def _integrate(
    system: QuantumSystem,
    objective,
    field: ControlField,
    target_j: float,
    sign: float,
    config: FlowConfig,
    tolerance: float,
) -> tuple[list, list, list, list]:
    """
    Flows from field until J reaches target_j, landing within tolerance.
    Returns the accepted samples (s, field, J, grad_norm).
    """
    flow = GradientFlow(system, objective, field.grid, sign, config.gradient_method)
    j, kernel = flow.evaluate(field.values)
    initial_norm = kernel_norm(field.grid, kernel)

    s_values, fields, j_values, norms = [0.0], [field], [j], [initial_norm]
    if abs(j - target_j) <= tolerance:
        return s_values, fields, j_values, norms
    if initial_norm == 0.0:
        raise FlowStallError(f"ERROR: flow starts on a critical point at J = {j}")

    def record(s: float, values: np.ndarray, j: float, norm: float):
        # Without per-step recording only the two endpoints are kept
        if not config.record_every_step and len(fields) > 1:
            for samples in [s_values, fields, j_values, norms]:
                samples.pop()
        s_values.append(s)
        fields.append(field.with_values(values))
        j_values.append(j)
        norms.append(norm)

    # Positive once the target level has been reached or passed
    def progress(value: float) -> float:
        return sign * (value - target_j)

    solver = RK45(
        flow,
        0.0,
        np.array(field.values, dtype=float),
        t_bound=np.inf,
        rtol=config.rel_step_tolerance,
        atol=config.abs_step_tolerance,
    )

    for step in range(config.max_s_steps):
        message = solver.step()
        if solver.status == "failed":
            raise FlowError(f"ERROR: integrator failed at s = {solver.t}: {message}")

        s = solver.t
        j, kernel = flow.evaluate(solver.y)
        norm = kernel_norm(field.grid, kernel)
        logger.debug(
            f"step {step}: s = {s:.6g}, J = {j:.10g}, |g| = {norm:.3e}, "
            f"dJ/ds = {norm**2 * field.grid.horizon:.3e}"
        )

        if abs(j - target_j) <= tolerance:
            record(s, solver.y, j, norm)
            return s_values, fields, j_values, norms

        if progress(j) > 0:
            s, values, j, kernel = _bisect_landing(flow, solver, progress, target_j, tolerance)
            record(s, values, j, kernel_norm(field.grid, kernel))
            return s_values, fields, j_values, norms

        record(s, solver.y, j, norm)
        if norm < STALL_FRACTION * initial_norm:
            raise FlowStallError(
                f"ERROR: gradient collapsed to {norm:.3e} at J = {j} before reaching {target_j}"
            )

    raise FlowError(f"ERROR: target level {target_j} not reached in {config.max_s_steps} steps")


def _bisect_landing(flow: GradientFlow, solver: RK45, progress, target_j: float, tolerance: float):
    """
    Bisects the last accepted step in s, on the dense output, to land on target_j
    """
    interpolant = solver.dense_output()
    low, high = solver.t_old, solver.t

    for _ in range(MAX_BISECTIONS):
        middle = 0.5 * (low + high)
        values = interpolant(middle)
        j, kernel = flow.evaluate(values)
        if abs(j - target_j) <= tolerance:
            return middle, values, j, kernel
        if progress(j) > 0:
            high = middle
        else:
            low = middle

    raise FlowError(f"ERROR: could not land on level {target_j} within {tolerance}")


def adjust_to_level(
    system: QuantumSystem,
    objective,
    field: ControlField,
    target_j: float,
    config: FlowConfig,
) -> ControlField:
    """
    Climbs up or down the landscape from field until J = target_j
    """
    j_min, j_max = landscape_extremes(objective)
    if not j_min < target_j < j_max:
        raise ValueError(f"Target level {target_j} is outside ({j_min}, {j_max})")

    tolerance = config.resolve_level_tolerance(objective)
    j = evaluate(system, objective, field)
    if abs(j - target_j) <= tolerance:
        return field

    sign = 1.0 if target_j > j else -1.0
    logger.info(f"Adjusting J = {j:.6g} to level {target_j:.6g}")
    fields = _integrate(system, objective, field, target_j, sign, config, tolerance)[1]
    return fields[-1]


def dmorph_flow(
    system: QuantumSystem,
    objective,
    initial_field: ControlField,
    config: FlowConfig,
) -> FlowTrajectory:
    """
    Integrates dE/ds = +-dJ/dE(t) from J^I until J crosses J^F
    """
    j_start, j_end = level_targets(objective, config)
    tolerance = config.resolve_level_tolerance(objective)
    j = evaluate(system, objective, initial_field)
    if abs(j - j_start) > tolerance:
        raise FlowError(f"ERROR: initial field has J = {j}, expected J^I = {j_start}")

    sign = 1.0 if config.resolve_direction(objective) == ASCEND else -1.0
    s_values, fields, j_values, norms = _integrate(
        system, objective, initial_field, j_end, sign, config, tolerance
    )
    logger.info(f"Flow reached J = {j_values[-1]:.6g} at s = {s_values[-1]:.6g} in {len(fields) - 1} steps")

    return FlowTrajectory(np.array(s_values), fields, np.array(j_values), np.array(norms))


def climb(
    system: QuantumSystem,
    objective,
    field: ControlField,
    config: FlowConfig,
) -> FlowTrajectory:
    """
    Adjusts field to J^I, then flows to J^F
    """
    j_start = level_targets(objective, config)[0]
    start = adjust_to_level(system, objective, field, j_start, config)
    traj = dmorph_flow(system, objective, start, config)
    if config.convergence_check:
        check_convergence(system, objective, traj, config)
    return traj


def check_convergence(
    system: QuantumSystem,
    objective,
    traj: FlowTrajectory,
    config: FlowConfig,
) -> float:
    """
    Flows again from the start of traj with both integrator tolerances halved.
    Returns the relative change of R, raising FlowConvergenceError when it
    exceeds CONVERGENCE_TOLERANCE.
    """
    halved = replace(config.loosened(0.5), convergence_check=False)
    reference = dmorph_flow(system, objective, traj.initial_field, halved)
    r_value, r_reference = ratio_r(traj), ratio_r(reference)
    change = abs(r_value - r_reference) / r_reference
    logger.info(f"R = {r_value:.8g}, {r_reference:.8g} at half tolerance, relative change {change:.2e}")
    if change > CONVERGENCE_TOLERANCE:
        raise FlowConvergenceError(
            f"ERROR: R changed by {change:.2e} with halved tolerances ({r_value} vs {r_reference})"
        )
    return change


def euclidean_distance(a: ControlField, b: ControlField) -> float:
    """
    [(1/T) int (b(t) - a(t))^2 dt]^(1/2)
    """
    if a.grid != b.grid:
        raise GridMismatchError(f"Fields live on different grids: {a.grid} and {b.grid}")
    return kernel_norm(a.grid, b.values - a.values)


def path_length(traj: FlowTrajectory) -> float:
    """
    Sum of the chords between consecutive recorded fields
    """
    if traj.n_samples < 2:
        raise ValueError("A path length needs at least two samples")

    steps = np.diff(traj.field_matrix(), axis=0)
    weights = trapezoid_weights(traj.grid)
    chords = np.sqrt(steps**2 @ weights / traj.grid.horizon)
    return float(np.sum(chords))


def ratio_r(traj: FlowTrajectory) -> float:
    d_el = euclidean_distance(traj.initial_field, traj.final_field)
    if d_el == 0.0:
        raise FlowError("ERROR: trajectory endpoints coincide, R is undefined")
    return path_length(traj) / d_el


def straight_march(
    system: QuantumSystem,
    objective,
    initial_field: ControlField,
    config: FlowConfig,
) -> tuple[ControlField, float]:
    """
    Marches along the initial gradient direction, E0 + lambda g_hat, while J
    keeps improving, then refines the best step with a bounded line search.
    """
    sign = 1.0 if config.resolve_direction(objective) == ASCEND else -1.0
    j0, gradient = evaluate_with_gradient(system, objective, initial_field, config.gradient_method)
    norm = gradient.norm()
    if norm == 0.0:
        return initial_field, j0

    direction = sign * gradient.values / norm

    def march(step: float) -> tuple[ControlField, float]:
        field = initial_field.with_values(initial_field.values + step * direction)
        return field, evaluate(system, objective, field)

    best_step, best_field, best_j = 0.0, initial_field, j0
    step = 0.0
    for _ in range(config.max_s_steps):
        step += config.march_step
        field, j = march(step)
        if sign * (j - best_j) <= 0:
            break
        best_step, best_field, best_j = step, field, j

    low = max(0.0, best_step - config.march_step)
    high = best_step + config.march_step
    result = minimize_scalar(
        lambda value: -sign * march(value)[1], bounds=(low, high), method="bounded"
    )
    refined_field, refined_j = march(float(result.x))
    if sign * (refined_j - best_j) > 0:
        best_field, best_j = refined_field, refined_j

    logger.debug(f"Straight march from J = {j0:.6g} reached J = {best_j:.6g}")
    return best_field, best_j


def write_trajectory(traj: FlowTrajectory, directory: str) -> list[str]:
    """
    Writes trajectory.csv (step, s, J, grad_norm) and fields.csv (one row per step)
    """
    os.makedirs(directory, exist_ok=True)
    exporter = ExporterCSV()

    summary = [
        [step, s, j, norm]
        for step, (s, j, norm) in enumerate(zip(traj.s_values, traj.j_values, traj.grad_norms))
    ]
    exporter.write(
        ["step", "s", "J", "grad_norm"], summary, os.path.join(directory, "trajectory.csv")
    )

    header = ["step", "s"] + [f"t_{k}" for k in range(traj.grid.n_points)]
    rows = [
        [step, s] + list(field.values)
        for step, (s, field) in enumerate(zip(traj.s_values, traj.fields))
    ]
    exporter.write(header, rows, os.path.join(directory, "fields.csv"))
    return exporter.written


def write_field(field: ControlField, filename: str) -> str:
    rows = [[t, value] for t, value in zip(field.grid.times, field.values)]
    return ExporterCSV().write(["t", "E"], rows, filename)


def read_field(filename: str, grid: TimeGrid) -> ControlField:
    """
    Reads a field written by write_field; the file must match the grid
    """
    header, rows = read_csv(filename)
    if "E" not in header:
        raise ValueError(f"{filename} has no E column")
    column = header.index("E")
    return ControlField(grid, np.array([float(row[column]) for row in rows]))
