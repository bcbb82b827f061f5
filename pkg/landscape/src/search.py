from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import cma
import numpy as np
from .dynamics import ControlField, TimeGrid
from .errors import LandscapeError
from .flow import FlowConfig, climb, field_from_parameters, ratio_r
from .rng import substream
from .system import QuantumSystem
from .utils import get_logger

logger = get_logger("landscape.search")

# Loss given to candidates whose flow fails
FAILED_FLOW_PENALTY = 1e3
INITIAL_SIGMA = 0.3


@dataclass(frozen=True)
class SearchResult:
    amplitudes: np.ndarray
    phases: np.ndarray
    field: ControlField
    # R of the best candidate at the search tolerance, then re-run at full tolerance
    r_search: float
    r_verified: float
    n_evaluations: int
    best_per_generation: list = field(default_factory=list)


def population_size(n_parameters: int) -> int:
    return 4 + int(np.floor(3 * np.log(n_parameters)))


def parameters_to_field(grid: TimeGrid, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, ControlField]:
    """
    x in [0, 1]^(2M): amplitudes first, then phases as fractions of 2 pi
    """
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    n_components = len(x) // 2
    amplitudes, phases = x[:n_components], 2 * np.pi * x[n_components:]
    return amplitudes, phases, field_from_parameters(grid, amplitudes, phases)


def _trajectory_ratio(system: QuantumSystem, objective, grid: TimeGrid, x: np.ndarray, config: FlowConfig) -> float:
    try:
        initial = parameters_to_field(grid, x)[2]
        return ratio_r(climb(system, objective, initial, config))
    except (LandscapeError, ValueError) as error:
        logger.debug(f"Candidate rejected: {error}")
        return FAILED_FLOW_PENALTY


def straight_shot_search(
    system: QuantumSystem,
    objective,
    grid: TimeGrid,
    n_components: int,
    budget: int,
    seed: int,
    config: FlowConfig | None = None,
    workers: int = 1,
) -> SearchResult:
    """
    Derandomized evolution strategy over the 2M field parameters (a_n, phi_n),
    minimizing the R of the full flow started from the resulting field.

    Candidates are flowed with a 10x looser integrator tolerance; the best one
    is flowed again at the configured tolerance for the reported R.
    """
    config = config or FlowConfig()
    search_config = replace(config.loosened(10.0), convergence_check=False)
    n_parameters = 2 * n_components
    popsize = population_size(n_parameters)
    if budget < popsize:
        raise ValueError(f"A search budget of {budget} is below the population size {popsize}")

    rng = substream(seed, "search")
    x0 = rng.uniform(0.0, 1.0, n_parameters)
    options = {
        "popsize": popsize,
        "seed": int(rng.integers(1, 2**31 - 1)),
        "randn": lambda *shape: rng.standard_normal(shape),
        "CMA_diagonal": True,
        "bounds": [0.0, 1.0],
        "maxfevals": budget,
        "verbose": -9,
    }
    es = cma.CMAEvolutionStrategy(x0, INITIAL_SIGMA, options)

    best_x, best_r = x0, np.inf
    n_evaluations = 0
    best_per_generation = []

    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while n_evaluations + popsize <= budget and not es.stop():
            candidates = es.ask()
            arguments = [(system, objective, grid, x, search_config) for x in candidates]
            if executor is not None:
                losses = list(executor.map(_trajectory_ratio, *zip(*arguments)))
            else:
                losses = [_trajectory_ratio(*args) for args in arguments]
            es.tell(candidates, losses)
            n_evaluations += len(candidates)

            generation_best = int(np.argmin(losses))
            if losses[generation_best] < best_r:
                best_r = float(losses[generation_best])
                best_x = np.array(candidates[generation_best])
            best_per_generation.append(best_r)
            logger.info(f"{n_evaluations}/{budget} flows, best R = {best_r:.8g}")
    finally:
        if executor is not None:
            executor.shutdown()

    amplitudes, phases, initial = parameters_to_field(grid, best_x)
    r_verified = ratio_r(climb(system, objective, initial, config))
    logger.info(f"Best R = {best_r:.8g} at search tolerance, {r_verified:.8g} verified")

    return SearchResult(
        amplitudes, phases, initial, best_r, r_verified, n_evaluations, best_per_generation
    )
