"""
Desk-scale landscape experiments. Minutes each; run with `pytest -m slow`.
"""
import numpy as np
import pytest
from conftest import finite_difference_kernel
from landscape.src.analysis import (
    eigen_relation_agreement,
    eigen_relation_scan,
    pairwise_distances,
    saddle_summary,
    sign_changes,
    split_by_r,
)
from landscape.src.batch import execute_run
from landscape.src.dynamics import TimeGrid
from landscape.src.flow import FlowConfig, climb, generate_random_field, ratio_r
from landscape.src.objectives import evaluate, gradient
from landscape.src.rng import derive_seed
from landscape.src.search import straight_shot_search
from landscape.src.system import PRESET_TAGS, build_preset, preset_info

pytestmark = pytest.mark.slow

GRID = TimeGrid(10.0, 1001)
N_RUNS = 100


def batch(tag: str, with_saddle_scan: bool = False, n_runs: int = N_RUNS) -> list:
    system, objective = build_preset(tag)
    components = preset_info(tag).field_components
    return [
        execute_run(system, objective, GRID, components, FlowConfig(), run_id, derive_seed(0, run_id), with_saddle_scan)
        for run_id in range(n_runs)
    ]


@pytest.fixture(scope="module")
def r1o1_batch():
    return batch("ensemble8_r1o1")


@pytest.fixture(scope="module")
def r2o2_batch():
    return batch("ensemble8_r2o2")


@pytest.fixture(scope="module")
def r2o1_batch():
    return batch("ensemble8_r2o1", with_saddle_scan=True)


def mean_r(results: list) -> float:
    return float(np.mean([record.r_value for record, _, _ in results]))


@pytest.mark.parametrize("tag", PRESET_TAGS)
def test_gradient_check_over_twenty_fields(tag):
    system, objective = build_preset(tag)
    grid = TimeGrid(10.0, 101)
    for seed in range(20):
        field = generate_random_field(grid, preset_info(tag).field_components, seed)
        kernel = gradient(system, objective, field).values
        reference = finite_difference_kernel(system, objective, field)
        assert np.linalg.norm(kernel - reference) / np.linalg.norm(reference) < 1e-5


def test_r_statistics(r1o1_batch, r2o2_batch):
    unitary = batch("unitary4")
    assert mean_r(r1o1_batch) == pytest.approx(1.22, abs=0.15)
    assert mean_r(r2o2_batch) == pytest.approx(1.65, abs=0.20)
    assert mean_r(unitary) == pytest.approx(1.41, abs=0.20)
    assert mean_r(r1o1_batch) < mean_r(r2o2_batch)

    r_values = [record.r_value for results in [r1o1_batch, r2o2_batch, unitary] for record, _, _ in results]
    assert np.mean(np.array(r_values) < 2.0) >= 0.99
    assert min(r_values) >= 1.0 - 1e-9


def test_high_r_runs_pass_closer_to_saddles(r2o1_batch):
    summaries = saddle_summary([(record, scan) for record, scan, _ in r2o1_batch])
    ordered = sorted(summaries, key=lambda summary: (summary.r_value, summary.run_id))
    decile = len(ordered) // 10
    bottom = np.mean([summary.min_saddle_distance for summary in ordered[:decile]])
    top = np.mean([summary.min_saddle_distance for summary in ordered[-decile:]])
    assert top < bottom


def test_gradient_slows_near_saddles(r2o1_batch):
    for _, scan, _ in r2o1_batch:
        nearest = scan.distances[:, scan.saddle_columns()].min(axis=1)
        k = int(np.argmin(nearest))
        if nearest[k] >= 0.05:
            continue

        # Contiguous stretch around the closest approach with D < 0.1
        start, end = k, k
        while start > 0 and nearest[start - 1] < 0.1:
            start -= 1
        while end < len(nearest) - 1 and nearest[end + 1] < 0.1:
            end += 1

        norms = scan.grad_norms
        lowest = start + int(np.argmin(norms[start : end + 1]))
        assert lowest == 0 or norms[lowest] <= norms[lowest - 1]
        assert lowest == len(norms) - 1 or norms[lowest] <= norms[lowest + 1]


def test_field_locations_are_alike(r1o1_batch):
    records = [record for record, _, _ in r1o1_batch]
    lowest, highest = split_by_r(records, len(records) // 4)
    low = pairwise_distances([record.initial_field for record in lowest]).mean()
    high = pairwise_distances([record.initial_field for record in highest]).mean()
    assert abs(low - high) / max(low, high) < 0.10


def test_numerical_convergence():
    system, objective = build_preset("unitary4")
    field = generate_random_field(GRID, 20, 1)
    reference = ratio_r(climb(system, objective, field, FlowConfig()))

    tighter = FlowConfig(rel_step_tolerance=5e-7, abs_step_tolerance=5e-10)
    assert ratio_r(climb(system, objective, field, tighter)) == pytest.approx(reference, rel=5e-3)

    fine_grid = TimeGrid(10.0, 2001)
    fine = generate_random_field(fine_grid, 20, 1)
    assert ratio_r(climb(system, objective, fine, FlowConfig())) == pytest.approx(reference, rel=1e-2)


def test_straight_shot_search_two_level():
    system, objective = build_preset("twolevel_p12")
    result = straight_shot_search(system, objective, GRID, 20, 2000, 0)
    assert result.r_verified - 1.0 <= 1e-3


def test_eigen_relation_on_straight_run():
    system, objective = build_preset("statetransfer3")
    grid = TimeGrid(10.0, 301)
    result = straight_shot_search(system, objective, grid, 20, 1000, 0)
    assert result.r_verified <= 1.01

    traj = climb(system, objective, result.field, FlowConfig())
    samples = eigen_relation_scan(system, objective, traj, stride=max(1, traj.n_samples // 40))
    for sample in samples:
        assert sample.nearest_eig_gap < 0.02 * sample.spectral_radius
    assert sign_changes([sample.rayleigh for sample in samples]) == 1
    assert eigen_relation_agreement(samples) < 0.15
    assert evaluate(system, objective, traj.final_field) > evaluate(system, objective, traj.initial_field)
