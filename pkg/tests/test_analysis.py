import numpy as np
import pytest
from landscape.src.analysis import (
    CROSS,
    WITHIN_A,
    WITHIN_B,
    RunRecord,
    eigen_relation_agreement,
    eigen_relation_scan,
    histogram,
    pairwise_distances,
    r_histogram,
    saddle_summary,
    sign_changes,
    split_by_r,
    write_eigen_relation,
)
from landscape.src.critical import SaddleScan, enumerate_critical_jw
from landscape.src.dynamics import ControlField, TimeGrid, trapezoid_weights
from landscape.src.errors import GridMismatchError, NumericalError
from landscape.src.exporter_csv import read_csv
from landscape.src.flow import FlowConfig, FlowTrajectory, climb, euclidean_distance, generate_random_field
from landscape.src.objectives import QuadraticTestObjective, gradient, hessian


def random_fields(grid: TimeGrid, count: int, offset: int = 0) -> list:
    return [generate_random_field(grid, 5, seed) for seed in range(offset, offset + count)]


def record(run_id: int, r_value: float, grid: TimeGrid) -> RunRecord:
    field = ControlField(grid, np.zeros(grid.n_points))
    return RunRecord(run_id, run_id, r_value, r_value, 1.0, 0.0, 1.0, 10, field, field)


def quadratic_trajectory(grid: TimeGrid, ds: float = 0.01, n_samples: int = 201):
    """
    Exact ascent of J = -1/2 ||E - E*||^2: E(s) = E* + (E0 - E*) exp(-s), a straight line
    """
    target = generate_random_field(grid, 5, 1)
    start = generate_random_field(grid, 5, 2)
    s_values = ds * np.arange(n_samples)
    fields = [
        ControlField(grid, target.values + (start.values - target.values) * np.exp(-s)) for s in s_values
    ]
    traj = FlowTrajectory(s_values, fields, np.zeros(n_samples), np.ones(n_samples))
    return QuadraticTestObjective(target), traj


def test_pairwise_count():
    grid = TimeGrid(10.0, 11)
    fields = random_fields(grid, 250)
    assert len(pairwise_distances(fields)) == 31125


def test_pairwise_matches_euclidean_distance(small_grid):
    fields_a = random_fields(small_grid, 4)
    fields_b = random_fields(small_grid, 3, offset=10)

    within = pairwise_distances(fields_a)
    assert within[0] == pytest.approx(euclidean_distance(fields_a[0], fields_a[1]))

    cross = pairwise_distances(fields_a, fields_b, CROSS)
    assert len(cross) == 12
    assert cross[1] == pytest.approx(euclidean_distance(fields_a[0], fields_b[1]))
    assert np.allclose(np.sort(cross), np.sort(pairwise_distances(fields_b, fields_a, CROSS)))

    assert len(pairwise_distances(fields_a, fields_b, WITHIN_B)) == 3


def test_pairwise_identical_fields(small_grid, random_field):
    assert np.all(pairwise_distances([random_field] * 5) == 0.0)


def test_pairwise_matched(small_grid):
    fields_a = random_fields(small_grid, 4)
    fields_b = random_fields(small_grid, 4, offset=10)
    matched = pairwise_distances(fields_a, fields_b, CROSS, matched=True)
    assert matched == pytest.approx([euclidean_distance(a, b) for a, b in zip(fields_a, fields_b)])

    with pytest.raises(ValueError):
        pairwise_distances(fields_a, fields_b[:2], CROSS, matched=True)


def test_pairwise_errors(small_grid):
    fields = random_fields(small_grid, 2)
    with pytest.raises(ValueError):
        pairwise_distances(fields, mode="diagonal")
    with pytest.raises(ValueError):
        pairwise_distances([], mode=WITHIN_A)
    with pytest.raises(GridMismatchError):
        pairwise_distances(fields + random_fields(TimeGrid(10.0, 31), 1))


def test_split_by_r(small_grid):
    records = [record(run_id, r, small_grid) for run_id, r in enumerate([1.3, 1.1, 1.1, 2.0, 1.5, 1.1, 3.0, 1.2])]
    lowest, highest = split_by_r(records, 3)

    assert [r.run_id for r in lowest] == [1, 2, 5]
    assert [r.run_id for r in highest] == [4, 3, 6]
    assert not {r.run_id for r in lowest} & {r.run_id for r in highest}
    assert split_by_r(records, 0) == ([], [])

    with pytest.raises(ValueError):
        split_by_r(records, 5)


def test_split_ties_are_stable(small_grid):
    records = [record(run_id, 1.0, small_grid) for run_id in range(6)]
    lowest, highest = split_by_r(list(reversed(records)), 2)
    assert [r.run_id for r in lowest] == [0, 1]
    assert [r.run_id for r in highest] == [4, 5]


def test_histogram():
    result = histogram(np.array([0.05, 0.15, 0.16, 0.31]), 0.1)
    assert result.counts.tolist() == [1, 2, 0, 1]
    assert result.edges[0] == 0.0
    assert result.maximum == 0.31
    assert result.mean == pytest.approx(0.1675)

    with pytest.raises(ValueError):
        histogram(np.ones(3), 0.0)


def test_r_histogram(small_grid):
    records = [record(run_id, r, small_grid) for run_id, r in enumerate([1.0, 1.004, 1.5, 2.25, 1.0 - 1e-15])]
    result = r_histogram(records, 0.01)
    assert result.counts.sum() == len(records)
    assert result.edges[0] == 1.0
    assert result.counts[0] == 3
    assert result.median == 1.004

    single = r_histogram([record(0, 1.37, small_grid)], 0.01)
    assert np.count_nonzero(single.counts) == 1


def test_sign_changes():
    assert sign_changes(np.array([-1.0, -0.5, 0.0, 0.3, -0.2])) == 2
    assert sign_changes(np.array([-1.0, -2.0])) == 0


def test_eigen_relation_on_quadratic():
    """
    Straight trajectory with Hessian -1: rho''/rho' = -1 = g_hat . H . g_hat
    """
    objective, traj = quadratic_trajectory(TimeGrid(10.0, 11))
    samples = eigen_relation_scan(None, objective, traj, stride=10)

    assert len(samples) == 21
    for sample in samples:
        assert sample.rayleigh == pytest.approx(-1.0, abs=1e-6)
        assert sample.nearest_eig_gap == pytest.approx(0.0, abs=1e-6)
        assert sample.spectral_radius == pytest.approx(1.0, abs=1e-6)
    assert eigen_relation_agreement(samples) < 1e-3
    assert samples[10].rho_prime == pytest.approx(np.exp(-1.0) / (1.0 - np.exp(-2.0)), rel=1e-12)


def test_eigen_relation_stride_is_a_subset():
    objective, traj = quadratic_trajectory(TimeGrid(10.0, 11), n_samples=21)
    every = eigen_relation_scan(None, objective, traj, stride=1)
    strided = eigen_relation_scan(None, objective, traj, stride=3)

    assert len(strided) == 7
    assert [sample.s for sample in strided] == [sample.s for sample in every[::3]]
    assert [sample.rho_ratio for sample in strided] == [sample.rho_ratio for sample in every[::3]]

    threaded = eigen_relation_scan(None, objective, traj, stride=3, workers=2)
    assert [sample.rayleigh for sample in threaded] == [sample.rayleigh for sample in strided]

    with pytest.raises(ValueError):
        eigen_relation_scan(None, objective, traj, stride=0)


def test_eigen_relation_needs_displacement(small_grid, random_field):
    objective = QuadraticTestObjective(random_field)
    traj = FlowTrajectory(np.array([0.0, 1.0]), [random_field] * 2, np.zeros(2), np.ones(2))
    with pytest.raises(NumericalError):
        eigen_relation_scan(None, objective, traj)


def test_rayleigh_is_bounded_by_spectrum(twolevel):
    system, objective = twolevel
    grid = TimeGrid(10.0, 31)
    traj = climb(system, objective, generate_random_field(grid, 20, 2), FlowConfig())
    samples = eigen_relation_scan(system, objective, traj, stride=max(1, traj.n_samples // 4))

    for sample in samples:
        spectrum = sample.hessian_spectrum
        assert spectrum.min() - 1e-9 <= sample.rayleigh <= spectrum.max() + 1e-9

    # Close to the maximum the landscape curves downwards along the gradient
    final = traj.final_field
    direction = trapezoid_weights(grid) * gradient(system, objective, final).values
    assert direction @ hessian(system, objective, final).values @ direction < 0


def test_write_eigen_relation(tmp_path):
    objective, traj = quadratic_trajectory(TimeGrid(10.0, 11), n_samples=21)
    samples = eigen_relation_scan(None, objective, traj, stride=5)
    written = write_eigen_relation(samples, str(tmp_path))
    assert len(written) == 2

    header, rows = read_csv(str(tmp_path / "eigen_relation.csv"))
    assert header[:3] == ["s", "rayleigh", "rho_ratio"]
    assert len(rows) == len(samples)

    header, rows = read_csv(str(tmp_path / "eigen_spectrum.csv"))
    assert len(header) == 1 + 11


def test_saddle_summary(small_grid):
    submanifolds = enumerate_critical_jw(2)
    distances = np.array([[0.9, 0.5, 0.1], [0.8, 0.2, 0.3], [0.7, 0.4, 0.5]])
    scan = SaddleScan(submanifolds, np.array([0.0, 1.0, 2.0]), np.zeros(3), np.array([3.0, 2.0, 1.0]), distances)

    (summary,) = saddle_summary([(record(4, 1.2, small_grid), scan)])
    assert summary.run_id == 4
    assert summary.min_saddle_distance == 0.2
    assert summary.s_at_min == 1.0
    assert summary.grad_norm_at_min == 2.0
    assert scan.min_saddle_distance() == 0.2
