import time
import numpy as np
import pytest
from conftest import random_unitary
from landscape.src.critical import (
    MAX,
    MIN,
    SADDLE,
    ContingencyTable,
    critical_submanifolds,
    critical_unitary,
    distance_jo,
    distance_jw,
    distances_to_all,
    eigen_structure,
    enumerate_critical_jo,
    enumerate_critical_jw,
    enumerate_tables,
    _cityblock_spreads,
    saddle_scan,
    table_set,
    write_saddle_scan,
)
from landscape.src.exporter_csv import read_csv
from landscape.src.flow import FlowConfig, climb, generate_random_field
from landscape.src.objectives import evaluate_jo, landscape_extremes
from landscape.src.system import build_preset

ENSEMBLE_TAGS = ["ensemble8_r1o1", "ensemble8_r1o2", "ensemble8_r2o1", "ensemble8_r2o2", "ensemble8_r3o3"]


def sampled(submanifolds: list, rng: np.random.Generator, limit: int = 40) -> list:
    """
    All submanifolds, or a seeded subset of limit of them for the permutation presets
    """
    if len(submanifolds) <= limit:
        return submanifolds
    return [submanifolds[k] for k in sorted(rng.choice(len(submanifolds), limit, replace=False))]


def test_eigen_structure():
    structure = eigen_structure(np.diag([0.0, 5 / 9, 0.0, 4 / 9, 0.0]))
    assert structure.values == pytest.approx([5 / 9, 4 / 9, 0.0])
    assert structure.degeneracies == (1, 1, 3)


def test_enumerate_tables():
    tables = enumerate_tables((1, 1, 6), (4, 4))
    assert len(tables) == 4
    for table in tables:
        entries = table.as_array()
        assert tuple(entries.sum(axis=1)) == (1, 1, 6)
        assert tuple(entries.sum(axis=0)) == (4, 4)

    # Permutation matrices
    assert len(enumerate_tables((1, 1, 1, 1), (1, 1, 1, 1))) == 24


def test_margins_must_agree():
    with pytest.raises(ValueError):
        enumerate_tables((1, 2), (2, 2))
    with pytest.raises(ValueError):
        ContingencyTable((1, 0, 0, 1), (1, 1), (2, 0))


def test_critical_values_r2o1(r2o1):
    _, objective = r2o1
    submanifolds = enumerate_critical_jo(objective)

    values = sorted(submanifold.j_value for submanifold in submanifolds)
    assert values == pytest.approx([0.0, 1 / 9, 5 / 36, 1 / 4], abs=1e-15)

    topology = {round(s.j_value, 12): s.topology for s in submanifolds}
    assert topology[0.0] == MIN
    assert topology[0.25] == MAX
    assert [s.topology for s in submanifolds].count(SADDLE) == 2


@pytest.mark.parametrize("tag", ENSEMBLE_TAGS + ["statetransfer3"])
def test_extreme_submanifolds_match_von_neumann_bounds(tag):
    _, objective = build_preset(tag)
    values = [s.j_value for s in critical_submanifolds(objective)]
    assert (min(values), max(values)) == pytest.approx(landscape_extremes(objective), abs=1e-14)


def test_critical_values_jw():
    submanifolds = enumerate_critical_jw(4)
    assert [s.j_value for s in submanifolds] == [0.0, 4.0, 8.0, 12.0, 16.0]
    assert [s.topology for s in submanifolds] == [MIN, SADDLE, SADDLE, SADDLE, MAX]
    assert [s.j_value for s in enumerate_critical_jw(1)] == [0.0, 4.0]

    with pytest.raises(ValueError):
        enumerate_critical_jw(0)


@pytest.mark.parametrize("tag", ENSEMBLE_TAGS)
def test_distance_vanishes_on_own_submanifold(tag, rng):
    _, objective = build_preset(tag)
    for submanifold in sampled(enumerate_critical_jo(objective), rng):
        u = critical_unitary(objective, submanifold)
        assert np.allclose(u.conj().T @ u, np.eye(8))
        assert evaluate_jo(objective, u) == pytest.approx(submanifold.j_value, abs=1e-12)
        assert distance_jo(objective, u, submanifold) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("tag", ENSEMBLE_TAGS)
def test_most_distant_vertex_has_unit_distance(tag, rng):
    _, objective = build_preset(tag)
    submanifolds = enumerate_critical_jo(objective)
    stacked = np.stack([submanifold.table.as_array() for submanifold in submanifolds])
    for target in sampled(submanifolds, rng, limit=10):
        farthest = int(np.argmax(np.abs(stacked - target.table.as_array()).sum(axis=(1, 2))))
        u = critical_unitary(objective, submanifolds[farthest])
        assert distance_jo(objective, u, target) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("tag", ENSEMBLE_TAGS)
def test_distance_is_normalized_for_random_unitaries(tag, rng):
    _, objective = build_preset(tag)
    submanifolds = enumerate_critical_jo(objective)
    n_unitaries = 20 if len(submanifolds) > 1000 else 100
    for _ in range(n_unitaries):
        distances = distances_to_all(objective, random_unitary(rng, 8), submanifolds)
        assert np.all(distances >= 0.0)
        assert np.all(distances <= 1.0 + 1e-12)


@pytest.mark.parametrize("margins", [((1, 3, 4), (1, 7)), ((1, 1, 6), (4, 4)), ((2, 2), (1, 3))])
def test_vertex_spreads_match_brute_force(margins):
    tables = table_set(*margins)
    for table, spread in zip(tables.tables, tables.spreads):
        entries = table.as_array()
        assert spread == max(np.abs(entries - other.as_array()).sum() for other in tables.tables)


def test_permutation_spreads():
    tables = table_set((1,) * 5, (1,) * 5)
    assert len(tables.tables) == 120
    assert np.array_equal(tables.spreads, _cityblock_spreads(tables.entries.reshape(120, -1).astype(float)))
    assert np.all(tables.spreads == 10)

    assert table_set((1,), (1,)).spreads.tolist() == [0.0]
    with pytest.raises(ValueError):
        tables.position(ContingencyTable((1, 0, 0, 1), (1, 1), (1, 1)))


def test_permutation_preset_distances_are_fast(rng):
    _, objective = build_preset("ensemble8_r3o3")
    submanifolds = enumerate_critical_jo(objective)
    assert len(submanifolds) == 40320

    start = time.perf_counter()
    distances = distances_to_all(objective, random_unitary(rng, 8), submanifolds)
    first = time.perf_counter() - start
    assert distances.shape == (40320,)
    assert first < 10.0

    start = time.perf_counter()
    distances_to_all(objective, random_unitary(rng, 8), submanifolds)
    assert time.perf_counter() - start < 1.0


def test_distance_jo_needs_ensemble_submanifold(r2o1):
    _, objective = r2o1
    with pytest.raises(ValueError):
        distance_jo(objective, np.eye(8), enumerate_critical_jw(8)[0])


def test_distance_jw_examples(unitary4):
    _, target = unitary4
    w = np.array(target.w)
    assert distance_jw(w, w, 0) == pytest.approx(0.0, abs=1e-12)
    assert distance_jw(w, w, 4) == pytest.approx(1.0, abs=1e-12)
    assert distance_jw(w, -w, 4) == pytest.approx(0.0, abs=1e-12)
    assert distance_jw(w, w @ np.diag([-1, -1, 1, 1]), 2) == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        distance_jw(w, w, 5)


def test_distance_jw_range(unitary4, rng):
    _, target = unitary4
    for _ in range(100):
        distances = distances_to_all(target, random_unitary(rng, 4), enumerate_critical_jw(4))
        assert np.all(distances >= -1e-12)
        assert np.all(distances <= 1.0 + 1e-12)


def test_saddle_scan(tmp_path, twolevel, flow_grid):
    system, objective = twolevel
    traj = climb(system, objective, generate_random_field(flow_grid, 20, 2), FlowConfig())
    scan = saddle_scan(traj, system, objective)

    assert scan.distances.shape == (traj.n_samples, 2)
    assert np.array_equal(scan.grad_norms, traj.grad_norms)
    assert np.array_equal(scan.s_values, traj.s_values)

    # Close to the top, the maximum is the nearest submanifold
    maximum = [k for k, s in enumerate(scan.submanifolds) if s.topology == MAX][0]
    assert np.argmin(scan.distances[-1]) == maximum
    assert scan.saddle_columns() == []
    assert np.isnan(scan.min_saddle_distance())

    threaded = saddle_scan(traj, system, objective, workers=2)
    assert np.array_equal(threaded.distances, scan.distances)

    header, rows = read_csv(write_saddle_scan(scan, str(tmp_path / "saddle_scan.csv")))
    assert header[:3] == ["s", "J", "grad_norm"]
    assert len(header) == 5
    assert len(rows) == traj.n_samples
