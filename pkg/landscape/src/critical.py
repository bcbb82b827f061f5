from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
import numpy as np
from scipy.spatial.distance import cdist
from .dynamics import propagate
from .exporter_csv import ExporterCSV
from .system import EnsembleObjective, QuantumSystem, UnitaryTarget

ENSEMBLE = "ensemble"
UNITARY = "unitary"

MIN = "min"
MAX = "max"
SADDLE = "saddle"

# Eigenvalues closer than this are one degenerate level
DEGENERACY_TOLERANCE = 1e-9
SINGULAR_VALUE_FLOOR = 1e-12
# Rows of tables compared at once when searching the farthest vertex
SPREAD_CHUNK = 512


@dataclass(frozen=True)
class ContingencyTable:
    """
    c_ij: how many eigenvectors of the j-th distinct eigenvalue of rho(0) are
    mapped onto the i-th distinct eigenvalue of O, both in descending order
    """

    entries: tuple
    row_margins: tuple
    col_margins: tuple

    def __post_init__(self):
        entries = self.as_array()
        if entries.shape != (len(self.row_margins), len(self.col_margins)):
            raise ValueError(f"Table shape {entries.shape} does not match its margins")
        if np.any(entries < 0):
            raise ValueError("Table entries must be non-negative")
        if tuple(entries.sum(axis=1)) != tuple(self.row_margins):
            raise ValueError("Row sums do not match the O degeneracies")
        if tuple(entries.sum(axis=0)) != tuple(self.col_margins):
            raise ValueError("Column sums do not match the rho degeneracies")

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=int).reshape(len(self.row_margins), len(self.col_margins))


@dataclass(frozen=True)
class CriticalSubmanifold:
    kind: str
    j_value: float
    topology: str
    table: ContingencyTable | None = None
    alpha: int | None = None

    def label(self) -> str:
        if self.kind == UNITARY:
            return f"alpha={self.alpha} J={self.j_value:.6g}"
        return f"{self.topology} J={self.j_value:.6g}"


@dataclass(frozen=True)
class EigenStructure:
    """
    Distinct eigenvalues in descending order, their degeneracies, and an
    eigenbasis whose columns follow the same order
    """

    values: np.ndarray
    degeneracies: tuple
    basis: np.ndarray


def eigen_structure(matrix: np.ndarray, tolerance: float = DEGENERACY_TOLERANCE) -> EigenStructure:
    values, vectors = np.linalg.eigh(matrix)
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]

    distinct: list[float] = []
    degeneracies: list[int] = []
    for value in values:
        if distinct and distinct[-1] - value <= tolerance:
            degeneracies[-1] += 1
        else:
            distinct.append(float(value))
            degeneracies.append(1)

    return EigenStructure(np.array(distinct), tuple(degeneracies), vectors)


def _bounded_compositions(total: int, caps: tuple):
    """
    Non-negative integer vectors summing to total with entry j <= caps[j]
    """
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    rest_capacity = sum(caps[1:])
    for first in range(min(total, caps[0]), -1, -1):
        if total - first > rest_capacity:
            break
        for rest in _bounded_compositions(total - first, caps[1:]):
            yield (first,) + rest


@lru_cache(maxsize=64)
def enumerate_tables(row_margins: tuple, col_margins: tuple) -> tuple:
    """
    All non-negative integer matrices with the given margins, depth first over
    rows, each row bounded by the column budget still available
    """
    if sum(row_margins) != sum(col_margins):
        raise ValueError(f"Margins {row_margins} and {col_margins} have different totals")

    tables = []

    def fill(row: int, budget: tuple, rows: list):
        if row == len(row_margins):
            if not any(budget):
                tables.append(ContingencyTable(tuple(sum(rows, ())), row_margins, col_margins))
            return
        for entries in _bounded_compositions(row_margins[row], budget):
            fill(row + 1, tuple(b - e for b, e in zip(budget, entries)), rows + [entries])

    fill(0, tuple(col_margins), [])
    return tuple(tables)


def _label_topology(values: list[float]) -> list[str]:
    lowest, highest = min(values), max(values)
    scale = max(1.0, abs(lowest), abs(highest))
    labels = []
    for value in values:
        if abs(value - lowest) <= 1e-12 * scale:
            labels.append(MIN)
        elif abs(value - highest) <= 1e-12 * scale:
            labels.append(MAX)
        else:
            labels.append(SADDLE)
    return labels


def enumerate_critical_jo(objective: EnsembleObjective) -> list[CriticalSubmanifold]:
    observable = eigen_structure(objective.observable)
    rho = eigen_structure(objective.rho0)
    tables = enumerate_tables(observable.degeneracies, rho.degeneracies)

    j_values = [
        float(observable.values @ table.as_array() @ rho.values) for table in tables
    ]
    return [
        CriticalSubmanifold(ENSEMBLE, j_value, topology, table=table)
        for table, j_value, topology in zip(tables, j_values, _label_topology(j_values))
    ]


def enumerate_critical_jw(n_levels: int) -> list[CriticalSubmanifold]:
    if n_levels < 1:
        raise ValueError(f"n_levels must be at least 1, got {n_levels}")

    submanifolds = []
    for alpha in range(n_levels + 1):
        topology = MIN if alpha == 0 else MAX if alpha == n_levels else SADDLE
        submanifolds.append(CriticalSubmanifold(UNITARY, 4.0 * alpha, topology, alpha=alpha))
    return submanifolds


def critical_submanifolds(objective) -> list[CriticalSubmanifold]:
    if isinstance(objective, UnitaryTarget):
        return enumerate_critical_jw(objective.n_levels)
    return enumerate_critical_jo(objective)


def _block_slices(degeneracies: tuple) -> list[slice]:
    offsets = np.concatenate([[0], np.cumsum(degeneracies)])
    return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]


def _block_singular_values(objective: EnsembleObjective, u: np.ndarray) -> dict:
    """
    Singular values of each o_i x p_j block of Q_O^dagger U Q_rho, descending
    """
    observable = eigen_structure(objective.observable)
    rho = eigen_structure(objective.rho0)
    rotated = observable.basis.conj().T @ u @ rho.basis

    singular_values = {}
    rows, cols = _block_slices(observable.degeneracies), _block_slices(rho.degeneracies)
    for (i, row), (j, col) in product(enumerate(rows), enumerate(cols)):
        values = np.linalg.svd(rotated[row, col], compute_uv=False)
        values[values < SINGULAR_VALUE_FLOOR] = 0.0
        singular_values[i, j] = np.sort(values)[::-1]
    return singular_values


def _raw_distances(singular_values: dict, entries: np.ndarray) -> np.ndarray:
    """
    Raw distance from U to the vertex of every table in entries (K x p x o).
    Per block, sum_k (pattern_k - s_k)^2 = sum_k s_k^2 + sum_{k < c_ij} (1 - 2 s_k).
    """
    total = np.zeros(len(entries))
    for (i, j), values in singular_values.items():
        gain = np.concatenate([[0.0], np.cumsum(1.0 - 2.0 * values)])
        total += np.sum(values**2) + gain[entries[:, i, j]]
    # The expanded form can round a few ulps below zero on a vertex
    return np.maximum(total, 0.0)


def _cityblock_spreads(flat: np.ndarray) -> np.ndarray:
    """
    Largest L1 distance from every row of flat to any other row, in chunks of rows
    """
    spreads = np.zeros(len(flat))
    for start in range(0, len(flat), SPREAD_CHUNK):
        block = cdist(flat[start : start + SPREAD_CHUNK], flat, "cityblock")
        spreads[start : start + SPREAD_CHUNK] = block.max(axis=1)
    return spreads


@dataclass(frozen=True)
class TableSet:
    """
    Every table with the given margins, stacked, with the largest vertex spread of each
    """

    tables: tuple
    entries: np.ndarray
    spreads: np.ndarray
    positions: dict

    def position(self, table: ContingencyTable) -> int:
        if table.entries not in self.positions:
            raise ValueError(f"Table {table.entries} does not have margins {table.row_margins}, {table.col_margins}")
        return self.positions[table.entries]


@lru_cache(maxsize=64)
def table_set(row_margins: tuple, col_margins: tuple) -> TableSet:
    tables = enumerate_tables(row_margins, col_margins)
    entries = np.stack([table.as_array() for table in tables])
    flat = entries.reshape(len(tables), -1).astype(float)

    n_levels = sum(row_margins)
    if len(tables) == 1:
        spreads = np.zeros(1)
    elif set(row_margins) == {1} and set(col_margins) == {1}:
        # Permutations: every one has a derangement relative to it
        spreads = np.full(len(tables), 2.0 * n_levels)
    else:
        spreads = _cityblock_spreads(flat)

    positions = {table.entries: k for k, table in enumerate(tables)}
    return TableSet(tables, entries, spreads, positions)


def ensemble_distances(
    objective: EnsembleObjective, u: np.ndarray, submanifolds: list[CriticalSubmanifold]
) -> np.ndarray:
    """
    Normalized distances from U to several ensemble submanifolds, sharing one
    block decomposition
    """
    if not submanifolds:
        return np.zeros(0)
    margins = submanifolds[0].table
    tables = table_set(margins.row_margins, margins.col_margins)
    positions = np.array([tables.position(submanifold.table) for submanifold in submanifolds])

    raw = _raw_distances(_block_singular_values(objective, u), tables.entries[positions])
    spreads = tables.spreads[positions]
    return np.divide(raw, spreads, out=np.zeros(len(positions)), where=spreads > 0)


def distance_jo(
    objective: EnsembleObjective, u: np.ndarray, target: CriticalSubmanifold
) -> float:
    if target.kind != ENSEMBLE:
        raise ValueError(f"distance_jo needs an ensemble submanifold, got {target.kind}")
    return float(ensemble_distances(objective, u, [target])[0])


def distance_jw(target_w: np.ndarray, u: np.ndarray, alpha: int) -> float:
    """
    The first alpha eigenvalues of W^dagger U (ascending real part) are
    measured against -1, the remaining ones against +1
    """
    n_levels = len(target_w)
    if not 0 <= alpha <= n_levels:
        raise ValueError(f"alpha must lie in [0, {n_levels}], got {alpha}")

    real_parts = np.sort(np.linalg.eigvals(np.asarray(target_w).conj().T @ u).real)
    total = np.sum(1 + real_parts[:alpha]) + np.sum(1 - real_parts[alpha:])
    return float(total / (2 * n_levels))


def distance_to(objective, u: np.ndarray, submanifold: CriticalSubmanifold) -> float:
    if isinstance(objective, UnitaryTarget):
        return distance_jw(objective.w, u, submanifold.alpha)
    return distance_jo(objective, u, submanifold)


def distances_to_all(objective, u: np.ndarray, submanifolds: list[CriticalSubmanifold]) -> np.ndarray:
    if isinstance(objective, UnitaryTarget):
        return np.array([distance_jw(objective.w, u, s.alpha) for s in submanifolds])
    return ensemble_distances(objective, u, submanifolds)


def critical_unitary(objective: EnsembleObjective, submanifold: CriticalSubmanifold) -> np.ndarray:
    """
    A propagator on the given submanifold: Q_O P Q_rho^dagger with P the
    permutation that sends c_ij eigenvectors of block j of rho onto block i of O
    """
    observable = eigen_structure(objective.observable)
    rho = eigen_structure(objective.rho0)
    entries = submanifold.table.as_array()

    n_levels = objective.n_levels
    permutation = np.zeros((n_levels, n_levels))
    free_rows = [list(range(s.start, s.stop)) for s in _block_slices(observable.degeneracies)]
    free_cols = [list(range(s.start, s.stop)) for s in _block_slices(rho.degeneracies)]
    for i, j in product(range(entries.shape[0]), range(entries.shape[1])):
        for _ in range(entries[i, j]):
            permutation[free_rows[i].pop(0), free_cols[j].pop(0)] = 1.0

    return observable.basis @ permutation @ rho.basis.conj().T


@dataclass(frozen=True)
class SaddleScan:
    submanifolds: list
    s_values: np.ndarray
    j_values: np.ndarray
    grad_norms: np.ndarray
    # One row per s-sample, one column per submanifold
    distances: np.ndarray

    def saddle_columns(self) -> list[int]:
        return [k for k, s in enumerate(self.submanifolds) if s.topology == SADDLE]

    def min_saddle_distance(self) -> float:
        columns = self.saddle_columns()
        if not columns:
            return float("nan")
        return float(self.distances[:, columns].min())


def saddle_scan(traj, system: QuantumSystem, objective, workers: int = 1) -> SaddleScan:
    """
    Distance from every recorded field of the trajectory to every critical submanifold
    """
    submanifolds = critical_submanifolds(objective)

    def scan(field) -> np.ndarray:
        u_final = propagate(system, field, keep_history=False).u_final
        return distances_to_all(objective, u_final, submanifolds)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(scan, traj.fields))
    else:
        rows = [scan(field) for field in traj.fields]

    return SaddleScan(
        submanifolds,
        np.array(traj.s_values),
        np.array(traj.j_values),
        np.array(traj.grad_norms),
        np.array(rows),
    )


def write_saddle_scan(scan: SaddleScan, filename: str) -> str:
    header = ["s", "J", "grad_norm"] + [
        f"D_{k} ({submanifold.label()})" for k, submanifold in enumerate(scan.submanifolds)
    ]
    rows = [
        [s, j, norm] + list(distances)
        for s, j, norm, distances in zip(scan.s_values, scan.j_values, scan.grad_norms, scan.distances)
    ]
    return ExporterCSV().write(header, rows, filename)
