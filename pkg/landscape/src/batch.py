from __future__ import annotations
from dataclasses import dataclass, field
from .analysis import RunRecord
from .critical import SaddleScan, saddle_scan
from .dynamics import TimeGrid
from .exporter_csv import ExporterCSV
from .flow import FlowConfig, FlowTrajectory, climb, euclidean_distance, generate_random_field, path_length
from .system import QuantumSystem


@dataclass
class Batch:
    """
    Everything a batch produced, handed from processor to processor
    """

    records: list
    output_directory: str
    # run_id -> SaddleScan, only when saddle scans are enabled
    scans: dict = field(default_factory=dict)
    # (lowest, highest) records, filled by the R split
    splits: tuple | None = None
    # Scalar results gathered for batch_summary.json
    summary: dict = field(default_factory=dict)
    exporter: ExporterCSV = field(default_factory=ExporterCSV)

    @property
    def written(self) -> list[str]:
        return self.exporter.written


def record_from_trajectory(run_id: int, seed: int, traj: FlowTrajectory) -> RunRecord:
    d_pl = path_length(traj)
    d_el = euclidean_distance(traj.initial_field, traj.final_field)
    return RunRecord(
        run_id=run_id,
        seed=seed,
        r_value=d_pl / d_el,
        d_pl=d_pl,
        d_el=d_el,
        j_start=float(traj.j_values[0]),
        j_end=float(traj.j_values[-1]),
        n_steps=traj.n_samples - 1,
        initial_field=traj.initial_field,
        final_field=traj.final_field,
    )


def execute_run(
    system: QuantumSystem,
    objective,
    grid: TimeGrid,
    n_components: int,
    flow_config: FlowConfig,
    run_id: int,
    seed: int,
    with_saddle_scan: bool = False,
) -> tuple[RunRecord, SaddleScan | None, FlowTrajectory]:
    """
    One landscape climb: random field, level adjustment, flow, R
    """
    field = generate_random_field(grid, n_components, seed)
    traj = climb(system, objective, field, flow_config)
    record = record_from_trajectory(run_id, seed, traj)
    if record.d_el == 0.0:
        raise ValueError(f"Run {run_id} ended where it started, R is undefined")

    scan = saddle_scan(traj, system, objective) if with_saddle_scan else None
    return record, scan, traj


def execute_batch_run(*args) -> tuple[RunRecord, SaddleScan | None]:
    """
    execute_run without the trajectory, which is too heavy to ship between processes
    """
    record, scan, _ = execute_run(*args)
    return record, scan
