# One landscape climb with per-step recording, optional saddle scan and straight-march comparison
import os
from landscape.src.batch import execute_run
from landscape.src.config import ExperimentConfig
from landscape.src.critical import write_saddle_scan
from landscape.src.exporter import build_manifest
from landscape.src.exporter_json import ExporterJSON
from landscape.src.flow import level_targets, straight_march, write_trajectory
from landscape.src.utils import get_logger

logger = get_logger("app.services.run_single")


def run_single(config: ExperimentConfig, seed: int, run_id: int = 0) -> dict:
    """
    Entry point of the `single` command.
    Writes run_<seed>/ with trajectory.csv, fields.csv, record.json and,
    when enabled, saddle_scan.csv. Returns the record as written.
    """
    logger.info(f"🚀 Starting single run with seed {seed}...")

    logger.info("📋 Loading system...")
    system, objective = config.load_system()
    grid = config.grid()
    flow_config = config.flow_config()
    logger.info(f"✅ {config.printable_version()}, N = {system.n_levels}")

    logger.info("🧗 Running flow...")
    record, scan, traj = execute_run(
        system,
        objective,
        grid,
        config.field_components,
        flow_config,
        run_id,
        seed,
        config.saddle_scan,
    )
    logger.info(f"✅ R = {record.r_value:.8g} after {record.n_steps} steps")

    # How far the straight shot from the same start gets
    j_start, j_end = level_targets(objective, flow_config)
    _, march_j = straight_march(system, objective, traj.initial_field, flow_config)

    directory = os.path.join(config.output_directory, f"run_{seed}")
    logger.info(f"📝 Writing {directory}...")
    written = write_trajectory(traj, directory)
    if scan is not None:
        written.append(write_saddle_scan(scan, os.path.join(directory, "saddle_scan.csv")))

    data = record.summary()
    data["j_target_start"] = j_start
    data["j_target_end"] = j_end
    data["straight_march_j"] = march_j
    data["straight_march_fraction"] = (march_j - j_start) / (j_end - j_start)

    json_exporter = ExporterJSON()
    json_exporter.write(data, os.path.join(directory, "record.json"))
    manifest = build_manifest(directory, written + json_exporter.written, config.echo())
    json_exporter.write(manifest, os.path.join(directory, "manifest.json"))

    logger.info("🎉 Single run completed successfully!")
    return data
