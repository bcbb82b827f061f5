# Flows one trajectory and tests the Hessian-gradient eigen-relation along it
import os
from landscape.src.analysis import eigen_relation_agreement, eigen_relation_scan, sign_changes, write_eigen_relation
from landscape.src.batch import record_from_trajectory
from landscape.src.config import ExperimentConfig
from landscape.src.exporter import build_manifest
from landscape.src.exporter_json import ExporterJSON
from landscape.src.flow import climb, generate_random_field, read_field, write_trajectory
from landscape.src.utils import get_logger

logger = get_logger("app.services.run_eigen_relation")

# Above this many levels the O(n_points^2) Hessians get slow
RECOMMENDED_MAX_LEVELS = 4


def run_eigen_relation(config: ExperimentConfig, seed: int | None = None, field_file: str | None = None) -> dict:
    """
    Entry point of the `eigen` command. The initial field comes either from a
    seed or from a field file (e.g. best_field.csv of a search).
    """
    if (seed is None) == (field_file is None):
        raise ValueError("Give either a seed or a field file")

    logger.info("🚀 Starting eigen-relation scan...")

    logger.info("📋 Loading system...")
    system, objective = config.load_system()
    grid = config.grid()
    flow_config = config.flow_config()
    if system.n_levels > RECOMMENDED_MAX_LEVELS:
        logger.warning(
            f"N = {system.n_levels}: Hessians cost {grid.n_points}^2 gradient entries per sample, expect a long scan"
        )

    if field_file is not None:
        field = read_field(field_file, grid)
        logger.info(f"✅ Initial field read from {field_file}")
    else:
        field = generate_random_field(grid, config.field_components, seed)
        logger.info(f"✅ Initial field from seed {seed}")

    logger.info("🧗 Running flow...")
    traj = climb(system, objective, field, flow_config)
    record = record_from_trajectory(0, seed if seed is not None else 0, traj)
    logger.info(f"✅ R = {record.r_value:.8g} after {record.n_steps} steps")

    logger.info(f"🔬 Scanning every {config.eigen_stride} samples...")
    samples = eigen_relation_scan(
        system, objective, traj, config.eigen_stride, flow_config, workers=config.workers
    )

    directory = os.path.join(config.output_directory, "eigen_relation")
    logger.info(f"📝 Writing {directory}...")
    written = write_eigen_relation(samples, directory)
    written += write_trajectory(traj, directory)

    report = record.summary()
    report["field_source"] = os.path.basename(field_file) if field_file else f"seed {seed}"
    report["n_samples"] = len(samples)
    report["rayleigh_sign_changes"] = sign_changes([sample.rayleigh for sample in samples])
    report["rho_ratio_agreement"] = eigen_relation_agreement(samples)
    report["max_relative_gap"] = max(
        (sample.nearest_eig_gap / sample.spectral_radius for sample in samples if sample.spectral_radius > 0),
        default=0.0,
    )

    json_exporter = ExporterJSON()
    json_exporter.write(report, os.path.join(directory, "eigen_report.json"))
    manifest = build_manifest(directory, written + json_exporter.written, config.echo())
    json_exporter.write(manifest, os.path.join(directory, "manifest.json"))

    logger.info("🎉 Eigen-relation scan completed successfully!")
    return report
