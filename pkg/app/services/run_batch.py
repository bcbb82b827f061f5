# Runs n_runs seeded landscape climbs, post-processes them and writes every artifact with a manifest
import os
from concurrent.futures import ProcessPoolExecutor
from landscape.src.batch import Batch, execute_batch_run
from landscape.src.config import ExperimentConfig
from landscape.src.critical import write_saddle_scan
from landscape.src.errors import BatchRunError
from landscape.src.exporter import build_manifest
from landscape.src.exporter_json import ExporterJSON
from landscape.src.processors import build_processors
from landscape.src.rng import derive_seed
from landscape.src.utils import get_logger

logger = get_logger("app.services.run_batch")


def _field_rows(records: list, attribute: str) -> list:
    return [[record.run_id] + list(getattr(record, attribute).values) for record in records]


def run_batch(config: ExperimentConfig) -> dict:
    """
    Entry point of the `batch` command.
    Run i uses seed derive_seed(master_seed, i), so `single --seed` reproduces any run.
    Returns the manifest.
    """
    logger.info("🚀 Starting landscape batch...")

    logger.info("📋 Loading system...")
    system, objective = config.load_system()
    grid = config.grid()
    flow_config = config.flow_config()
    logger.info(f"✅ {config.printable_version()}, N = {system.n_levels}, {config.n_runs} runs, {config.workers} workers")

    seeds = [derive_seed(config.master_seed, run_id) for run_id in range(config.n_runs)]
    arguments = [
        (system, objective, grid, config.field_components, flow_config, run_id, seed, config.saddle_scan)
        for run_id, seed in enumerate(seeds)
    ]

    logger.info("🧗 Running flows...")
    results = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(execute_batch_run, *args) for args in arguments]
            # Collected in run_id order whatever order they finish in
            for run_id, future in enumerate(futures):
                try:
                    results.append(future.result())
                except Exception as error:
                    executor.shutdown(cancel_futures=True)
                    raise BatchRunError(run_id, seeds[run_id], error) from error
                logger.debug(f"  Run {run_id + 1}/{config.n_runs}: R = {results[-1][0].r_value:.6g}")
    else:
        for run_id, args in enumerate(arguments):
            try:
                results.append(execute_batch_run(*args))
            except Exception as error:
                raise BatchRunError(run_id, seeds[run_id], error) from error
            logger.debug(f"  Run {run_id + 1}/{config.n_runs}: R = {results[-1][0].r_value:.6g}")
    logger.info(f"✅ {len(results)} flows completed")

    records = [record for record, _ in results]
    batch = Batch(records, config.output_directory)
    if config.saddle_scan:
        batch.scans = {record.run_id: scan for record, scan in results}

    logger.info("📝 Writing runs...")
    os.makedirs(config.output_directory, exist_ok=True)
    summaries = [record.summary() for record in records]
    batch.exporter.write(
        list(summaries[0].keys()),
        [list(summary.values()) for summary in summaries],
        os.path.join(config.output_directory, "runs.csv"),
    )
    header = ["run_id"] + [f"t_{k}" for k in range(grid.n_points)]
    batch.exporter.write(header, _field_rows(records, "initial_field"), os.path.join(config.output_directory, "initial_fields.csv"))
    batch.exporter.write(header, _field_rows(records, "final_field"), os.path.join(config.output_directory, "final_fields.csv"))

    if config.saddle_scan:
        for run_id, scan in batch.scans.items():
            path = os.path.join(config.output_directory, "saddle", f"run_{run_id:05d}.csv")
            batch.written.append(write_saddle_scan(scan, path))

    logger.info("⚙️ Applying processors...")
    processors = build_processors(config)
    for i, processor in enumerate(processors):
        logger.info(f"  Processing step {i+1}/{len(processors)}: {type(processor).__name__}")
        processor.process(batch)
    logger.info("✅ All processors applied successfully")

    json_exporter = ExporterJSON()
    batch.summary["n_runs"] = config.n_runs
    json_exporter.write(batch.summary, os.path.join(config.output_directory, "batch_summary.json"))
    json_exporter.write(config.echo(), os.path.join(config.output_directory, "config_echo.json"))

    manifest = build_manifest(
        config.output_directory, batch.written + json_exporter.written, config.echo()
    )
    json_exporter.write(manifest, os.path.join(config.output_directory, "manifest.json"))

    logger.info("🎉 Batch completed successfully!")
    return manifest
