# Searches the field parameters for a straight landscape trajectory (lowest R)
import os
from landscape.src.config import ExperimentConfig
from landscape.src.exporter import build_manifest
from landscape.src.exporter_json import ExporterJSON
from landscape.src.flow import write_field
from landscape.src.search import straight_shot_search
from landscape.src.utils import get_logger

logger = get_logger("app.services.run_straight_search")


def run_straight_search(config: ExperimentConfig, budget: int | None = None, seed: int | None = None) -> dict:
    """
    Entry point of the `search` command. Writes best_field.csv and search_report.json.
    """
    budget = budget if budget is not None else config.search_budget
    seed = seed if seed is not None else config.master_seed

    logger.info(f"🚀 Starting straight-shot search, budget {budget} flows...")

    logger.info("📋 Loading system...")
    system, objective = config.load_system()
    grid = config.grid()
    logger.info(f"✅ {config.printable_version()}, M = {config.field_components}")

    logger.info("🔎 Searching...")
    result = straight_shot_search(
        system,
        objective,
        grid,
        config.field_components,
        budget,
        seed,
        config.flow_config(),
        workers=config.workers,
    )
    logger.info(f"✅ Best R = {result.r_verified:.10g} (verified at full tolerance)")

    directory = os.path.join(config.output_directory, "search")
    logger.info(f"📝 Writing {directory}...")
    written = [write_field(result.field, os.path.join(directory, "best_field.csv"))]

    report = {
        "seed": seed,
        "budget": budget,
        "n_evaluations": result.n_evaluations,
        "r_search": result.r_search,
        "r_verified": result.r_verified,
        "amplitudes": result.amplitudes,
        "phases": result.phases,
        "best_per_generation": result.best_per_generation,
    }
    json_exporter = ExporterJSON()
    json_exporter.write(report, os.path.join(directory, "search_report.json"))
    manifest = build_manifest(directory, written + json_exporter.written, config.echo())
    json_exporter.write(manifest, os.path.join(directory, "manifest.json"))

    logger.info("🎉 Search completed successfully!")
    return report
