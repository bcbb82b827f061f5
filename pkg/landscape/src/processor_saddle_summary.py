import os
import numpy as np
from .analysis import saddle_summary
from .batch import Batch
from .config import ExperimentConfig
from .processor import Processor
from .utils import get_logger

logger = get_logger("landscape.processor")


class ProcessorSaddleSummary(Processor):
    """
    Saddle summary processor.
    When saddle scans are enabled, reports per run the closest approach to any
    saddle submanifold, and the mean of it over the top and bottom deciles of R.
    """

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self.enabled: bool = config.saddle_scan

    def process(self, batch: Batch):
        if not self.enabled or not batch.scans:
            return

        records = {record.run_id: record for record in batch.records}
        summaries = saddle_summary([(records[run_id], scan) for run_id, scan in batch.scans.items()])

        batch.exporter.write(
            ["run_id", "r_value", "min_saddle_distance", "s_at_min", "grad_norm_at_min"],
            [summary.row() for summary in summaries],
            os.path.join(batch.output_directory, "saddle_summary.csv"),
        )

        ordered = sorted(summaries, key=lambda summary: (summary.r_value, summary.run_id))
        decile = max(1, len(ordered) // 10)
        bottom = [summary.min_saddle_distance for summary in ordered[:decile]]
        top = [summary.min_saddle_distance for summary in ordered[-decile:]]
        batch.summary["saddle_distance_bottom_decile"] = float(np.nanmean(bottom))
        batch.summary["saddle_distance_top_decile"] = float(np.nanmean(top))
        logger.info(
            f"Closest saddle approach: {batch.summary['saddle_distance_bottom_decile']:.4g} (low R), "
            f"{batch.summary['saddle_distance_top_decile']:.4g} (high R)"
        )
