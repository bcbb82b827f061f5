import os
from .analysis import r_histogram
from .batch import Batch
from .config import ExperimentConfig
from .processor import Processor
from .utils import get_logger

logger = get_logger("landscape.processor")


class ProcessorRHistogram(Processor):
    """
    Distribution of the R values of the batch, written to r_histogram.csv
    """

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self.bin_width: float = config.histogram_bin_width

    def process(self, batch: Batch):
        result = r_histogram(batch.records, self.bin_width)
        logger.info(f"R mean = {result.mean:.6g}, median = {result.median:.6g}, max = {result.maximum:.6g}")

        batch.summary["r_mean"] = result.mean
        batch.summary["r_median"] = result.median
        batch.summary["r_max"] = result.maximum
        batch.summary["r_below_2"] = sum(1 for record in batch.records if record.r_value < 2.0)

        batch.exporter.write(
            ["bin_low", "bin_high", "count"],
            result.rows(),
            os.path.join(batch.output_directory, "r_histogram.csv"),
        )
