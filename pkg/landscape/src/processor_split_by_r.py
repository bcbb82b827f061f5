import os
from .analysis import split_by_r
from .batch import Batch
from .config import ExperimentConfig
from .processor import Processor


class ProcessorSplitByR(Processor):
    """
    Splits the batch into its k lowest-R and k highest-R runs
    """

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self.k: int = config.split_k

    def process(self, batch: Batch):
        lowest, highest = split_by_r(batch.records, self.k)
        batch.splits = (lowest, highest)

        if lowest:
            batch.summary["r_low_threshold"] = lowest[-1].r_value
            batch.summary["r_high_threshold"] = highest[0].r_value

        for name, records in [("split_low.csv", lowest), ("split_high.csv", highest)]:
            batch.exporter.write(
                ["run_id", "seed", "r_value"],
                [[record.run_id, record.seed, record.r_value] for record in records],
                os.path.join(batch.output_directory, name),
            )
