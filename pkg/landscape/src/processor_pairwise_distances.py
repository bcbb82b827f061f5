import os
import numpy as np
from .analysis import CROSS, WITHIN_A, WITHIN_B, pairwise_distances, split_by_r
from .batch import Batch
from .config import ExperimentConfig
from .processor import Processor

FAMILIES = ["initial_initial", "final_final", "initial_final"]


class ProcessorPairwiseDistances(Processor):
    """
    Pairwise field distances inside the low-R and high-R subsets:
    initial-initial, final-final and all initial-final pairs, histogrammed on
    one bin grid shared by both subsets
    """

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self.bin_width: float = config.distance_bin_width
        self.k: int = config.split_k

    def distances(self, records: list) -> dict:
        initial = [record.initial_field for record in records]
        final = [record.final_field for record in records]
        if not records:
            return {family: np.zeros(0) for family in FAMILIES}
        return {
            "initial_initial": pairwise_distances(initial, final, WITHIN_A),
            "final_final": pairwise_distances(initial, final, WITHIN_B),
            "initial_final": pairwise_distances(initial, final, CROSS),
        }

    def process(self, batch: Batch):
        if batch.splits is None:
            batch.splits = split_by_r(batch.records, self.k)

        subsets = {
            "low": self.distances(batch.splits[0]),
            "high": self.distances(batch.splits[1]),
        }

        largest = max(
            [float(values.max()) for family in subsets.values() for values in family.values() if len(values)],
            default=0.0,
        )
        n_bins = int(np.floor(largest / self.bin_width)) + 1
        edges = self.bin_width * np.arange(n_bins + 1)

        for name, families in subsets.items():
            counts = {family: np.histogram(families[family], bins=edges)[0] for family in FAMILIES}
            for family in FAMILIES:
                values = families[family]
                batch.summary[f"{name}_{family}_mean"] = float(values.mean()) if len(values) else float("nan")
                batch.summary[f"{name}_{family}_count"] = len(values)

            rows = [
                [low, high] + [counts[family][b] for family in FAMILIES]
                for b, (low, high) in enumerate(zip(edges[:-1], edges[1:]))
            ]
            batch.exporter.write(
                ["bin_low", "bin_high"] + FAMILIES,
                rows,
                os.path.join(batch.output_directory, f"pairwise_{name}.csv"),
            )
