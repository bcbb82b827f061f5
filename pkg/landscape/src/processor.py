from .batch import Batch
from .config import ExperimentConfig


class Processor:
    def __init__(self, config: ExperimentConfig):
        self.config: ExperimentConfig = config

    def process(self, batch: Batch):
        pass
