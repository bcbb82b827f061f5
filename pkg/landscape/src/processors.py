from .errors import ConfigError
from .processor_r_histogram import ProcessorRHistogram
from .processor_split_by_r import ProcessorSplitByR
from .processor_pairwise_distances import ProcessorPairwiseDistances
from .processor_saddle_summary import ProcessorSaddleSummary

default_processors = [
    ProcessorRHistogram,
    ProcessorSplitByR,
    ProcessorPairwiseDistances,
    ProcessorSaddleSummary,
]

processors_by_name = {
    "r_histogram": ProcessorRHistogram,
    "split_by_r": ProcessorSplitByR,
    "pairwise_distances": ProcessorPairwiseDistances,
    "saddle_summary": ProcessorSaddleSummary,
}


def build_processors(config) -> list:
    """
    Instantiates the processors named in the configuration, or the default pipeline
    """
    if config.processors is None:
        return [processor(config) for processor in default_processors]

    processors = []
    for name in config.processors:
        if name not in processors_by_name:
            raise ConfigError(
                f"Value for processors should be one of: {','.join(processors_by_name)}"
            )
        processors.append(processors_by_name[name](config))
    return processors
