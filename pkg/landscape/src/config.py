from __future__ import annotations
import os
import commentjson as json
from .dynamics import TimeGrid
from .errors import ConfigError
from .flow import DIRECTIONS, FlowConfig
from .objectives import GRADIENT_METHODS
from .system import PRESET_TAGS, build_preset, ensure_valid, load_system_file, preset_info
from .utils import get_logger

logger = get_logger("landscape.config")

WORKERS_ENVIRONMENT = "LANDSCAPE_WORKERS"

DEFAULTS: dict = {
    "preset": None,
    "system_file": None,
    "dipole_sign_seed": 0,
    "horizon": 10.0,
    "n_points": 1001,
    # null: 60 for the 8-level presets, 20 otherwise
    "field_components": None,
    "direction": None,
    "j_start_fraction": 0.01,
    "j_end_fraction": 0.01,
    "rel_step_tolerance": 1e-6,
    "abs_step_tolerance": 1e-9,
    # null: 1e-6 of the objective range
    "level_tolerance": None,
    "max_s_steps": 20000,
    "record_every_step": True,
    "gradient_method": "exact",
    "convergence_check": False,
    "march_step": 0.02,
    "n_runs": 1000,
    "master_seed": 0,
    "workers": 1,
    "saddle_scan": False,
    "eigen_stride": 1,
    # null: n_runs // 4
    "split_k": None,
    "histogram_bin_width": 0.01,
    "distance_bin_width": 0.01,
    "search_budget": 2000,
    # null: <config dir>/output
    "output_directory": None,
    # null: the default pipeline
    "processors": None,
}

# Keys that never change results, left out of the echoed configuration
NON_RESULT_KEYS = ["workers", "output_directory"]

BOOLEANS = [True, False]


class ExperimentConfig:
    def __init__(self, experiment_path: str | None = None, data: dict | None = None, base_directory: str = "."):
        if experiment_path is not None:
            self.config_file: str = experiment_path
            if os.path.isdir(experiment_path):
                self.config_file = os.path.join(experiment_path, "config.json")

            if not os.path.exists(self.config_file):
                raise ConfigError(f"ERROR: The file {self.config_file} can't be found")
            with open(self.config_file, "r", encoding="utf8") as stream:
                try:
                    self.config: dict = json.load(stream)
                except Exception as error:
                    raise ConfigError(f"ERROR: {self.config_file} is not valid JSON: {error}")
            self.base_directory: str = os.path.dirname(os.path.abspath(self.config_file))
            logger.debug(f"Config file: {self.config_file}")
        else:
            self.config_file = None
            self.config = dict(data or {})
            self.base_directory = os.path.abspath(base_directory)

        if not isinstance(self.config, dict):
            raise ConfigError("ERROR: the configuration must be a JSON object")

        self.read_configuration()

    @classmethod
    def from_dict(cls, data: dict, base_directory: str = ".") -> ExperimentConfig:
        return cls(data=data, base_directory=base_directory)

    def to_camel_case(self, snake_str: str) -> str:
        """
        Converts a string to camel case
        """
        components = snake_str.split("_")
        return components[0] + "".join(x.title() for x in components[1:])

    def get(self, name: str, default=None, required: bool = True, values_list=None):
        """
        Gets an entry from the configuration

        Args:
            name (str): entry name
            default: fallback value if the entry is not present. Defaults to None.
            required (bool, optional): whether the entry is required when no default exists. Defaults to True.
            values_list: list of allowed values. Defaults to None.
        """
        camel_name = self.to_camel_case(name)

        if name in self.config or camel_name in self.config:
            value = self.config[name] if name in self.config else self.config[camel_name]

            if values_list is not None and value not in values_list:
                raise ConfigError(
                    f"Value for {name} should be one of: {','.join(str(v) for v in values_list)}"
                )
            return value
        elif required and default is None:
            raise ConfigError(f"ERROR: missing required key {name} in config")

        return default

    def _number(self, name: str, kind=float, minimum=None, exclusive: bool = False):
        value = self.get(name, DEFAULTS[name], required=False)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"ERROR: {name} must be a number, got {value!r}")
        if kind is int and int(value) != value:
            raise ConfigError(f"ERROR: {name} must be an integer, got {value}")
        value = kind(value)
        if minimum is not None and (value < minimum or (exclusive and value == minimum)):
            bound = ">" if exclusive else ">="
            raise ConfigError(f"ERROR: {name} must be {bound} {minimum}, got {value}")
        return value

    def read_configuration(self):
        """
        Load and check configuration entries
        """
        # System
        self.preset: str | None = self.get("preset", required=False, values_list=PRESET_TAGS + [None])
        self.system_file: str | None = self.get("system_file", required=False)
        if self.preset is None and self.system_file is None:
            raise ConfigError("You need to specify either a preset or a system_file")
        if self.preset is not None and self.system_file is not None:
            raise ConfigError("You can't specify both preset and system_file")
        if self.system_file is not None and not os.path.isabs(self.system_file):
            self.system_file = os.path.join(self.base_directory, self.system_file)
        self.dipole_sign_seed: int = self._number("dipole_sign_seed", int, 0)

        # Grid and fields
        self.horizon: float = self._number("horizon", float, 0.0, exclusive=True)
        self.n_points: int = self._number("n_points", int, 2)
        self.field_components: int | None = self._number("field_components", int, 1)
        if self.field_components is None:
            self.field_components = preset_info(self.preset).field_components if self.preset else 20

        # Flow
        self.direction: str | None = self.get("direction", required=False, values_list=DIRECTIONS + [None])
        self.j_start_fraction: float = self._number("j_start_fraction", float, 0.0, exclusive=True)
        self.j_end_fraction: float = self._number("j_end_fraction", float, 0.0, exclusive=True)
        self.rel_step_tolerance: float = self._number("rel_step_tolerance", float, 0.0, exclusive=True)
        self.abs_step_tolerance: float = self._number("abs_step_tolerance", float, 0.0, exclusive=True)
        self.level_tolerance: float | None = self._number("level_tolerance", float, 0.0, exclusive=True)
        self.max_s_steps: int = self._number("max_s_steps", int, 1)
        self.record_every_step: bool = bool(self.get("record_every_step", True, values_list=BOOLEANS))
        self.gradient_method: str = self.get("gradient_method", "exact", values_list=GRADIENT_METHODS)
        self.march_step: float = self._number("march_step", float, 0.0, exclusive=True)
        self.convergence_check: bool = bool(self.get("convergence_check", False, values_list=BOOLEANS))

        # Batch
        self.n_runs: int = self._number("n_runs", int, 1)
        self.master_seed: int = self._number("master_seed", int, 0)
        self.workers: int = self._number("workers", int, 1)
        environment_workers = os.environ.get(WORKERS_ENVIRONMENT)
        if environment_workers:
            try:
                self.workers = int(environment_workers)
            except ValueError:
                raise ConfigError(f"ERROR: {WORKERS_ENVIRONMENT} must be an integer, got {environment_workers}")
            if self.workers < 1:
                raise ConfigError(f"ERROR: {WORKERS_ENVIRONMENT} must be >= 1, got {self.workers}")

        # Analysis
        self.saddle_scan: bool = bool(self.get("saddle_scan", False, values_list=BOOLEANS))
        self.eigen_stride: int = self._number("eigen_stride", int, 1)
        self.split_k: int | None = self._number("split_k", int, 0)
        if self.split_k is None:
            self.split_k = self.n_runs // 4
        if 2 * self.split_k > self.n_runs:
            raise ConfigError(f"ERROR: split_k = {self.split_k} exceeds half of n_runs = {self.n_runs}")
        self.histogram_bin_width: float = self._number("histogram_bin_width", float, 0.0, exclusive=True)
        self.distance_bin_width: float = self._number("distance_bin_width", float, 0.0, exclusive=True)
        self.search_budget: int = self._number("search_budget", int, 1)
        self.processors: list | None = self.get("processors", required=False)

        # Output directory
        self.output_directory: str = self.get("output_directory", required=False)
        if self.output_directory is None:
            self.output_directory = os.path.join(self.base_directory, "output")
        elif not os.path.isabs(self.output_directory):
            self.output_directory = os.path.join(self.base_directory, self.output_directory)

        try:
            self.flow_config()
        except ValueError as error:
            raise ConfigError(f"ERROR: {error}")

    def override(
        self,
        workers: int | None = None,
        output_directory: str | None = None,
        master_seed: int | None = None,
    ):
        """
        Command line values win over the environment and the file
        """
        if workers is not None:
            if workers < 1:
                raise ConfigError(f"ERROR: workers must be >= 1, got {workers}")
            self.workers = workers
        if output_directory is not None:
            self.output_directory = os.path.abspath(output_directory)
        if master_seed is not None:
            if master_seed < 0:
                raise ConfigError(f"ERROR: master_seed must be >= 0, got {master_seed}")
            self.master_seed = master_seed

    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.n_points)

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            direction=self.direction,
            j_start_fraction=self.j_start_fraction,
            j_end_fraction=self.j_end_fraction,
            rel_step_tolerance=self.rel_step_tolerance,
            abs_step_tolerance=self.abs_step_tolerance,
            level_tolerance=self.level_tolerance,
            max_s_steps=self.max_s_steps,
            record_every_step=self.record_every_step,
            march_step=self.march_step,
            gradient_method=self.gradient_method,
            convergence_check=self.convergence_check,
        )

    def load_system(self):
        """
        Builds the system and objective, raising InvalidSystemError if they break an invariant
        """
        if self.preset is not None:
            system, objective = build_preset(self.preset, self.dipole_sign_seed)
        else:
            system, objective = load_system_file(self.system_file)
        ensure_valid(system, objective)
        return system, objective

    def echo(self) -> dict:
        """
        Resolved configuration, without the keys that cannot change results
        """
        echo = {name: getattr(self, name) for name in DEFAULTS if name not in NON_RESULT_KEYS}
        if self.system_file is not None:
            echo["system_file"] = os.path.basename(self.system_file)
        return echo

    def printable_version(self) -> str:
        if self.preset is not None:
            return f"preset: {self.preset} / dipole_sign_seed: {self.dipole_sign_seed}"
        return f"system_file: {self.system_file}"
