"""Experiment orchestration: configs, runners, bundles, the CLI."""

from .bundle import ResultBundle  # noqa: F401
from .config import KINDS, ExperimentConfig, parse_config  # noqa: F401
from .experiments import RUNNERS, rerun, run_experiment  # noqa: F401
from .io import CSV_SCHEMAS, validate_csv, validate_path_csv  # noqa: F401
