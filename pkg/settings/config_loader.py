import copy
import json
import logging
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, Mapping, Optional

import jsonschema
from dotenv import load_dotenv

from errors import ConfigError
from fem.cg_solver import SolverConfig
from homog.problem_spec import ProblemSpec
from homog.study_report import AcceptanceThresholds
from settings.schema import CONFIG_SCHEMA, DEFAULTS

logger = logging.getLogger(__name__)

# Load environment variables from the .env file
load_dotenv()

OUT_DIR_ENV = "HOMOG_OUT"
LOG_LEVEL_ENV = "HOMOG_LOG_LEVEL"
WORKERS_ENV = "HOMOG_WORKERS"


def env_out_dir() -> Optional[str]:
    return os.getenv(OUT_DIR_ENV) or None


def env_log_level() -> str:
    return os.getenv(LOG_LEVEL_ENV, "INFO").upper()


def env_workers() -> Optional[int]:
    raw = os.getenv(WORKERS_ENV)
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected an integer, got {raw!r}")


def _error_path(error: jsonschema.ValidationError) -> str:
    path = ".".join(str(part) for part in error.absolute_path)
    return path or "<root>"


def validate_config(raw: Mapping[str, Any]) -> None:
    """
    Checks a raw config against the schema; the first violation becomes a ConfigError.
    """
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(_error_path(errors[0]), errors[0].message)


def fill_defaults(raw: Mapping[str, Any]) -> Dict[str, Any]:
    filled = copy.deepcopy(dict(raw))
    for key, default in DEFAULTS.items():
        if isinstance(default, dict):
            section = copy.deepcopy(default)
            section.update(filled.get(key, {}))
            filled[key] = section
        else:
            filled.setdefault(key, default)
    return filled


@dataclass(frozen=True)
class RunConfig:
    """
    A validated configuration with every default filled in.

    Attributes:
        data: The filled config, the form echoed into summary.json.
    """
    data: Dict[str, Any]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def solver_config(self) -> SolverConfig:
        solver = self.data["solver"]
        return SolverConfig(float(solver["tolerance"]), int(solver["max_iterations"]))

    def problem_spec(self) -> ProblemSpec:
        domain = self.data["domain"]
        problem = self.data["problem"]
        lipschitz = self.data["lipschitz"]
        return ProblemSpec(
            coefficient=self.data["coefficient"],
            shape=domain["shape"],
            dimension=int(domain["dimension"]),
            source=problem["source"],
            source_scale=float(problem["source_scale"]),
            boundary=problem["boundary"],
            inverse_eps=tuple(problem["inverse_eps"]),
            subdivisions=int(domain["s"]),
            cell_divisions=int(self.data["cell"]["m"]),
            solver=self.solver_config(),
            meyers_q=float(lipschitz["q"]),
            alpha=lipschitz["alpha"],
        )

    def thresholds(self, shape: str) -> AcceptanceThresholds:
        defaults = AcceptanceThresholds.for_shape(shape)
        overrides = self.data.get("acceptance")
        if not overrides:
            return defaults
        return replace(defaults, **overrides)

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        if seed is None:
            return self
        data = copy.deepcopy(self.data)
        data["seed"] = int(seed)
        return RunConfig(data)


def parse_config(raw: Mapping[str, Any]) -> RunConfig:
    validate_config(raw)
    return RunConfig(fill_defaults(raw))


def load_config(path: str) -> RunConfig:
    """
    Reads, validates and fills a JSON configuration file.

    Args:
        path: Path of the JSON file.

    Returns:
        The RunConfig.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError("--config", f"no such file {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("--config", f"{path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "the config must be a JSON object")
    config = parse_config(raw)
    logger.info("Loaded config %s (coefficient %s)", path, config.data["coefficient"])
    return config
