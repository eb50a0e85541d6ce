"""Run configuration: config-file discovery, loading and flag merging."""

from pathlib import Path
from typing import Any, Dict, Literal, Optional

import yaml
from platformdirs import user_config_dir
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from waveguide_bh.exceptions import ConfigError, WaveguideError
from waveguide_bh.lattice import ModelParams, make_params
from waveguide_bh.propagation import IntegratorConfig
from waveguide_bh.states import InitialStateSpec
from waveguide_bh.utils import parse_numbers

APP_NAME = "waveguide-bh"
LOCAL_CONFIG_NAME = "waveguide-bh.conf"

MODEL_KEYS = ("L", "kappa", "beta_r", "gamma", "gamma_nn")
INITIAL_KEYS = ("init", "sites", "alpha_ts", "state_file")
INTEGRATOR_KEYS = ("t_final", "dt", "sample_every", "method")
OUTPUT_KEYS = ("out", "format", "snapshot_times")
KNOWN_KEYS = set(MODEL_KEYS + INITIAL_KEYS + INTEGRATOR_KEYS + OUTPUT_KEYS + ("jobs", "t0"))


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    out_dir: Path = Path("results")
    snapshot_times: tuple[float, ...] = ()
    format: Literal["csv", "json"] = "csv"


class RunConfig(BaseModel):
    """Everything one command invocation needs."""

    model_config = ConfigDict(frozen=True)

    model: ModelParams = ModelParams()
    initial: InitialStateSpec = InitialStateSpec()
    integrator: IntegratorConfig = IntegratorConfig()
    outputs: OutputConfig = OutputConfig()
    jobs: int = Field(default=1, ge=1)
    t0: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)
    source: Optional[str] = None

    @model_validator(mode="after")
    def _check_snapshot_times(self) -> "RunConfig":
        t_final = self.integrator.t_final
        for t in self.outputs.snapshot_times:
            if not 0.0 <= t <= t_final:
                raise ValueError(f"snapshot time {t!r} outside [0, {t_final!r}]")
        return self

    def metadata(self, command: str) -> Dict[str, Any]:
        """Parameters recorded in the header of every result file."""
        from waveguide_bh import __version__

        initial = self.initial.model_dump(mode="json")
        return {
            "generated_by": f"{APP_NAME} {__version__}",
            "command": command,
            "model": self.model.model_dump(mode="json"),
            "boundary": self.model.boundary,
            "initial": initial,
            "integrator": self.integrator.model_dump(mode="json"),
        }


def _parse_flat(text: str, source: str) -> Dict[str, str]:
    """Parse 'key = value' lines; '#' starts a comment."""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}", source)
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _parse_sites(value: Any) -> Optional[tuple[int, int]]:
    if value is None:
        return None
    if isinstance(value, str):
        parts = [p for p in value.replace(";", ",").split(",") if p.strip()]
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ConfigError(f"sites must be two comma-separated indices, got {value!r}")
    return int(parts[0]), int(parts[1])


class RunConfigLoader:
    """Locates, loads and merges run configuration."""

    def __init__(self, config_path: Optional[str] = None) -> None:
        """Initialize the loader.

        Args:
            config_path: Optional explicit configuration file
        """
        self.config_path = self._find_config(config_path)

    def _find_config(self, config_path: Optional[str]) -> Optional[Path]:
        """Find a configuration file using multiple strategies.

        Raises:
            ConfigError: If an explicit path does not exist
        """
        if config_path:
            path = Path(config_path)
            if not path.is_file():
                raise ConfigError(f"configuration file not found: {path}", str(path))
            return path

        candidates = [
            Path.cwd() / LOCAL_CONFIG_NAME,
            Path(user_config_dir(APP_NAME)) / "config.yaml",
        ]
        for candidate in candidates:
            if candidate.is_file():
                return candidate
        return None

    def load_values(self) -> Dict[str, Any]:
        """Raw key/value pairs from the configuration file (empty if none).

        Raises:
            ConfigError: If the file cannot be read or has unknown keys
        """
        if self.config_path is None:
            return {}
        source = str(self.config_path)
        try:
            text = self.config_path.read_text(encoding="utf-8")
            if self.config_path.suffix in (".yaml", ".yml"):
                values = yaml.safe_load(text) or {}
                if not isinstance(values, dict):
                    raise ConfigError("YAML configuration must be a mapping", source)
                values = {str(k).replace("-", "_"): v for k, v in values.items()}
            else:
                values = _parse_flat(text, source)
        except (yaml.YAMLError, OSError) as e:
            raise ConfigError(f"Failed to load config from {source}: {e}", source)

        unknown = sorted(set(values) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}", source)
        return values

    def build(self, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """Merge defaults < config file < overrides into a RunConfig.

        Override values of None mean "not given on the command line".

        Raises:
            ConfigError: If values fail validation
            ParameterError: If model parameters violate an invariant
        """
        values = self.load_values()
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        source = str(self.config_path) if self.config_path else None

        try:
            model = make_params(**{k: values[k] for k in MODEL_KEYS if k in values})
            initial = InitialStateSpec(
                kind=values.get("init", "local"),
                sites=_parse_sites(values.get("sites")),
                alpha_ts=values.get("alpha_ts", 0.9),
                path=values.get("state_file"),
            )
            integrator = IntegratorConfig(
                **{k: values[k] for k in INTEGRATOR_KEYS if k in values}
            )
            outputs = OutputConfig(
                out_dir=values.get("out", "results"),
                format=values.get("format", "csv"),
                snapshot_times=tuple(parse_numbers(values.get("snapshot_times"))),
            )
            return RunConfig(
                model=model,
                initial=initial,
                integrator=integrator,
                outputs=outputs,
                jobs=values.get("jobs", 1),
                t0=values.get("t0"),
                source=source,
            )
        except WaveguideError:
            raise
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first.get("loc", ()))
            message = str(first.get("ctx", {}).get("error") or first["msg"])
            raise ConfigError(
                f"invalid configuration{f' ({location})' if location else ''}: {message}",
                source,
            )
        except ValueError as e:
            raise ConfigError(f"invalid configuration value: {e}", source)
