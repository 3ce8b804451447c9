import os
import logging
from pathlib import Path
from typing import Optional, Dict, Any, Callable, TypeVar

try:
    # dotenv is optional; used in local/dev
    from dotenv import load_dotenv  # type: ignore
except Exception:  # pragma: no cover

    def load_dotenv(*args, **kwargs):
        return False


logger = logging.getLogger(__name__)


_T = TypeVar("_T")

PROJECT_ROOT = Path(__file__).resolve().parent.parent


def _as_bool(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes")


class ConfigManager:
    """Configuration for the mixing laboratory.

    Responsibilities:
    - Loads optional .env from project root for local dev
    - Reads the logging settings and the default artifact directory from the
      environment
    - Holds the budget and threshold defaults that scenarios and CLI flags
      override per run
    """

    def __init__(self) -> None:
        self._load_dotenv_from_project_root()
        self._load_settings()

    # ---------- Initialization helpers ----------
    def _load_dotenv_from_project_root(self) -> None:
        env_path = PROJECT_ROOT / ".env"
        try:
            if env_path.exists():
                load_dotenv(dotenv_path=env_path)
            else:
                logger.debug("No .env file found; relying on environment variables")
        except Exception as exc:  # pragma: no cover
            logger.warning(f"Failed to load .env: {exc}")

    # ---------- Public helpers ----------
    def get_env(
        self,
        name: str,
        default: Optional[_T] = None,
        cast: Optional[Callable[[str], _T]] = None,
    ) -> Optional[_T]:
        value = os.getenv(name)
        if value is None:
            return default
        if cast is None:
            return value  # type: ignore[return-value]
        try:
            return cast(value)
        except Exception:
            logger.warning(f"Failed to cast env var {name}; using default")
            return default

    # ---------- Settings loading ----------
    def _load_settings(self) -> None:
        # Artifacts
        self.OUTPUT_DIR: str = self.get_env("MIXLAB_OUTPUT_DIR", "output/runs")  # type: ignore[assignment]

        # Logging
        self.LOG_LEVEL: str = self.get_env("LOG_LEVEL", "INFO")  # type: ignore[assignment]
        self.LOG_DIR: str = self.get_env("LOG_DIR", "output/logs")  # type: ignore[assignment]
        self.LOG_FORMAT: str = (self.get_env("LOG_FORMAT", "text") or "text").lower()
        self.STRUCTURED_LOGGING_ENABLED: bool = bool(
            self.get_env("STRUCTURED_LOGGING_ENABLED", False, cast=_as_bool)
        ) or self.LOG_FORMAT == "json"

        # Simulation budgets (overridden per scenario, never from the environment)
        self.EVENT_BUDGET: int = 5_000_000
        self.SWEEP_BUDGET: int = 20_000_000
        self.ENUMERATION_BUDGET: int = 1_000_000
        self.PARTITION_ATOM_LIMIT: int = 20
        self.COEFFICIENT_MAP_LIMIT: int = 1 << 24
        self.TRIAL_BLOCK: int = 500
        self.WORKERS: int = 1

        # Acceptance thresholds
        self.KS_THRESHOLD: float = 0.06
        self.MIN_CLT_TRIALS: int = 100
        self.VARIANCE_RATIO_BOUND: float = 4.0
        self.VARIANCE_SPLIT_CONSTANT: float = 2.0
        self.MONTE_CARLO_RELATIVE_TOLERANCE: float = 0.05
        self.SIGMA_MARGIN: float = 3.0
        self.RATE_GRID_TOLERANCE: float = 0.05

    # ---------- Validation and status ----------
    def validate(self) -> bool:
        """Validate budget values; records the offending names."""
        invalid: list[str] = []
        for name in (
            "EVENT_BUDGET",
            "SWEEP_BUDGET",
            "ENUMERATION_BUDGET",
            "PARTITION_ATOM_LIMIT",
            "COEFFICIENT_MAP_LIMIT",
            "TRIAL_BLOCK",
            "WORKERS",
            "MIN_CLT_TRIALS",
        ):
            if int(getattr(self, name)) < 1:
                invalid.append(name)
        if self.LOG_FORMAT not in ("text", "json"):
            invalid.append("LOG_FORMAT")
        self._last_validation_invalid = invalid  # type: ignore[attr-defined]
        return len(invalid) == 0

    def get_configuration_status(self) -> Dict[str, Any]:
        """Return a structured view of configuration for logging and `main.py status`."""
        validation_ok = self.validate()
        invalid = getattr(self, "_last_validation_invalid", [])  # type: ignore[attr-defined]

        return {
            "validation": {
                "is_valid": validation_ok,
                "invalid": invalid,
            },
            "env": {
                "MIXLAB_OUTPUT_DIR": self.OUTPUT_DIR,
                "LOG_LEVEL": self.LOG_LEVEL,
                "LOG_DIR": self.LOG_DIR,
                "LOG_FORMAT": self.LOG_FORMAT,
                "STRUCTURED_LOGGING_ENABLED": self.STRUCTURED_LOGGING_ENABLED,
            },
            "budgets": {
                "EVENT_BUDGET": self.EVENT_BUDGET,
                "SWEEP_BUDGET": self.SWEEP_BUDGET,
                "ENUMERATION_BUDGET": self.ENUMERATION_BUDGET,
                "PARTITION_ATOM_LIMIT": self.PARTITION_ATOM_LIMIT,
                "COEFFICIENT_MAP_LIMIT": self.COEFFICIENT_MAP_LIMIT,
                "TRIAL_BLOCK": self.TRIAL_BLOCK,
                "WORKERS": self.WORKERS,
            },
            "thresholds": {
                "KS_THRESHOLD": self.KS_THRESHOLD,
                "MIN_CLT_TRIALS": self.MIN_CLT_TRIALS,
                "VARIANCE_RATIO_BOUND": self.VARIANCE_RATIO_BOUND,
                "VARIANCE_SPLIT_CONSTANT": self.VARIANCE_SPLIT_CONSTANT,
                "MONTE_CARLO_RELATIVE_TOLERANCE": self.MONTE_CARLO_RELATIVE_TOLERANCE,
                "SIGMA_MARGIN": self.SIGMA_MARGIN,
                "RATE_GRID_TOLERANCE": self.RATE_GRID_TOLERANCE,
            },
        }


# Singleton config instance
config = ConfigManager()
# numerical modules import it as settings
settings = config


def get_config() -> ConfigManager:
    return config
