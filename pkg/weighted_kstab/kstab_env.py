"""Engine configuration.

All numerical settings live in one dataclass built from command-line flags. Nothing is read
from the environment, so a run is reproducible from its arguments alone.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional


class OutputFormat(str, Enum):
    """Supported report renderings."""

    JSON = "json"
    CSV = "csv"
    TEXT = "text"

    @classmethod
    def values(cls) -> list[str]:
        """Get all valid format values."""
        return [fmt.value for fmt in cls]


class LogFormat(str, Enum):
    """Formatter names declared in log.yaml."""

    DEFAULT = "default"
    JSON = "json"

    @classmethod
    def values(cls) -> list[str]:
        """Get all valid log format values."""
        return [fmt.value for fmt in cls]


@dataclass
class EngineConfig:
    """Numerical settings shared by the integration, stability and oracle modules.

    Attributes (defaults):
        seed: seed for randomized suites (0)
        workers: process count for per-simplex and per-slab work; 1 runs sequentially (1)
        quadrature_order: Grundmann-Moeller parameter s, exact to degree 2s+1 (6)
        quadrature_tolerance: relative tolerance of numeric integration (1e-12)
        quadrature_floor: absolute tolerance floor of numeric integration (1e-14)
        max_refinements: uniform bisection levels before NoConvergence (12)
        richardson_tolerance: relative Cauchy tolerance of F1 extrapolation (1e-3)
        soliton_tolerance: residual accepted by soliton_solve (1e-10)
        soliton_bracket: default bisection bracket for c (-5, 5)
        guard_factor: numeric verdicts need residuals above this multiple of the error (10)
        audit_grid: subdivisions of the interior grid used by the positivity audit (4)
        log_level: root log level (WARNING)
        log_format: "default" or "json" (default)
    """

    seed: int = 0
    workers: int = 1
    quadrature_order: int = 6
    quadrature_tolerance: float = 1e-12
    quadrature_floor: float = 1e-14
    max_refinements: int = 12
    richardson_tolerance: float = 1e-3
    soliton_tolerance: float = 1e-10
    soliton_bracket: tuple[float, float] = (-5.0, 5.0)
    guard_factor: float = 10.0
    audit_grid: int = 4
    log_level: str = "WARNING"
    log_format: str = LogFormat.DEFAULT.value

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        """Reject settings no computation can run with.

        Raises:
            ValueError: on a non-positive count or tolerance, an empty bracket or an unknown
                log format.
        """
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.quadrature_order < 0:
            raise ValueError(f"quadrature order must be >= 0, got {self.quadrature_order}")
        if self.max_refinements < 1:
            raise ValueError(f"max refinements must be >= 1, got {self.max_refinements}")
        for name in ("quadrature_tolerance", "richardson_tolerance", "soliton_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        low, high = self.soliton_bracket
        if not low < high:
            raise ValueError(f"invalid bracket ({low}, {high})")
        if self.log_format not in LogFormat.values():
            valid_options = ", ".join(f'"{t}"' for t in LogFormat.values())
            raise ValueError(f"Invalid log format '{self.log_format}'. Valid options: {valid_options}")


@dataclass
class RunConfig:
    """One command-line invocation: what to run, on which files, rendered how."""

    subcommand: str
    inputs: dict[str, Path] = field(default_factory=dict)
    output_format: OutputFormat = OutputFormat.TEXT
    seed: int = 0
    engine: EngineConfig = field(default_factory=EngineConfig)


# Global instance placeholder for the singleton pattern
_CONFIG_INSTANCE: Optional[EngineConfig] = None


def get_config() -> EngineConfig:
    """
    Gets the singleton instance of EngineConfig.
    Instantiates it with defaults on the first call.
    """
    global _CONFIG_INSTANCE
    if _CONFIG_INSTANCE is None:
        _CONFIG_INSTANCE = EngineConfig()
    return _CONFIG_INSTANCE


def set_config(config: Optional[EngineConfig]) -> None:
    """Install the configuration used by later get_config() calls (None resets to defaults)."""
    global _CONFIG_INSTANCE
    _CONFIG_INSTANCE = config
