"""Configuration, run driver, experiment studies and the command line."""

from .config import DEFAULTS, ConfigError, RunConfig, config_hash, load_config
from .runner import RunResult, SimulationError, run_simulation
from .snapshots import Snapshot, read_manifest, read_snapshot, write_snapshot

__all__ = ["DEFAULTS", "ConfigError", "RunConfig", "config_hash", "load_config", "RunResult",
           "SimulationError", "run_simulation", "Snapshot", "read_manifest", "read_snapshot", "write_snapshot"]
