#!/usr/bin/env python3
"""
Configuration module for the MD-INGARCH toolkit
Centralizes seeds, worker counts, output paths and log settings
"""

import logging
import os
from pathlib import Path
from typing import Optional

import psutil
from dotenv import load_dotenv
from platformdirs import user_data_dir, user_log_dir

from mdingarch.core.exceptions import ParameterDomainError

PACKAGE_ROOT = Path(__file__).resolve().parents[1]

# Environment variable names
ENV_SEED = "MDINGARCH_SEED"
ENV_THREADS = "MDINGARCH_THREADS"
ENV_OUTPUT_PATH = "MDINGARCH_OUTPUT_PATH"
ENV_LOGS_PATH = "MDINGARCH_LOGS_PATH"
ENV_LOG_LEVEL = "MDINGARCH_LOG_LEVEL"

APP_NAME = "mdingarch"
APP_AUTHOR = "mdingarch"

USER_DATA_DIR = Path(user_data_dir(APP_NAME, APP_AUTHOR))
USER_LOG_DIR = Path(user_log_dir(APP_NAME, APP_AUTHOR))

MAX_DEFAULT_THREADS = 8
SEED_MAX = 2**64 - 1

load_dotenv()


def _default_threads() -> int:
    cores = psutil.cpu_count(logical=False) or os.cpu_count() or 1
    return max(1, min(cores, MAX_DEFAULT_THREADS))


def parse_seed(value: str) -> int:
    """Parse a seed string into a nonnegative 64-bit integer."""
    try:
        seed = int(value.strip(), 0)
    except ValueError as exc:
        raise ParameterDomainError(f"seed must be an integer, got {value!r}") from exc
    if not 0 <= seed <= SEED_MAX:
        raise ParameterDomainError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


class Config:
    """Configuration class with environment variable support"""

    @property
    def seed(self) -> Optional[int]:
        """Seed fallback used when no --seed flag is given"""
        raw = os.getenv(ENV_SEED)
        if raw is None or raw.strip() == "":
            return None
        return parse_seed(raw)

    @property
    def threads(self) -> int:
        """Worker cap for bootstrap and Monte Carlo loops"""
        raw = os.getenv(ENV_THREADS)
        if not raw:
            return _default_threads()
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ParameterDomainError(f"{ENV_THREADS} must be an integer, got {raw!r}") from exc
        if threads < 1:
            raise ParameterDomainError(f"{ENV_THREADS} must be positive, got {threads}")
        return threads

    @property
    def output_directory(self) -> Path:
        """Directory for reproduce summaries and default report output"""
        path = os.getenv(ENV_OUTPUT_PATH)
        target = Path(path).expanduser() if path else USER_DATA_DIR / "reports"
        return target.resolve()

    @property
    def logs_directory(self) -> Path:
        """Get the logs directory path"""
        path = os.getenv(ENV_LOGS_PATH)
        target = Path(path).expanduser() if path else USER_LOG_DIR
        return target.resolve()

    @property
    def log_level(self) -> int:
        """Logging level name from the environment, WARNING by default"""
        name = os.getenv(ENV_LOG_LEVEL, "WARNING").upper()
        level = logging.getLevelName(name)
        return level if isinstance(level, int) else logging.WARNING

    def ensure_directories(self):
        """Create directories if they don't exist"""
        for directory in [self.output_directory, self.logs_directory]:
            directory.mkdir(parents=True, exist_ok=True)

    def get_config_info(self) -> dict:
        """Get configuration information for debugging"""
        return {
            "package_root": str(PACKAGE_ROOT),
            "user_data_dir": str(USER_DATA_DIR),
            "user_log_dir": str(USER_LOG_DIR),
            "output_directory": str(self.output_directory),
            "logs_directory": str(self.logs_directory),
            "threads": self.threads,
            "seed": self.seed,
            "log_level": logging.getLevelName(self.log_level),
            "environment_variables": {
                name: os.getenv(name, "Not set")
                for name in (ENV_SEED, ENV_THREADS, ENV_OUTPUT_PATH, ENV_LOGS_PATH, ENV_LOG_LEVEL)
            },
        }


# Global configuration instance
config = Config()


def resolve_seed(flag_value: Optional[int]) -> int:
    """Pick the --seed flag, then MDINGARCH_SEED, then a fresh entropy seed."""
    if flag_value is not None:
        return flag_value
    env_seed = config.seed
    if env_seed is not None:
        return env_seed
    import numpy as np

    return int(np.random.SeedSequence().entropy % (SEED_MAX + 1))


def resolve_threads(flag_value: Optional[int]) -> int:
    if flag_value is not None:
        if flag_value < 1:
            raise ParameterDomainError(f"--threads must be positive, got {flag_value}")
        return flag_value
    return config.threads


if __name__ == "__main__":
    import json

    print("Current Configuration:")
    print(json.dumps(config.get_config_info(), indent=2))
