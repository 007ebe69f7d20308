#!/usr/bin/env python3
"""
Tests for configuration, logging setup, the exception hierarchy and the
replicate runner.
"""

import logging
import os
import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.core.config import (  # noqa: E402
    ENV_LOG_LEVEL,
    ENV_OUTPUT_PATH,
    ENV_SEED,
    ENV_THREADS,
    SEED_MAX,
    config,
    parse_seed,
    resolve_seed,
    resolve_threads,
)
from mdingarch.core.exceptions import (  # noqa: E402
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_USAGE,
    DataFormatError,
    DegenerateDataError,
    MdIngarchError,
    NumericalError,
    ParameterDomainError,
    SimulationDivergedError,
)
from mdingarch.core.logging_config import PerformanceLogger, setup_logging  # noqa: E402
from mdingarch.core.parallel import run_replicates, safe_worker_count  # noqa: E402


@pytest.fixture
def clean_env(monkeypatch):
    for name in (ENV_SEED, ENV_THREADS, ENV_OUTPUT_PATH, ENV_LOG_LEVEL):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_parse_seed():
    assert parse_seed("42") == 42
    assert parse_seed(" 0x10 ") == 16
    assert parse_seed(str(SEED_MAX)) == SEED_MAX
    for bad in ("-1", str(SEED_MAX + 1), "seed"):
        with pytest.raises(ParameterDomainError):
            parse_seed(bad)


def test_seed_resolution_order(clean_env):
    assert config.seed is None
    first = resolve_seed(None)
    assert 0 <= first <= SEED_MAX

    clean_env.setenv(ENV_SEED, "77")
    assert resolve_seed(None) == 77
    assert resolve_seed(5) == 5


def test_thread_settings(clean_env):
    assert config.threads >= 1
    clean_env.setenv(ENV_THREADS, "3")
    assert config.threads == 3
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    with pytest.raises(ParameterDomainError):
        resolve_threads(0)
    clean_env.setenv(ENV_THREADS, "many")
    with pytest.raises(ParameterDomainError):
        config.threads
    clean_env.setenv(ENV_THREADS, "0")
    with pytest.raises(ParameterDomainError):
        config.threads


def test_directories_and_log_level(clean_env, tmp_path):
    clean_env.setenv(ENV_OUTPUT_PATH, str(tmp_path / "out"))
    assert config.output_directory == (tmp_path / "out").resolve()
    assert config.log_level == logging.WARNING
    clean_env.setenv(ENV_LOG_LEVEL, "debug")
    assert config.log_level == logging.DEBUG
    clean_env.setenv(ENV_LOG_LEVEL, "loud")
    assert config.log_level == logging.WARNING

    info = config.get_config_info()
    assert info["output_directory"] == str((tmp_path / "out").resolve())
    assert info["environment_variables"][ENV_SEED] == "Not set"


def test_exit_codes():
    assert ParameterDomainError("x").exit_code == EXIT_USAGE
    assert DegenerateDataError("x").exit_code == EXIT_DATA
    assert DataFormatError("x").exit_code == EXIT_DATA
    assert NumericalError("x").exit_code == EXIT_NUMERICAL
    assert isinstance(SimulationDivergedError(3, float("inf")), MdIngarchError)
    assert isinstance(ParameterDomainError("x"), ValueError)


def test_error_messages_carry_location():
    assert str(DataFormatError("bad token", line=4, path="z.csv")) == "z.csv:4: bad token"
    assert str(DataFormatError("unreadable", path="z.csv")) == "z.csv: unreadable"
    assert str(DataFormatError("empty")) == "empty"
    assert "residual 1.000e-03" in str(NumericalError("no convergence", residual=1e-3))
    assert SimulationDivergedError(12, 1e13).t == 12


def test_setup_logging_writes_a_file(tmp_path):
    logger = setup_logging("mdingarch.test_config", log_dir=str(tmp_path), level=logging.INFO)
    logger.info("hello")
    for handler in logger.handlers:
        handler.flush()
    files = list(Path(tmp_path).glob("mdingarch.test_config_*.log"))
    assert len(files) == 1
    assert "hello" in files[0].read_text(encoding="utf-8")
    stream_handlers = [h for h in logger.handlers if type(h) is logging.StreamHandler]
    assert stream_handlers and stream_handlers[0].stream is sys.stderr
    for handler in logger.handlers:
        handler.close()


def test_setup_logging_console_only(tmp_path):
    logger = setup_logging("mdingarch.console_only", log_dir=str(tmp_path / "unused"), file=False)
    assert len(logger.handlers) == 1
    assert not (tmp_path / "unused").exists()


def test_performance_logger():
    perf = PerformanceLogger(logging.getLogger("mdingarch.test_perf"))
    perf.start_timer("work")
    assert perf.end_timer("work") >= 0.0
    assert perf.end_timer("never-started") == 0.0


def test_worker_count_is_capped():
    assert 1 <= safe_worker_count(4) <= 4
    assert safe_worker_count(0) == 1


def test_replicate_errors_propagate():
    def task(index, _rng):
        if index == 5:
            raise NumericalError("boom")
        return index

    with pytest.raises(NumericalError):
        run_replicates(task, 10, seed=0, threads=3)
    with pytest.raises(NumericalError):
        run_replicates(task, 10, seed=0, threads=1)
