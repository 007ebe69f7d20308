#!/usr/bin/env python3
"""
Logging configuration for the MD-INGARCH toolkit
Provides centralized logging setup with rotation and formatting
"""

import logging
import logging.handlers
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Optional

import psutil

DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(
    name: str,
    log_dir: str = "logs",
    level: int = logging.INFO,
    console: bool = True,
    file: bool = True,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 7,
    format_string: Optional[str] = None
):
    """
    Set up logging with both console and file handlers

    Console output goes to stderr; stdout carries report payloads.

    Args:
        name: Logger name (e.g., 'mdingarch', 'mdingarch.monte_carlo')
        log_dir: Directory for log files
        level: Logging level
        console: Enable console output
        file: Enable file output
        max_bytes: Max size per log file before rotation
        backup_count: Number of backup files to keep
        format_string: Custom format string

    Returns:
        Configured logger instance
    """
    if file:
        Path(log_dir).mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Clear existing handlers
    logger.handlers = []

    if format_string is None:
        format_string = DEFAULT_FORMAT

    formatter = logging.Formatter(format_string)

    if console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if file:
        timestamp = datetime.now().strftime('%Y%m%d')
        filename = f"{log_dir}/{name}_{timestamp}.log"

        file_handler = logging.handlers.RotatingFileHandler(
            filename,
            maxBytes=max_bytes,
            backupCount=backup_count
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def setup_cli_logging(level: int = logging.WARNING, log_dir: Optional[str] = None):
    """Set up logging for a CLI run; a file log is written only when log_dir is given"""
    return setup_logging(
        name='mdingarch',
        log_dir=log_dir or "logs",
        level=level,
        file=log_dir is not None,
        format_string='%(asctime)s - [%(levelname)s] - %(name)s - %(message)s'
    )


def setup_monte_carlo_logging(log_dir: str, level: int = logging.INFO):
    """File-only log for long Monte Carlo runs; console output stays with the CLI logger"""
    return setup_logging(
        name='mdingarch.monte_carlo',
        log_dir=log_dir,
        level=level,
        console=False,
        format_string='%(asctime)s - [%(levelname)s] - %(message)s'
    )


class PerformanceLogger:
    """Helper class for logging performance metrics"""

    def __init__(self, logger):
        self.logger = logger
        self.timers = {}

    def start_timer(self, operation: str):
        """Start timing an operation"""
        self.timers[operation] = time.perf_counter()
        self.logger.debug(f"Started: {operation}")

    def end_timer(self, operation: str, log_level=logging.INFO) -> float:
        """End timing and log the duration"""
        if operation in self.timers:
            duration = time.perf_counter() - self.timers.pop(operation)
            self.logger.log(log_level, f"Completed: {operation} ({duration:.2f}s)")
            return duration
        return 0.0

    def log_memory(self, message: str = "Memory usage"):
        """Log current memory usage"""
        process = psutil.Process()
        memory_mb = process.memory_info().rss / (1024 * 1024)
        self.logger.info(f"{message}: {memory_mb:.0f} MB")
