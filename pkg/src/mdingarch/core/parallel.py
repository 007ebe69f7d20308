"""Thread pool runner for independent seeded replicates."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, TypeVar

import numpy as np
import psutil

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Rough per-worker working set for a replicate on series of a few thousand points
WORKER_MEMORY_MB = 200


def replicate_generator(seed: int, index: int) -> np.random.Generator:
    """Stream for replicate `index`, derived only from (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def safe_worker_count(requested: int) -> int:
    """Cap the requested worker count by available memory."""
    available_mb = psutil.virtual_memory().available / (1024 * 1024)
    memory_cap = max(1, int(available_mb // WORKER_MEMORY_MB))
    workers = max(1, min(requested, memory_cap))
    if workers < requested:
        logger.info(f"Reducing workers from {requested} to {workers} due to memory pressure")
    return workers


def run_replicates(
    task: Callable[[int, np.random.Generator], T],
    n_tasks: int,
    seed: int,
    threads: int = 1,
    progress_every: Optional[int] = None,
) -> List[T]:
    """Run `task(i, rng_i)` for i in range(n_tasks) and return results by index.

    Each replicate draws from its own derived stream, so the result list does not
    depend on the thread count or on completion order.
    """
    if n_tasks <= 0:
        return []
    workers = safe_worker_count(min(threads, n_tasks))
    results: List[Optional[T]] = [None] * n_tasks

    if workers == 1:
        for i in range(n_tasks):
            results[i] = task(i, replicate_generator(seed, i))
            if progress_every and (i + 1) % progress_every == 0:
                logger.debug(f"Replicates done: {i + 1}/{n_tasks}")
        return results  # type: ignore[return-value]

    done = 0
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(task, i, replicate_generator(seed, i)): i for i in range(n_tasks)
        }
        for future in as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception:
                for pending in futures:
                    pending.cancel()
                raise
            done += 1
            if progress_every and done % progress_every == 0:
                logger.debug(f"Replicates done: {done}/{n_tasks}")
    return results  # type: ignore[return-value]
