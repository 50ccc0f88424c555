from __future__ import annotations

import logging
import os
from multiprocessing import Pool
from typing import Callable, Iterable, TypeVar

from more_itertools import chunked
from tqdm import tqdm

from bgw_bench.errors import ConfigError

ENV_MAX_WORKERS = "BGW_MAX_WORKERS"

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(requested: int | None = None) -> int:
    """Return the number of worker processes to use.

    Parameters
    ----------
    requested
        Explicitly requested number of workers. `None` means one worker per CPU.

    Returns
    -------
    n_workers
        Requested value capped by the `BGW_MAX_WORKERS` environment variable and by
        the CPU count.
    """
    cpu_count = os.cpu_count() or 1
    limit = cpu_count
    env_value = os.environ.get(ENV_MAX_WORKERS)
    if env_value:
        try:
            limit = min(limit, int(env_value))
        except ValueError:
            raise ConfigError(f"{ENV_MAX_WORKERS} must be an integer, got {env_value}.")

    n_workers = limit if requested is None else min(requested, limit)
    if n_workers < 1:
        raise ConfigError(f"Number of workers has to be positive, got {n_workers}.")
    return n_workers


def block_ranges(total: int, block_size: int) -> list[tuple[int, int]]:
    """Split `range(total)` into consecutive half-open blocks of fixed size."""
    return [(block[0], block[-1] + 1) for block in chunked(range(total), block_size)]


def map_blocks(
    func: Callable[[T], R],
    blocks: Iterable[T],
    n_workers: int = 1,
    desc: str | None = None,
    progress: bool = False,
) -> list[R]:
    """Apply `func` to every block and return the results in block order.

    The partition into blocks is fixed by the caller, so the results do not depend
    on the number of workers.

    Parameters
    ----------
    func
        Module level function, it has to be picklable for `n_workers > 1`.
    blocks
        Work items.
    n_workers
        Number of worker processes, 1 runs everything in the current process.
    desc
        Progress bar description.
    progress
        Show a progress bar.

    Returns
    -------
    results
    """
    blocks = list(blocks)
    items = tqdm(blocks, desc=desc, disable=not progress)
    if n_workers <= 1 or len(blocks) <= 1:
        return [func(block) for block in items]

    logger.debug("Running %d blocks on %d workers", len(blocks), n_workers)
    with Pool(n_workers) as p:
        return p.map(func, items)
