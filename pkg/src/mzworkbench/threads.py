"""Worker-count plumbing for the embarrassingly parallel sampling paths.

Results are bit-identical for any worker count: every realization owns a
counter-based RNG stream keyed by (seed, realization index), and workers
only fill disjoint row ranges of a preallocated array.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import WorkbenchError

ENV_VAR = "MZ_WORKBENCH_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Effective worker count: the request capped by MZ_WORKBENCH_THREADS."""
    cap = None
    raw = os.environ.get(ENV_VAR)
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise WorkbenchError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise WorkbenchError(f"{ENV_VAR} must be >= 1, got {cap}")
    n = requested if requested is not None else (cap if cap is not None else 1)
    if n < 1:
        raise WorkbenchError(f"worker count must be >= 1, got {n}")
    if cap is not None:
        n = min(n, cap)
    return n


def run_chunked(fill, n_rows: int, workers: int | None = None) -> None:
    """Call ``fill(start, stop)`` over a partition of range(n_rows).

    ``fill`` must write only rows [start, stop) of its output and must not
    depend on the partition, which is what makes the result independent of
    the worker count.
    """
    n = worker_count(workers)
    if n <= 1 or n_rows <= 1:
        fill(0, n_rows)
        return
    n = min(n, n_rows)
    bounds = [round(i * n_rows / n) for i in range(n + 1)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [
            pool.submit(fill, bounds[i], bounds[i + 1])
            for i in range(n)
            if bounds[i] < bounds[i + 1]
        ]
        for fut in futures:
            fut.result()
