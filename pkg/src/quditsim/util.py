"""Shared plumbing: seeded RNG construction, worker pool, report writers."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np


def rng_from(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox); same seed gives the same stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def child_seed(seed: int, *path: int) -> int:
    """Derive an independent sub-seed from a master seed and an index path.

    Used so parallel/iterated tasks (restarts, rounds, trials) draw from
    non-overlapping streams while staying reproducible from one config seed.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Order-preserving map over independent tasks.

    ``workers > 1`` runs on a thread pool (the heavy kernels are BLAS calls,
    which release the GIL); the default is sequential, which keeps traces and
    profiles simple. Results are collected in task order either way.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def write_json(path, obj) -> Path:
    """Write deterministic JSON (sorted keys, trailing newline)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))
    return path


def json_ready(obj):
    """Recursively convert numpy scalars/arrays so json.dump accepts them."""
    if isinstance(obj, Mapping):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [json_ready(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [json_ready(x) for x in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj
