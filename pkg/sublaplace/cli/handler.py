""" Script to fan experiment work out over worker threads and write result shards """

import asyncio
import json
import logging
import pathlib
import numpy as np
import pandas as pd
from collections.abc import Callable, Hashable
from typing import Any

from .config import ExperimentConfig
from ..metrics.wasserstein import RESULT_COLUMNS


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value)}")


class ExperimentHandler:
    def __init__(self, cfg: ExperimentConfig, output_dir: str | pathlib.Path, jobs: int = 1) -> None:
        if jobs < 1:
            raise ValueError(f"jobs must be positive, got {jobs}")
        self.cfg = cfg
        self.output_dir = pathlib.Path(output_dir)
        self.semaphore_size = jobs
        self.output_dir.mkdir(parents=True, exist_ok=True)

    @property
    def prefix(self) -> str:
        return self.cfg.experiment.label

    async def __run_task(self, key: Hashable, fn: Callable[..., Any], args: tuple, sem: asyncio.BoundedSemaphore) -> Any:
        async with sem:
            logging.info(f"{self.prefix} task {key} started")
            result = await asyncio.to_thread(fn, *args)
            logging.info(f"{self.prefix} task {key} finished")
            return result

    async def __gather_tasks(self, tasks: dict[Hashable, tuple[Callable[..., Any], tuple]]) -> list[Any]:
        sem = asyncio.BoundedSemaphore(self.semaphore_size)
        coroutines = [self.__run_task(key, fn, args, sem) for key, (fn, args) in tasks.items()]
        return await asyncio.gather(*coroutines)

    def run(self, tasks: dict[Hashable, tuple[Callable[..., Any], tuple]]) -> dict[Hashable, Any]:
        """Run every task on a worker thread, at most `jobs` at a time; results come back keyed in insertion order"""
        logging.info(f"starting {len(tasks)} {self.prefix} tasks with {self.semaphore_size} workers")
        results = asyncio.run(self.__gather_tasks(tasks))
        return dict(zip(tasks, results))

    def run_seeds(self, fn: Callable[[int], Any]) -> dict[int, Any]:
        return self.run({seed: (fn, (seed,)) for seed in self.cfg.seeds})

    def header(self, seed: int | None = None) -> str:
        suffix = "" if seed is None else f" seed={seed}"
        return f"# config_hash={self.cfg.hash}{suffix}\n"

    def write_json_shard(self, name: str, payload: dict, seed: int | None = None) -> pathlib.Path:
        path = self.output_dir / f"{name}.json"
        body = {"config_hash": self.cfg.hash, "experiment": self.prefix, "seed": seed, **payload}
        with open(path, "w") as f:
            json.dump(body, f, indent=2, sort_keys=True, default=_json_default)
        logging.info(f"shard written to {path}")
        return path

    def write_csv(self, name: str, frame: pd.DataFrame, seed: int | None = None) -> pathlib.Path:
        path = self.output_dir / f"{name}.csv"
        with open(path, "w") as f:
            f.write(self.header(seed))
            frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
        logging.info(f"table written to {path}")
        return path


def aggregate_rows(frames: list[pd.DataFrame]) -> pd.DataFrame:
    """Cross-seed mean and standard error of every (method, k, metric) value, in first-appearance order"""
    rows = pd.concat(frames, ignore_index=True)
    out = []
    for (method, k, metric), group in rows.groupby(["method", "k", "metric"], sort=False):
        values = group["value"].to_numpy(dtype=np.float64)
        stderr = float(values.std(ddof=1) / np.sqrt(values.shape[0])) if values.shape[0] > 1 else 0.0
        out.append([method, k, "all", metric, float(values.mean()), stderr])
    return pd.DataFrame(out, columns=RESULT_COLUMNS)
