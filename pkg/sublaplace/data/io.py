""" Delimited text ingestion, seeded train/test splitting and standardization fit on the training partition """

import json
import logging
import pathlib
import numpy as np
import pandas as pd
from pandas.errors import EmptyDataError, ParserError

from .dataset import Dataset, Standardizer, Task


class IngestionError(ValueError):
    "Delimited text file could not be turned into a numeric dataset"


def _parse_cell(cell) -> float:
    """Correctly rounded float of one text cell, NaN when it holds no number"""
    try:
        return float(cell)
    except (TypeError, ValueError):
        return np.nan


def load_csv(
    path: str | pathlib.Path,
    target_column: str | int,
    delimiter: str | None = ",",
    header: bool = True,
    task: Task = Task.REGRESSION,
) -> Dataset:
    """Read a delimited text file into a Dataset

    Args:
        path (str | pathlib.Path): File to read; never modified
        target_column (str | int): Column name (with header) or zero-based position of the target
        delimiter (str | None, optional): Field delimiter, None for any whitespace. Defaults to ",".
        header (bool, optional): Whether the first line holds column names. Defaults to True.
        task (Task, optional): Task type of the target. Defaults to Task.REGRESSION.

    Raises:
        IngestionError: Missing file, empty file, unknown target column or non-numeric cells

    Returns:
        Dataset: Features are every column except the target, in file order
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise IngestionError(f"no such file: {path}")
    sep = r"\s+" if delimiter is None else delimiter
    try:
        frame = pd.read_csv(path, sep=sep, header=0 if header else None, dtype=str, skipinitialspace=True)
    except EmptyDataError:
        raise IngestionError(f"{path} is empty")
    except ParserError as exc:
        raise IngestionError(f"{path} could not be parsed: {exc}")
    if frame.shape[0] == 0:
        raise IngestionError(f"{path} has no data rows")

    columns = list(frame.columns)
    if isinstance(target_column, int) and not (header and target_column in columns):
        if not 0 <= target_column < len(columns):
            raise IngestionError(f"target column position {target_column} out of range for {len(columns)} columns")
        target_name = columns[target_column]
    elif target_column in columns:
        target_name = target_column
    else:
        raise IngestionError(f"target column {target_column!r} not found in {path}; columns are {columns}")

    numeric = frame.apply(lambda col: col.str.strip().map(_parse_cell))
    bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        first_line = 2 if header else 1
        bad_rows = sorted({int(i) + first_line for i in np.flatnonzero(bad.any(axis=1))})
        bad_cols = [columns[j] for j in np.flatnonzero(bad.any(axis=0))]
        raise IngestionError(f"{path}: non-numeric cells on lines {bad_rows[:20]} in columns {bad_cols}")

    y = numeric[target_name].to_numpy(dtype=np.float64)
    X = numeric.drop(columns=[target_name]).to_numpy(dtype=np.float64)
    if task == Task.BINARY and not np.all(np.isin(y, (0.0, 1.0))):
        raise IngestionError(f"{path}: binary target column {target_name!r} holds values other than 0 and 1")
    logging.info(f"loaded {path} with n={X.shape[0]}, d={X.shape[1]}")
    return Dataset(X, y, task, metadata={"source": str(path), "target_column": str(target_name)})


def split_standardize(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split followed by standardization fit on the training partition only"""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(ds.n)
    n_test = int(round(test_fraction * ds.n))
    n_test = min(max(n_test, 1), ds.n - 1)
    test_idx, train_idx = np.sort(order[:n_test]), np.sort(order[n_test:])

    standardizer = Standardizer.fit(
        ds.X[train_idx], ds.y[train_idx], standardize_target=ds.task == Task.REGRESSION
    )
    for column in standardizer.clamped_columns:
        logging.warning(f"feature column {column} has zero standard deviation on the training partition, std clamped to 1")

    metadata = dict(ds.metadata, split_seed=seed, test_fraction=test_fraction)
    X_train, y_train = standardizer.transform(ds.X[train_idx], ds.y[train_idx])
    X_test, y_test = standardizer.transform(ds.X[test_idx], ds.y[test_idx])
    train = Dataset(X_train, y_train, ds.task, standardizer, dict(metadata, partition="train", indices=train_idx.tolist()))
    test = Dataset(X_test, y_test, ds.task, standardizer, dict(metadata, partition="test", indices=test_idx.tolist()))
    return train, test


def save_dataset(ds: Dataset, path: str | pathlib.Path, seed: int | None = None) -> pathlib.Path:
    """Write a dataset as comma separated text plus a sidecar metadata file"""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [f"x{j}" for j in range(ds.d)] + ["y"]
    frame = pd.DataFrame(np.column_stack([ds.X, ds.y]), columns=columns)
    frame.to_csv(path, index=False, float_format="%.17g")
    sidecar = {
        "task": ds.task.name,
        "seed": seed,
        "n": ds.n,
        "d": ds.d,
        "standardizer": ds.standardizer.serialize() if ds.standardizer else None,
    }
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    with open(meta_path, "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
    logging.info(f"dataset written to {path} with metadata {meta_path}")
    return meta_path
