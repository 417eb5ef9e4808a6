"""Result directories: ``meta.json`` plus one CSV per acquisition id.

CSV columns are ``grid_index_1, ..., grid_index_k, shot, value``. Averaged
data has no shot axis and is written with ``shot = -1``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

META = "meta.json"
FIT = "fit.json"
TIMING = "timing.json"


def _filename(acquisition_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", str(acquisition_id)) + ".csv"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(path: Union[str, Path], data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2))
    return path


def read_json(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())


def write_acquisition(path: Path, array: np.ndarray, averaged: bool) -> None:
    array = np.asarray(array)
    grid = array.shape if averaged else array.shape[:-1]
    k = len(grid)
    header = ",".join([f"grid_index_{i + 1}" for i in range(k)] + ["shot", "value"])
    index = np.indices(array.shape).reshape(array.ndim, -1).T
    if averaged:
        index = np.column_stack([index, np.full(len(index), -1)])
    values = array.reshape(-1)
    value_fmt = "%d" if np.issubdtype(array.dtype, np.integer) else "%.17g"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, value in zip(index, values):
            fh.write(",".join(str(int(i)) for i in row) + "," + (value_fmt % value) + "\n")


def read_acquisition(path: Path, shape: Sequence[int], dtype: str = "float64") -> np.ndarray:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return table[:, -1].astype(dtype).reshape(tuple(shape))


def save_results(
    directory: Union[str, Path],
    data: dict,
    grids: Sequence[dict] = (),
    options: Optional[dict] = None,
    seed: Optional[int] = None,
    timing: Optional[dict] = None,
    fit: Optional[dict] = None,
    extra: Optional[dict] = None,
) -> Path:
    """Write one execution to ``directory``.

    ``grids`` describes the leading array axes, each as a mapping with
    ``name`` and ``values``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    averaged = bool(options and options.get("averaging") == "averaged")
    files, shapes, dtypes = {}, {}, {}
    for key, array in data.items():
        name = _filename(key)
        write_acquisition(directory / name, array, averaged)
        files[str(key)] = name
        shapes[str(key)] = list(np.shape(array))
        dtypes[str(key)] = np.asarray(array).dtype.name
    meta = {
        "options": options or {},
        "grids": list(grids),
        "seed": seed,
        "timing": timing or {},
        "acquisitions": files,
        "shapes": shapes,
        "dtypes": dtypes,
    }
    if extra:
        meta.update(extra)
    write_json(directory / META, meta)
    if fit is not None:
        write_json(directory / FIT, fit)
    if timing is not None:
        write_json(directory / TIMING, timing)
    return directory


def load_results(directory: Union[str, Path]) -> tuple[dict, dict]:
    """Return ``(meta, data)`` for a directory written by ``save_results``."""
    directory = Path(directory)
    meta = read_json(directory / META)
    dtypes = meta.get("dtypes", {})
    data = {
        key: read_acquisition(directory / name, meta["shapes"][key], dtypes.get(key, "float64"))
        for key, name in meta["acquisitions"].items()
    }
    return meta, data
