import io
import json
import os
import shlex
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .._version import __version__
from ..constants import CSV_FLOAT_FORMAT
from ..exceptions import InvalidMeasureError
from ..measures import Atomic, Empirical, GridDensity, Measure
from .encode_params import dumps_params


HEADER_PREFIX = "# booleanentropy"


def make_header(argv: List[str], seed: Optional[int] = None) -> Dict[str, Any]:
    return {"tool": "booleanentropy", "version": __version__, "cmd": shlex.join(argv), "seed": seed}


def header_line(header: Dict[str, Any]) -> str:
    return f"{HEADER_PREFIX} {header['version']} cmd={header['cmd']} seed={header['seed']}"


def write_atomic(path: Union[str, Path], text: str) -> None:
    """Writes ``text`` to a temporary file next to ``path`` and moves it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_csv(df: pd.DataFrame, path: Union[str, Path], header: Optional[Dict[str, Any]] = None) -> None:
    buffer = io.StringIO()
    if header is not None:
        buffer.write(header_line(header) + "\n")
    df.to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    write_atomic(path, buffer.getvalue())


def write_json(obj: Dict[str, Any], path: Union[str, Path], header: Optional[Dict[str, Any]] = None) -> None:
    if header is not None:
        obj = {"header": header, **obj}
    write_atomic(path, dumps_params(obj, indent=2) + "\n")


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def _uniform_step(x: np.ndarray) -> float:
    steps = np.diff(x)
    dx = float(steps.mean())
    if dx <= 0 or np.abs(steps - dx).max() > 1e-9 * max(1.0, abs(dx)):
        raise InvalidMeasureError("Density tables need a uniform, increasing x column")
    return dx


def load_measure(path: Union[str, Path]) -> Measure:
    """Reads a measure written by the command line tool.

    ``.json`` files hold the measure object (extra keys such as ``header`` are ignored). ``.csv`` files are
    recognized by their columns: ``x,density`` (grid density), ``x,weight`` (atoms) or ``index,value`` (sample).
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        with path.open("r", encoding="utf-8") as fh:
            obj = json.load(fh)
        try:
            return Measure.from_dict(obj)
        except InvalidMeasureError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidMeasureError(f"{path} is not a measure file: {e}") from e
    df = read_csv(path)
    columns = list(df.columns)
    if columns[:2] == ["x", "density"]:
        x = df["x"].to_numpy(dtype=np.float64)
        return GridDensity(float(x[0]), _uniform_step(x), df["density"].to_numpy(dtype=np.float64))
    elif columns[:2] == ["x", "weight"]:
        return Atomic(df["x"].to_numpy(dtype=np.float64), df["weight"].to_numpy(dtype=np.float64))
    elif columns[:2] == ["index", "value"]:
        return Empirical(df["value"].to_numpy(dtype=np.float64))
    raise InvalidMeasureError(f"Unrecognized columns {columns} in {path}; expected x,density, x,weight or "
                              f"index,value")


def measure_table(m: Measure) -> pd.DataFrame:
    """CSV layout of a measure, readable by :func:`load_measure`."""
    if isinstance(m, GridDensity):
        return pd.DataFrame({"x": m.x, "density": m.values})
    elif isinstance(m, Empirical):
        return pd.DataFrame({"index": np.arange(m.count), "value": m.points})
    x, w = m.nodes()
    return pd.DataFrame({"x": x, "weight": w})


def write_measure(m: Measure, path: Union[str, Path], header: Optional[Dict[str, Any]] = None,
                  extra: Optional[Dict[str, Any]] = None) -> None:
    if Path(path).suffix.lower() == ".csv":
        write_csv(measure_table(m), path, header)
    else:
        write_json({**m.to_dict(), **(extra or {})}, path, header)
