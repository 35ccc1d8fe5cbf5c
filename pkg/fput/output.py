"""
CSV and SVG emitters for result rows
"""
import csv
import io
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Type, TypeVar

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from pydantic import BaseModel

from fput.errors import OutputExistsError
from fput.models import RunRecord

logger = logging.getLogger(__name__)

Row = TypeVar("Row", bound=BaseModel)

TIMING_COLUMNS = ("wall_time",)

MARKERS = {"thermal": "o"}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _prepare(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise OutputExistsError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, rows: Sequence[BaseModel], model: Type[BaseModel], force: bool = False,
              exclude: Sequence[str] = ()) -> Path:
    """One row per model, columns in field order, floats with 17 significant digits"""
    columns = [name for name in model.model_fields if name not in exclude]
    _prepare(path, force)
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                values = row.model_dump()
                writer.writerow([_format(values[name]) for name in columns])
    except OSError as e:
        raise OSError(f"Failed to write {path}: {e}") from e
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def read_csv(path: Path, model: Type[Row]) -> List[Row]:
    try:
        with open(path, newline="") as f:
            return [model.model_validate(row) for row in csv.DictReader(f)]
    except OSError as e:
        raise OSError(f"Failed to read {path}: {e}") from e


def render_ratio_svg(records: Sequence[RunRecord], title: str = "Non-resonant fraction r against βN") -> str:
    """Scatter of r against βN (log axis); one series per N, one curve per initial condition"""
    usable = [r for r in records if r.valid and math.isfinite(r.r) and r.betaN > 0]
    grouped: Dict[int, Dict[str, List[RunRecord]]] = {}
    for record in usable:
        grouped.setdefault(record.N, {}).setdefault(record.init, []).append(record)

    fig, ax = plt.subplots(figsize=(8, 5))
    try:
        for i, N in enumerate(sorted(grouped)):
            color = f"C{i}"
            for init, group in sorted(grouped[N].items()):
                group = sorted(group, key=lambda r: r.betaN)
                thermal = init == "thermal"
                ax.plot([r.betaN for r in group], [r.r for r in group],
                        marker=MARKERS.get(init, "s"), linestyle="-" if thermal else "--",
                        color=color, markerfacecolor=color if thermal else "white",
                        label=f"N={N} ({init})", gid=f"series-N{N}-{init}")
        ax.set_xscale("log")
        ax.set_xlabel("βN")
        ax.set_ylabel("r")
        ax.set_title(title)
        if grouped:
            ax.legend(fontsize="small")
        ax.grid(True, which="both", alpha=0.3)
        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", bbox_inches="tight")
    finally:
        plt.close(fig)
    return buffer.getvalue()



def write_svg(path: Path, records: Sequence[RunRecord], force: bool = False) -> Path:
    _prepare(path, force)
    try:
        path.write_text(render_ratio_svg(records))
    except OSError as e:
        raise OSError(f"Failed to write {path}: {e}") from e
    logger.info(f"Wrote figure to {path}")
    return path


def emit_outputs(records: Sequence[RunRecord], csv_path: Path, svg_path: Optional[Path] = None,
                 force: bool = False, timings: bool = False) -> List[Path]:
    """Write the sweep CSV and, optionally, the figure"""
    written = [write_csv(csv_path, records, RunRecord, force=force,
                         exclude=() if timings else TIMING_COLUMNS)]
    if svg_path is not None:
        written.append(write_svg(svg_path, records, force=force))
    return written
