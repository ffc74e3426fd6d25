"""CSV emission and figure rendering for experiment runs and cost reports."""

from __future__ import annotations

import os

import numpy as np

from .complexity import cost
from .experiments import ExperimentSpec

#: Default moving-average window for plotted curves (display only; CSV and
#: any acceptance computation always use the raw series).
DEFAULT_SMOOTHING = 201


def _fmt(v: float) -> str:
    # repr round-trips doubles exactly and is locale-independent
    return repr(float(v))


def write_csv(path, series_by_alg: dict) -> None:
    """NMSE series to CSV: header `n,<alg>_nmse_db,...`, one row per sample,
    1-based sample index, trailing newline, UTF-8."""
    algs = list(series_by_alg)
    if not algs:
        raise ValueError("no series to write")
    lengths = {len(np.asarray(s)) for s in series_by_alg.values()}
    if len(lengths) != 1:
        raise ValueError(f"series lengths differ: {sorted(lengths)}")
    n = lengths.pop()
    cols = [np.asarray(series_by_alg[a], float) for a in algs]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n," + ",".join(f"{a}_nmse_db" for a in algs) + "\n")
        for i in range(n):
            fh.write(str(i + 1) + "," + ",".join(_fmt(c[i]) for c in cols) + "\n")


def read_csv(path) -> dict:
    """Parse back a write_csv file: {column_name: float array} (n omitted)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out = {}
    for j, name in enumerate(header[1:], start=1):
        out[name] = np.array([float(r[j]) for r in rows])
    return out


def smooth(series, window: int) -> np.ndarray:
    """Centered moving average, shrinking the window near the edges."""
    x = np.asarray(series, float)
    if window <= 1:
        return x.copy()
    finite = np.isfinite(x)
    vals = np.where(finite, x, 0.0)
    kernel = np.ones(window)
    num = np.convolve(vals, kernel, mode="same")
    den = np.convolve(finite.astype(float), kernel, mode="same")
    with np.errstate(invalid="ignore"):
        return num / den


def render_nmse_figure(path, series_by_alg: dict, title: str = "",
                       smoothing: int = DEFAULT_SMOOTHING) -> None:
    """NMSE-vs-sample line plot (PNG/PDF by extension) next to the CSV."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for alg, series in series_by_alg.items():
        ax.plot(np.arange(1, len(series) + 1), smooth(series, smoothing),
                label=alg, linewidth=1.2)
    ax.set_xlabel("sample n")
    ax.set_ylabel("NMSE [dB]")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_REPORT_COLUMNS = (
    ("tensor_only", "Tensor-only"),
    ("cascade", "TLMS/LMST"),
    ("itensor_only", "intpol Tensor-only"),
    ("icascade", "intpol TLMS/LMST"),
)


def complexity_cells(spec: ExperimentSpec) -> dict:
    """Total (mult, add, div) per algorithm column for one experiment,
    evaluated from its parameter blocks."""
    hammer = spec.structure == "hammerstein"
    t = spec.alg_params["tensor"]
    it = spec.alg_params["itensor"]
    cas = spec.alg_params["tlms" if hammer else "lmst"]
    icas = spec.alg_params["itlms" if hammer else "ilmst"]
    return {
        "tensor_only": cost("tensor_only", R=t.rank, M=t.modes, I=t.grid_size).totals,
        "cascade": cost("tlms" if hammer else "lmst", P=cas.fir_len,
                        R=cas.rank, M=cas.modes, I=cas.grid_size).totals,
        "itensor_only": cost("itensor_only", R=it.rank, M=it.modes,
                             I=it.grid_size).totals,
        "icascade": cost("itlms" if hammer else "ilmst", P=icas.fir_len,
                         R=icas.rank, M=icas.modes, I=icas.grid_size).totals,
    }


def complexity_table(specs) -> str:
    """Text table of per-experiment operation totals (one block per
    experiment, rows mult/add/div, four algorithm columns)."""
    lines = []
    header = f"{'Experiment':>10} {'Op':>5} " + " ".join(
        f"{label:>20}" for _, label in _REPORT_COLUMNS
    )
    lines.append(header)
    lines.append("-" * len(header))
    for spec in specs:
        cells = complexity_cells(spec)
        for i, op in enumerate(("Mult.", "Add.", "Div.")):
            tag = str(spec.id) if i == 0 else ""
            row = f"{tag:>10} {op:>5} " + " ".join(
                f"{cells[key][i]:>20}" for key, _ in _REPORT_COLUMNS
            )
            lines.append(row)
    return "\n".join(lines) + "\n"


def write_complexity_csv(path, specs) -> None:
    """CSV mirror of complexity_table."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("experiment,operation," +
                 ",".join(key for key, _ in _REPORT_COLUMNS) + "\n")
        for spec in specs:
            cells = complexity_cells(spec)
            for i, op in enumerate(("mult", "add", "div")):
                fh.write(f"{spec.id},{op}," +
                         ",".join(str(cells[key][i]) for key, _ in _REPORT_COLUMNS)
                         + "\n")


def figure_path_for(csv_path) -> str:
    stem, _ = os.path.splitext(str(csv_path))
    return stem + ".png"
