"""Figure rendering for the report path (headless matplotlib).

Two figure kinds, chosen by the input file: a decay chart from a rates
CSV, and a component-density chart from an estimate JSON.  Output PNGs
are written atomically and carry fixed metadata so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_METADATA = {"Software": "hermix"}


def _atomic_savefig(fig, path):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=120, metadata=_METADATA)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def _render_rates(path, out):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty rates CSV")
    m = [int(r["m"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for column, marker in (("beta", "o"), ("l2_total", "s"), ("l2_comp", "^"),
                           ("l1_total", "v"), ("l1_comp", "d")):
        vals = [float(r[column]) for r in rows]
        ax1.plot(m, [math.log2(v) for v in vals], marker=marker, label=column)
    ax1.set_xlabel("m = 1/delta")
    ax1.set_ylabel("log2 value")
    ax1.set_title("decay of the hard pair")
    ax1.legend(fontsize=8)
    ax1.grid(True, alpha=0.3)

    cp = [float(r["c_plus"]) for r in rows]
    be = [float(r["balance_error"]) for r in rows]
    ax2.plot(m, [math.log2(v) for v in cp], "o-", label="log2 c_plus")
    ax2.plot(m, [math.log2(v) for v in be], "s-", label="log2 balance_error")
    ax2.set_xlabel("m = 1/delta")
    ax2.set_title("coefficient growth / balance")
    ax2.legend(fontsize=8)
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    _atomic_savefig(fig, out)


def _render_estimate(path, out):
    with open(path) as fh:
        payload = json.load(fh)
    grid = payload["pdf_grid"]
    f1 = np.asarray(grid["f1"], dtype=float)
    f2 = np.asarray(grid["f2"], dtype=float)
    x = float(grid["x0"]) + float(grid["dx"]) * np.arange(f1.size)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(x, f1, label="component 1")
    ax.plot(x, f2, label="component 2")
    for c in payload["centers"]:
        ax.axvline(float(c), color="gray", linestyle=":", alpha=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(f"estimated components (ell={payload['ell']})")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _atomic_savefig(fig, out)


def render(input_path, out_path):
    """Render the figure matching the input kind; returns written paths."""
    lower = input_path.lower()
    if lower.endswith(".csv"):
        _render_rates(input_path, out_path)
    elif lower.endswith(".json"):
        _render_estimate(input_path, out_path)
    else:
        raise ValueError(f"{input_path}: expected a rates .csv or estimate .json")
    return [out_path]
