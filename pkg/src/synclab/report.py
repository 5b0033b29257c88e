"""Delimited output and companion figures.

Every report path writes a CSV and renders a matplotlib figure next to it
(same stem, .png), so a sweep or trace leaves both machine-readable rows
and a picture:

* sweep results   -> fail-rate and CFO-MSE curves versus SNR
* metric trace    -> |AC1|, |AC2|, ENE, XCR versus sample index
* energy template -> tap weights with their bit-plane split

CSV numbers use repr (shortest round-trip), so identical inputs produce
identical bytes; the sweep's runtime_s column is wall-clock and is the
one column excluded from that promise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .datapath import RX_BACKOFF, WordLengthConfig, run_datapath
from .harness import SWEEP_CSV_HEADER, SweepRow
from .metrics import metric_arrays
from .preamble import PhyParams, PreambleTemplate, default_template

TRACE_CSV_HEADER = ["n", "|AC1|", "|AC2|", "ENE", "XCR"]
TEMPLATE_CSV_HEADER = ["m", "a_m", "a0_m", "a1_m"]


def figure_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".png")


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            writer.writerow(row.csv_row())


def plot_sweep(rows: list[SweepRow], path: str | Path) -> Path:
    """Fail rate and CFO MSE versus SNR, one curve per configuration."""
    groups: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        key = (row.scenario, row.cfo, row.mode, row.fa, row.fx)
        groups.setdefault(key, []).append(row)

    fig, (ax_fail, ax_mse) = plt.subplots(1, 2, figsize=(11, 4.2))
    for key, cells in sorted(groups.items(), key=lambda kv: str(kv[0])):
        cells = sorted(cells, key=lambda r: r.snr_db)
        snrs = [c.snr_db for c in cells]
        label = f"{key[0]} cfo={key[1]:g} {key[2]}"
        if key[3] is not None:
            label += f" fa={key[3]} fx={key[4]}"
        ax_fail.plot(snrs, [c.stats.fail_rate for c in cells], marker="o", label=label)
        ax_mse.plot(snrs, [c.stats.cfo_mse for c in cells], marker="s", label=label)

    any_fail = any(row.stats.fail_rate > 0 for row in rows)
    any_mse = any(row.stats.cfo_mse > 0 for row in rows)
    for ax, title, positive in (
        (ax_fail, "timing fail rate", any_fail),
        (ax_mse, "CFO MSE", any_mse),
    ):
        ax.set_xlabel("SNR (dB)")
        if positive:
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        ax.set_title(title)
    ax_fail.set_ylabel("fail rate")
    ax_mse.set_ylabel("MSE (subcarrier spacings$^2$)")
    ax_fail.legend(fontsize=7)
    fig.tight_layout()
    out = figure_path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


@dataclass
class MetricTrace:
    """Per-sample metric magnitudes for plotting and CSV dump."""

    n: np.ndarray
    ac1_mag: np.ndarray
    ac2_mag: np.ndarray
    ene: np.ndarray
    xcr: np.ndarray
    mode: str


def build_trace(
    stream: np.ndarray,
    template: PreambleTemplate | None = None,
    params: PhyParams | None = None,
    mode: str = "float",
    word_cfg: WordLengthConfig | None = None,
) -> MetricTrace:
    """Evaluate the four metrics over a stream for inspection."""
    params = params or PhyParams()
    template = template or default_template(params)
    stream = np.asarray(stream, dtype=np.complex128)
    if mode == "fixed":
        word_cfg = word_cfg or WordLengthConfig()
        arrays = run_datapath(stream * RX_BACKOFF, template, params, word_cfg)
        mag_scale = word_cfg.metric_mag_fmt.scale
        return MetricTrace(
            n=np.arange(len(arrays)),
            ac1_mag=arrays.ac1_mag / mag_scale,
            ac2_mag=arrays.ac2_mag / mag_scale,
            ene=arrays.ene_values(),
            xcr=arrays.xcr_values(),
            mode=mode,
        )
    arrays = metric_arrays(stream, template, params)
    return MetricTrace(
        n=np.arange(len(arrays.ene)),
        ac1_mag=np.abs(arrays.ac1),
        ac2_mag=np.abs(arrays.ac2),
        ene=arrays.ene,
        xcr=arrays.xcr,
        mode=mode,
    )


def write_trace_csv(trace: MetricTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for i in range(len(trace.n)):
            writer.writerow(
                [
                    int(trace.n[i]),
                    repr(float(trace.ac1_mag[i])),
                    repr(float(trace.ac2_mag[i])),
                    repr(float(trace.ene[i])),
                    repr(float(trace.xcr[i])),
                ]
            )


def plot_trace(trace: MetricTrace, path: str | Path) -> Path:
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    ax_top.plot(trace.n, trace.ac1_mag, label="|AC1|", lw=0.9)
    ax_top.plot(trace.n, trace.ac2_mag, label="|AC2|", lw=0.9)
    ax_top.plot(trace.n, trace.ene, label="ENE", lw=0.9, color="k", alpha=0.6)
    ax_top.set_ylabel("autocorrelation / energy")
    ax_top.legend(fontsize=8)
    ax_top.grid(alpha=0.3)
    ax_bot.plot(trace.n, trace.xcr, label="XCR", lw=0.9, color="tab:red")
    ax_bot.set_xlabel("sample index")
    ax_bot.set_ylabel("XCR")
    ax_bot.legend(fontsize=8)
    ax_bot.grid(alpha=0.3)
    fig.suptitle(f"metric trace ({trace.mode} mode)")
    fig.tight_layout()
    out = figure_path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def write_template_csv(template: PreambleTemplate, path: str | Path) -> None:
    """Tap weights and bit-planes, one row per delay m (D+1 lines total)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TEMPLATE_CSV_HEADER)
        for m in range(template.depth):
            writer.writerow(
                [
                    m,
                    repr(float(template.taps[m])),
                    int(template.taps_int[m]),
                    int(template.taps_half[m]),
                ]
            )


def plot_template(template: PreambleTemplate, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 3.2))
    m = np.arange(template.depth)
    ax.stem(m, template.taps, basefmt=" ")
    ax.set_xlabel("delay m (samples)")
    ax.set_ylabel("weight a_m")
    ax.set_title(
        f"energy template: depth {template.depth}, "
        f"{template.nonzero_count} nonzero taps"
    )
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = figure_path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
