import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from common.experiments import SCHEME_LABELS  # noqa: E402
from common.selection import StrategyKind  # noqa: E402
from common.subprocess_runner import open_file  # noqa: E402

SVG_HASH_SALT = "twrc-relay-selection"
SVG_METADATA = {"Date": None}
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"]
MARKERS = ["o", "s", "^", "D", "v", "P", "X"]

plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT


def _positive(x, y):
    keep = np.isfinite(y) & (y > 0)
    return x[keep], y[keep]


def plot_ber_curves(frame, title):
    """Simulated points, exact curves and dashed asymptotes on a log BER axis."""
    fig, ax = plt.subplots(figsize=(8, 6))
    series = frame[["scheme", "n_relays"]].drop_duplicates()
    for index, (scheme, n_relays) in enumerate(series.itertuples(index=False)):
        color = COLORS[index % len(COLORS)]
        marker = MARKERS[index % len(MARKERS)]
        points = frame[(frame["scheme"] == scheme) & (frame["n_relays"] == n_relays)]
        points = points.sort_values("snr_db")
        label = f"{SCHEME_LABELS[StrategyKind(scheme)]} (N={n_relays})"
        snr = points["snr_db"].to_numpy(dtype=float)

        x, y = _positive(snr, points["ber_sim"].to_numpy(dtype=float))
        if len(x):
            ax.semilogy(x, y, linestyle="none", marker=marker, color=color,
                        label=f"{label} simulation")
        x, y = _positive(snr, points["ber_exact"].to_numpy(dtype=float))
        if len(x):
            ax.semilogy(x, y, linestyle="-", color=color, label=f"{label} analysis")
        x, y = _positive(snr, points["ber_asymptotic"].to_numpy(dtype=float))
        if len(x):
            ax.semilogy(x, y, linestyle="--", linewidth=0.8, color=color,
                        label=f"{label} asymptotic")

    ax.set_title(title)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Average sum BER")
    ax.grid(True, which="both", linestyle=":", linewidth=0.5)
    ax.set_ylim(bottom=1e-8, top=1)
    if ax.lines:
        ax.legend(fontsize="small")
    return fig


def plot_gains(frame, title):
    fig, ax = plt.subplots(figsize=(8, 6))
    columns = [
        ("gain_s_rs_nc", "S-RS-NC"),
        ("gain_d_rs_nc", "D-RS-NC"),
        ("gain_rs_no_nc", "RS-No-NC"),
    ]
    for index, (column, label) in enumerate(columns):
        ax.semilogy(
            frame["n_relays"], frame[column], marker=MARKERS[index],
            color=COLORS[index], label=label,
        )
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle=":")
    ax.set_title(title)
    ax.set_xlabel("Number of relays N")
    ax.set_ylabel("BER relative to NC-No-RS")
    ax.grid(True, which="both", linestyle=":", linewidth=0.5)
    ax.legend()
    return fig


def save_svg(fig, file_path, open_after=False):
    fig.savefig(file_path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    if open_after:
        open_file(file_path)
    return file_path


def render_ber_svg(frame, file_path, title, open_after=False):
    return save_svg(plot_ber_curves(frame, title), file_path, open_after)


def render_gain_svg(frame, file_path, title, open_after=False):
    return save_svg(plot_gains(frame, title), file_path, open_after)
