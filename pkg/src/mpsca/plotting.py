"""Figures for bench output: mean min-SNR and mean wall time against K."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# Stripping the software/date metadata keeps reruns byte-identical.
_PNG_META = {"Software": None}

MARKERS = {"spmp-sca": "o", "oracle": "s"}


def _series(agg, key):
    by_method = {}
    for a in agg:
        by_method.setdefault(a["method"], []).append((a["k"], a[key]))
    return {m: sorted(pts) for m, pts in by_method.items()}


def _figure(agg, key, ylabel, title):
    fig, ax = plt.subplots(figsize=(5.0, 3.6), dpi=100)
    for method, pts in _series(agg, key).items():
        ks, vals = zip(*pts)
        ax.plot(ks, vals, marker=MARKERS.get(method, "x"), label=method)
    ax.set_xlabel("active antennas K")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    fig.savefig(path, format="png", metadata=_PNG_META)
    plt.close(fig)
    return Path(path)


def plot_aggregate(agg, out_dir, timing=True):
    """Write snr_vs_k.png (and time_vs_k.png when timings are real); return the paths."""
    out_dir = Path(out_dir)
    paths = [save_figure(_figure(agg, "mean_snr_db", "mean min-SNR (dB)", "Max-min SNR vs K"),
                         out_dir / "snr_vs_k.png")]
    if timing:
        paths.append(save_figure(_figure(agg, "mean_time_ms", "mean wall time (ms)", "Solve time vs K"),
                                 out_dir / "time_vs_k.png"))
    return paths
