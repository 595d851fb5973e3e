"""Trip-log post-processing: plot-ready polyline export.

Reads a JSON-lines trip log, integrates it, and writes the footprint
vertices as delimited text plus a rendered figure next to it.  This is
the offline report path; live visualization belongs to the web panel.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .deadreckoning import PositionEstimate, footprints, integrate, read_trip_log

logger = logging.getLogger(__name__)


def export_footprints(trip_log_path, out_dir, plot: bool = True) -> PositionEstimate:
    """Write footprints.csv (vertex rows `x,y`, then a `total,net` summary
    line) and footprints.png for a trip log; returns the integrated
    estimate."""
    segments = read_trip_log(trip_log_path)
    estimate = integrate(segments)
    verts = footprints(estimate)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "footprints.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        for x, y in verts:
            fh.write(f"{x!r},{y!r}\n")
        fh.write(f"{estimate.total_distance_m!r},{estimate.net_displacement_m!r}\n")
    logger.info("wrote %s (%d vertices)", csv_path, len(verts))

    if plot:
        png_path = out / "footprints.png"
        _render(verts, estimate, png_path)
        logger.info("wrote %s", png_path)
    return estimate


def _render(verts: list[tuple[float, float]], estimate: PositionEstimate, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [v[0] for v in verts]
    ys = [v[1] for v in verts]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(xs, ys, "-o", color="tab:blue", markersize=3, linewidth=1.2)
    ax.plot(xs[0], ys[0], "s", color="tab:green", markersize=8, label="start")
    ax.plot(xs[-1], ys[-1], "x", color="tab:red", markersize=9, label="end")
    ax.set_xlabel("east (m)")
    ax.set_ylabel("north (m)")
    ax.set_title(
        f"footprints: total {estimate.total_distance_m:.3f} m, "
        f"net {estimate.net_displacement_m:.3f} m"
    )
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.4)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
