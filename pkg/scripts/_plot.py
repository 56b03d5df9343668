"""Optional plotting shared by the experiment scripts (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path


def density_figure(g, trajectories, path: Path, title: str) -> bool:
    """Space-time density heat map with bottleneck paths; False when matplotlib is missing."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    fig, ax = plt.subplots(figsize=(8, 5))
    mesh = ax.pcolormesh(g.ts, g.xs, g.k.T, shading="nearest", cmap="viridis")
    for segs in trajectories:
        if segs:
            ax.plot([s.t0 for s in segs] + [segs[-1].t1], [s.x0 for s in segs] + [segs[-1].x1],
                    color="white", lw=1.2)
    ax.set_xlabel("t (s)")
    ax.set_ylabel("x (m)")
    ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="density (veh/m)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True
