"""Figures for the CLI: a residual chart for ``verify`` and a mesh preview for ``mesh``."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mesh import Mesh, VerificationReport  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def plot_report(report: VerificationReport, path: str | Path) -> None:
    """log10 of each residual over its tolerance; bars above zero failed."""
    names = [r.name for r in report.residuals]
    ratios = []
    for r in report.residuals:
        if r.tol > 0:
            ratios.append(np.log10(max(r.value, 1e-300) / r.tol) if np.isfinite(r.value) else 3.0)
        else:
            ratios.append(3.0 if r.value > 0 else -3.0)
    ratios = np.clip(ratios, -17, 3)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 0.25 * len(names) + 1.2))
        colors = ["#b2182b" if x > 0 else "#2166ac" for x in ratios]
        ax.barh(range(len(names)), ratios, color=colors, height=0.7)
        ax.axvline(0.0, color="k", lw=0.6)
        ax.set_yticks(range(len(names)))
        ax.set_yticklabels(names, fontsize=7)
        ax.invert_yaxis()
        ax.set_xlabel("log10(residual / tolerance)")
        ax.set_title(f"{report.spec_name}: {'pass' if report.passed else 'FAIL'}")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_mesh(mesh: Mesh, path: str | Path, title: str = "") -> None:
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(5.0, 5.0))
        ax = fig.add_subplot(projection="3d")
        if len(mesh.faces):
            V = mesh.vertices
            # clip the far parts of the planar ends so the core stays visible
            centre = np.median(V, axis=0)
            radius = np.quantile(np.linalg.norm(V - centre, axis=1), 0.6)
            keep = np.all(np.linalg.norm(V[mesh.faces] - centre, axis=2) <= 2 * radius, axis=1)
            F = mesh.faces[keep]
            if len(F):
                ax.plot_trisurf(V[:, 0], V[:, 1], V[:, 2], triangles=F, cmap="viridis",
                                linewidth=0.0, antialiased=True, alpha=0.9)
            for axis, set_lim in zip(range(3), (ax.set_xlim, ax.set_ylim, ax.set_zlim)):
                set_lim(centre[axis] - 2 * radius, centre[axis] + 2 * radius)
        ax.set_title(title or f"{len(mesh.vertices)} vertices, {len(mesh.faces)} faces")
        ax.set_axis_off()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
