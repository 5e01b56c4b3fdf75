"""Matplotlib renderings saved next to the delimited outputs.

Every report-producing command also renders its key arrays to PNG so a
run can be eyeballed without loading the CSV/JSON elsewhere.  Figures
are a convenience surface only -- the JSON and CSV files carry the data
contract -- so nothing here is asserted on, and all rendering goes
through the Agg backend with fixed geometry.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .mesh import sphere_radius  # noqa: E402

_DPI = 110


def _finish(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_curve_figure(trajectory, path, lam=None):
    """Closed planar curve: the xy trace plus curvature along arclength."""
    arr = np.asarray(trajectory, dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.2))
    ax1.plot(arr[:, 1], arr[:, 2], lw=1.2)
    ax1.plot(arr[0, 1], arr[0, 2], "o", ms=5)
    ax1.set_aspect("equal")
    ax1.set_xlabel("x")
    ax1.set_ylabel("y")
    title = "planar solution curve"
    if lam is not None:
        title += f" (lambda = {lam:g})"
    ax1.set_title(title)
    ax2.plot(arr[:, 0], arr[:, 4], lw=1.0)
    ax2.set_xlabel("arclength s")
    ax2.set_ylabel("curvature")
    ax2.set_title("signed curvature")
    return _finish(fig, path)


def save_profile_figure(trajectory, path, lam=None):
    """Revolution profile in the (rho, z) half-plane, mirrored for shape."""
    arr = np.asarray(trajectory, dtype=float)
    rho, z = arr[:, 1], arr[:, 2]
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(rho, z, lw=1.3)
    ax.plot(-rho, z, lw=1.3, ls="--", alpha=0.6)
    ax.axvline(0.0, color="0.6", lw=0.7)
    ax.set_aspect("equal")
    ax.set_xlabel("rho")
    ax.set_ylabel("z")
    title = "revolution profile"
    if lam is not None:
        title += f" (lambda = {lam:g})"
    ax.set_title(title)
    return _finish(fig, path)


def save_spectrum_figure(eigenvalues, path):
    """Stability eigenvalues against their index, with the zero line."""
    vals = np.asarray(eigenvalues, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.plot(np.arange(vals.size), vals, "o-", ms=5, lw=0.8)
    ax.set_xlabel("eigenvalue index")
    ax.set_ylabel("eigenvalue")
    ax.set_title("stability operator spectrum (top end)")
    return _finish(fig, path)


def save_residual_figure(levels, maxima, path):
    """Residual ladder: max |shape-equation residual| per refinement level.

    The dashed reference decays by 4 per level through the first
    measured point (the expected second-order rate).
    """
    levels = np.asarray(levels, dtype=float)
    maxima = np.asarray(maxima, dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.plot(levels, maxima, "o-", label="measured")
    if maxima.size and maxima[0] > 0:
        ref = maxima[0] * 4.0 ** (levels[0] - levels)
        ax.plot(levels, ref, "--", color="0.5", label="factor 4 / level")
    if np.any(maxima > 0):
        ax.set_yscale("log")
    ax.set_xlabel("refinement level")
    ax.set_ylabel("max |residual|")
    ax.set_title("shape-equation residual ladder")
    ax.legend()
    ax.set_xticks(levels)
    return _finish(fig, path)


def save_branch_figure(branch, path):
    """Graph branch: height statistics against the parameter.

    The dashed line is the closed-form round-solution height over the
    radius-2 base sphere.
    """
    lams = np.array([s.lam for s in branch.samples])
    mean = np.array([s.u.mean() for s in branch.samples])
    umin = np.array([s.u.min() for s in branch.samples])
    umax = np.array([s.u.max() for s in branch.samples])
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.fill_between(lams, umin, umax, alpha=0.25, label="min..max")
    ax.plot(lams, mean, "o-", ms=4, label="mean height")
    if lams.size:
        dense = np.linspace(lams.min(), lams.max(), 200)
        ax.plot(dense, [sphere_radius(l) - 2.0 for l in dense], "--",
                color="0.4", label="round solution")
    ax.set_xlabel("lambda")
    ax.set_ylabel("graph height u")
    ax.set_title("continued branch over the radius-2 sphere")
    ax.legend()
    return _finish(fig, path)


def save_monotonicity_figure(report, path):
    """Weighted-density profile against ball radius, log-log.

    Takes the report produced by the monotonicity check; the dashed
    series is the exponentially compensated profile whose nondecrease
    the check asserts.
    """
    params = report.parameters
    s = np.asarray(params["s_grid"], dtype=float)
    g = np.asarray(params["profile"], dtype=float)
    k = float(params["K"])
    grown = np.exp(k * (s - s[-1])) * g
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    pos = g > 0
    ax.loglog(s[pos], g[pos], "o-", ms=4, label="density profile")
    pos = grown > 0
    ax.loglog(s[pos], grown[pos], "s--", ms=3, color="0.45",
              label=f"compensated, K = {k:.3g}")
    ax.set_xlabel("ball radius s")
    ax.set_ylabel("weighted density")
    ax.set_title("almost-monotone density profile")
    ax.legend()
    return _finish(fig, path)


def save_estimates_figure(reports, path):
    """Margin bar chart for a battery of estimate reports."""
    names = [r.name for r in reports]
    margins = np.array([r.margin for r in reports], dtype=float)
    colors = ["#2a7f3f" if r.passed else "#b03030" for r in reports]
    fig, ax = plt.subplots(figsize=(6.5, 0.6 * max(4, len(names))))
    ypos = np.arange(len(names))
    ax.barh(ypos, margins, color=colors)
    ax.axvline(0.0, color="0.3", lw=0.8)
    ax.set_yticks(ypos, names)
    ax.set_xlabel("margin (bound minus measured)")
    ax.set_title("estimate battery margins")
    ax.invert_yaxis()
    return _finish(fig, path)
