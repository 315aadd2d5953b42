"""Deterministic figures from zss JSON outputs.

Figures are pure functions of their input JSON: fixed figure sizes, the
bundled DejaVu fonts, no timestamps, and no computation beyond affine fits,
so the same input renders to byte-identical files.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import jsonschema
import matplotlib.pyplot as plt
import numpy as np

from . import schemas

# stable colors for up to four turning-point tracks
TRACK_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red")


class RenderError(ValueError):
    pass


@dataclass
class FigureJob:
    kind: str  # stokes | migrate | spectrum | gapscaling
    input_path: str
    out_path: str
    style: dict = field(default_factory=dict)


def load_validated(kind: str, path: str | Path):
    schema = schemas.BY_KIND.get(kind)
    if schema is None:
        raise RenderError(f"unknown figure kind {kind!r}; pick from {sorted(schemas.BY_KIND)}")
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    if kind == "gapscaling" and isinstance(payload, dict) and "gap_scaling" in payload:
        payload = payload["gap_scaling"]  # accept a whole verify report
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        raise RenderError(f"{path} does not match the {kind} schema: {exc.message}") from exc
    if kind in ("migrate",) and not payload:
        raise RenderError("empty input")
    if kind == "spectrum" and not payload["eigenvalues"]:
        raise RenderError("empty spectrum")
    return payload


def fit_slope(points: list[dict]) -> float:
    """Least-squares slope of log(gap) against 1/h; the gap-scaling law."""
    x = np.array([1.0 / p["h"] for p in points])
    y = np.array([math.log(p["gap"]) for p in points])
    xbar, ybar = x.mean(), y.mean()
    return float(((x - xbar) * (y - ybar)).sum() / ((x - xbar) ** 2).sum())


def render(job: FigureJob) -> dict:
    """Render one figure; returns an info dict (fitted slope for gapscaling)."""
    payload = load_validated(job.kind, job.input_path)
    fig = plt.figure(figsize=(6.4, 4.8), dpi=125)
    try:
        info = _RENDERERS[job.kind](fig, payload, job.style)
        fig.savefig(job.out_path, format=Path(job.out_path).suffix.lstrip(".") or "png")
    finally:
        plt.close(fig)
    return info


def _render_stokes(fig, graph, style) -> dict:
    ax = fig.add_subplot(111)
    field_blob = graph.get("field")
    if field_blob:
        # increasing Re z runs from blue toward red regions
        ax.pcolormesh(
            np.asarray(field_blob["x"]),
            np.asarray(field_blob["y"]),
            np.asarray(field_blob["re_z"]),
            cmap="coolwarm",
            shading="auto",
            rasterized=True,
        )
    cut_lines = {c["line"] for c in graph["cuts"]}
    for idx, line in enumerate(graph["lines"]):
        xs = [v[0] for v in line["vertices"]]
        ys = [v[1] for v in line["vertices"]]
        if idx in cut_lines:
            ax.plot(xs, ys, color="0.45", linewidth=2.2, linestyle="--", zorder=3)
        else:
            ax.plot(xs, ys, color="black", linewidth=1.1, zorder=2)
    px = [p[0] for p in graph["points"]]
    py = [p[1] for p in graph["points"]]
    ax.plot(px, py, "ko", markersize=5, zorder=4)
    mu = graph["mu"]
    ax.set_title(f"Stokes lines, mu = {mu[0]:g}{mu[1]:+g}i")
    ax.set_xlabel("Re x")
    ax.set_ylabel("Im x")
    ax.set_aspect("equal", adjustable="datalim")
    return {}


def _render_migrate(fig, frames, style) -> dict:
    ax = fig.add_subplot(111)
    n_tracks = len(frames[0]["points"])
    for j in range(n_tracks):
        xs = [f["points"][j][0] for f in frames]
        ys = [f["points"][j][1] for f in frames]
        color = TRACK_COLORS[j % len(TRACK_COLORS)]
        ax.plot(xs, ys, color=color, linewidth=1.4)
        ax.plot(xs[0], ys[0], "o", color="black", markersize=6, zorder=3)
        ax.plot(
            xs[-1],
            ys[-1],
            "o",
            markerfacecolor="none",
            markeredgecolor="black",
            markersize=8,
            zorder=3,
        )
    mu0 = frames[0]["mu"]
    mu1 = frames[-1]["mu"]
    ax.set_title(
        f"Turning-point migration, mu: {mu0[0]:g}{mu0[1]:+g}i -> {mu1[0]:g}{mu1[1]:+g}i"
    )
    ax.set_xlabel("Re x")
    ax.set_ylabel("Im x")
    ax.set_aspect("equal", adjustable="datalim")
    return {}


def _render_spectrum(fig, result, style) -> dict:
    ax = fig.add_subplot(111)
    re = [e["lambda"][0] for e in result["eigenvalues"]]
    im = [e["lambda"][1] for e in result["eigenvalues"]]
    box = result["box"]
    ax.plot([0, 0], [box[2], box[3]], color="0.6", linewidth=0.8, zorder=1)
    ax.add_patch(
        plt.Rectangle(
            (box[0], box[2]),
            box[1] - box[0],
            box[3] - box[2],
            fill=False,
            edgecolor="0.8",
            linewidth=0.8,
        )
    )
    ax.plot(re, im, "x", color="tab:blue", markersize=7, markeredgewidth=1.6, zorder=3)
    ax.set_title(f"Spectrum, h = {result['h']:g} ({result['count']} eigenvalues)")
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    return {}


def _render_gapscaling(fig, blob, style) -> dict:
    ax = fig.add_subplot(111)
    points = sorted(blob["points"], key=lambda p: 1.0 / p["h"])
    x = np.array([1.0 / p["h"] for p in points])
    y = np.array([math.log(p["gap"]) for p in points])
    slope = fit_slope(points)
    intercept = float(y.mean() - slope * x.mean())
    ax.plot(x, y, "o", color="tab:blue", markersize=6, zorder=3)
    xs = np.linspace(x.min(), x.max(), 64)
    ax.plot(xs, slope * xs + intercept, color="tab:red", linewidth=1.2, zorder=2)
    ax.annotate(
        f"slope = {slope:.12e}",
        xy=(0.04, 0.06),
        xycoords="axes fraction",
        fontsize=9,
    )
    ax.set_title("Tunneling gap scaling")
    ax.set_xlabel("1/h")
    ax.set_ylabel("log gap")
    return {"slope": slope}


_RENDERERS = {
    "stokes": _render_stokes,
    "migrate": _render_migrate,
    "spectrum": _render_spectrum,
    "gapscaling": _render_gapscaling,
}
