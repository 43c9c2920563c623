"""Standalone SVG line charts of smoothed learning curves.

Output is plain text built from fixed-precision numbers, so identical
input gives identical bytes.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .curves import CURVE_HEADER, moving_average

WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=170, top=30, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
N_TICKS = 5


class PlotInputError(ValueError):
    pass


def load_conditions(paths) -> dict:
    """Map condition label to ``(episodes, pooled mean reward)``.

    A file with a ``condition`` column contributes one condition per value;
    otherwise the file stem is the label, prefixed by its directory when
    stems collide. Seeds are averaged per episode.
    """
    paths = [Path(p) for p in paths]
    stems = [p.stem for p in paths]
    conditions: dict[str, dict[int, list[float]]] = {}
    for path in paths:
        # fall back to parent/stem when two files share a name
        default_label = path.stem if stems.count(path.stem) == 1 else f"{path.parent.name}/{path.stem}"
        try:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                fields = reader.fieldnames or ()
                missing = {"episode", "cum_reward"} - set(fields)
                if missing:
                    raise PlotInputError(f"{path}: missing columns {sorted(missing)}; expected {','.join(CURVE_HEADER)}")
                rows = list(reader)
        except OSError as exc:
            raise PlotInputError(f"cannot read {path}: {exc.strerror or exc}") from exc
        if not rows:
            raise PlotInputError(f"{path}: curve file has no records")
        for row in rows:
            label = row.get("condition") or default_label
            try:
                ep, r = int(row["episode"]), float(row["cum_reward"])
            except (TypeError, ValueError) as exc:
                raise PlotInputError(f"{path}: bad row {row}") from exc
            conditions.setdefault(label, defaultdict(list))[ep].append(r)
    out = {}
    for label, by_episode in conditions.items():
        eps = np.array(sorted(by_episode))
        out[label] = (eps, np.array([np.mean(by_episode[e]) for e in eps]))
    return out


def _ticks(lo: float, hi: float, n: int = N_TICKS):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(conditions: dict, window: int = 100, title: str = "") -> str:
    if not conditions:
        raise PlotInputError("nothing to plot")
    smoothed = {k: (eps, moving_average(r, window)) for k, (eps, r) in conditions.items()}
    xs = np.concatenate([e for e, _ in smoothed.values()])
    ys = np.concatenate([y for _, y in smoothed.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return MARGIN["top"] + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2:.2f}" y="18" text-anchor="middle">{escape(title)}</text>')
    x0, y0 = MARGIN["left"], MARGIN["top"] + ph
    parts.append(f'<rect x="{x0}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{_fmt(sx(t))}" y1="{y0}" x2="{_fmt(sx(t))}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(sx(t))}" y="{y0 + 18}" text-anchor="middle">{t:.0f}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{x0 - 5}" y1="{_fmt(sy(t))}" x2="{x0}" y2="{_fmt(sy(t))}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end">{t:.1f}</text>')
    parts.append(f'<text x="{x0 + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">episode</text>')
    parts.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.2f})">cumulative reward ({window}-episode mean)</text>')
    for i, (label, (eps, y)) in enumerate(smoothed.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(eps, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 15 + 20 * i
        lx = WIDTH - MARGIN["right"] + 15
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly + 4}" class="legend">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_emit(paths, output, window: int = 100, title: str = "") -> Path:
    if not paths:
        raise PlotInputError("no curve files given")
    svg = render_svg(load_conditions(paths), window, title)
    output = Path(output)
    output.write_text(svg)
    return output
