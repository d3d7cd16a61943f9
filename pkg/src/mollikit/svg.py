"""Bare-bones SVG output: polylines and grayscale heatmaps.

Plots are derived from the same arrays that go to CSV and never feed back
into them.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

W, H = 640, 400
PAD = 50
COLORS = ["#1f3a93", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#566573"]


def _fmt(v):
    return f"{v:.4g}"


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return np.full_like(np.asarray(v, float), 0.5 * (a + b))
    return a + (np.asarray(v, float) - lo) * (b - a) / (hi - lo)


def _frame(title, xlabel, ylabel, xlim, ylim):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
           'fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{PAD - 15}" text-anchor="middle" font-size="13">{title}</text>',
           f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{xlabel}</text>',
           f'<text x="14" y="{H / 2}" text-anchor="middle" '
           f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>']
    for v, anchor, x, y in [(xlim[0], "start", PAD, H - PAD + 14),
                            (xlim[1], "end", W - PAD, H - PAD + 14),
                            (ylim[0], "end", PAD - 4, H - PAD),
                            (ylim[1], "end", PAD - 4, PAD + 10)]:
        out.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}">{_fmt(v)}</text>')
    return out


def line_plot(path, series, title="", xlabel="", ylabel=""):
    """``series`` is a list of (x, y, label) triples; non-finite points are skipped."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    xlim = (xs[ok].min(), xs[ok].max()) if ok.any() else (0.0, 1.0)
    ylim = (ys[ok].min(), ys[ok].max()) if ok.any() else (0.0, 1.0)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    for i, (x, y, label) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        px = _scale(x[keep], *xlim, PAD, W - PAD)
        py = _scale(y[keep], *ylim, H - PAD, PAD)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        if label:
            out.append(f'<text x="{W - PAD + 4}" y="{PAD + 14 * (i + 1)}" fill="{color}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def heatmap(path, Z, xlim=(0, 1), ylim=(0, 1), title="", xlabel="", ylabel=""):
    """Grayscale image of Z (rows run along y); light is high."""
    Z = np.asarray(Z, float)
    ny, nx = Z.shape
    finite = Z[np.isfinite(Z)]
    lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    cw = (W - 2 * PAD) / nx
    ch = (H - 2 * PAD) / ny
    shade = _scale(np.where(np.isfinite(Z), Z, lo), lo, hi, 0, 255).round().astype(int)
    for j in range(ny):
        y = H - PAD - (j + 1) * ch
        for i in range(nx):
            g = shade[j, i]
            out.append(f'<rect x="{PAD + i * cw:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{ch + 0.05:.2f}" fill="rgb({g},{g},{g})"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
