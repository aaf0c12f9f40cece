"""Minimal SVG line charts (mean line with a +-std band) for sweep results."""
from __future__ import annotations

from xml.sax.saxutils import escape

from acperf.harness import SweepResult

WIDTH, HEIGHT, PAD = 640, 400, 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def sweep_svg(result: SweepResult, series=None, title: str | None = None) -> str:
    """Render the chosen series (default: the ``_abs`` or all series) against the axis value."""
    if series is None:
        series = [s for s in result.series if s.endswith("_abs") and "_minus_" not in s] or list(result.series)
    xname = result.x_name
    # several r1 values would overlap; keep the first one
    pts = result.points
    if result.axis == "estimator-grid":
        r1 = pts[0].coords["r1"]
        pts = [p for p in pts if p.coords["r1"] == r1]
    xs = [float(p.coords[xname]) for p in pts]
    lows = [p.stats[s][0] - p.stats[s][1] for p in pts for s in series]
    highs = [p.stats[s][0] + p.stats[s][1] for p in pts for s in series]
    sx = _scale(min(xs), max(xs), PAD, WIDTH - PAD / 2)
    sy = _scale(min(lows), max(highs), HEIGHT - PAD, PAD / 2)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD / 2}" y2="{HEIGHT - PAD}" stroke="black"/>',
           f'<line x1="{PAD}" y1="{PAD / 2}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>']
    for v, anchor in ((min(xs), "start"), (max(xs), "end")):
        out.append(f'<text x="{sx(v):.2f}" y="{HEIGHT - PAD + 16}" font-size="11" '
                   f'text-anchor="{anchor}">{v:g}</text>')
    for v in (min(lows), max(highs)):
        out.append(f'<text x="{PAD - 4}" y="{sy(v):.2f}" font-size="11" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" text-anchor="middle">{escape(xname)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="16" font-size="13" text-anchor="middle">{escape(title)}</text>')

    for k, s in enumerate(series):
        color = COLORS[k % len(COLORS)]
        upper = [(sx(x), sy(p.stats[s][0] + p.stats[s][1])) for x, p in zip(xs, pts)]
        lower = [(sx(x), sy(p.stats[s][0] - p.stats[s][1])) for x, p in zip(xs, pts)]
        band = " ".join(f"{a:.2f},{b:.2f}" for a, b in upper + lower[::-1])
        line = " ".join(f"{sx(x):.2f},{sy(p.stats[s][0]):.2f}" for x, p in zip(xs, pts))
        out.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{WIDTH - PAD}" y="{PAD / 2 + 14 * (k + 1)}" font-size="11" '
                   f'fill="{color}" text-anchor="end">{escape(s)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
