"""Minimal deterministic SVG figures (histogram, bars, scatter).

Figures are decorative companions to the CSV files that carry the same data;
hand-rolled markup keeps them byte-identical across runs, which the run
manifest checksums rely on.
"""

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 50


def _fmt(x):
    return f"{x:.2f}"


def _header(title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]


def _axes(parts, xlabel, ylabel):
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    parts.append(
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2})">{ylabel}</text>'
    )


def _scale(vmin, vmax):
    if vmax <= vmin:
        vmax = vmin + 1.0
    return vmin, vmax


def _color(frac):
    # blue (low) -> red (high)
    r = int(round(255 * frac))
    b = int(round(255 * (1.0 - frac)))
    return f"rgb({r},60,{b})"


def svg_histogram(path, bin_edges, counts, title, xlabel="value", ylabel="count"):
    parts = _header(title)
    _axes(parts, xlabel, ylabel)
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    lo, hi = _scale(float(bin_edges[0]), float(bin_edges[-1]))
    cmax = max(max(counts), 1)
    for i, c in enumerate(counts):
        bx0 = x0 + (bin_edges[i] - lo) / (hi - lo) * (x1 - x0)
        bx1 = x0 + (bin_edges[i + 1] - lo) / (hi - lo) * (x1 - x0)
        h = c / cmax * (y0 - y1)
        parts.append(
            f'<rect x="{_fmt(bx0)}" y="{_fmt(y0 - h)}" width="{_fmt(bx1 - bx0)}" '
            f'height="{_fmt(h)}" fill="steelblue" stroke="white" stroke-width="0.5"/>'
        )
    parts.append(
        f'<text x="{x0 - 6}" y="{y1 + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{cmax}</text>'
    )
    parts.append(
        f'<text x="{x0}" y="{y0 + 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="11">{_fmt(lo)}</text>'
    )
    parts.append(
        f'<text x="{x1}" y="{y0 + 16}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="11">{_fmt(hi)}</text>'
    )
    parts.append("</svg>")
    _write(path, parts)


def svg_bars(path, labels, values, errors, title, ylabel="RMSE"):
    parts = _header(title)
    _axes(parts, "", ylabel)
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    vmax = max(v + e for v, e in zip(values, errors)) if values else 1.0
    vmax = vmax * 1.05 or 1.0
    n = len(values)
    slot = (x1 - x0) / max(n, 1)
    for i, (label, v, e) in enumerate(zip(labels, values, errors)):
        bx = x0 + i * slot + slot * 0.15
        bw = slot * 0.7
        h = v / vmax * (y0 - y1)
        parts.append(
            f'<rect x="{_fmt(bx)}" y="{_fmt(y0 - h)}" width="{_fmt(bw)}" '
            f'height="{_fmt(h)}" fill="darkseagreen" stroke="black" stroke-width="0.5"/>'
        )
        if e > 0:
            cx = bx + bw / 2
            e_px = e / vmax * (y0 - y1)
            parts.append(
                f'<line x1="{_fmt(cx)}" y1="{_fmt(y0 - h - e_px)}" x2="{_fmt(cx)}" '
                f'y2="{_fmt(y0 - h + e_px)}" stroke="black"/>'
            )
        parts.append(
            f'<text x="{_fmt(bx + bw / 2)}" y="{y0 + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{label}</text>'
        )
        parts.append(
            f'<text x="{_fmt(bx + bw / 2)}" y="{_fmt(y0 - h - 6)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{v:.2f}</text>'
        )
    parts.append("</svg>")
    _write(path, parts)


def svg_scatter(path, xs, ys, colors, title, xlabel, ylabel):
    """Scatter with per-point color fractions in [0, 1] (blue low, red high)."""
    parts = _header(title)
    _axes(parts, xlabel, ylabel)
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    xlo, xhi = _scale(min(xs), max(xs))
    ylo, yhi = _scale(min(ys), max(ys))
    for x, y, c in zip(xs, ys, colors):
        px = x0 + (x - xlo) / (xhi - xlo) * (x1 - x0)
        py = y0 - (y - ylo) / (yhi - ylo) * (y0 - y1)
        parts.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4" fill="{_color(c)}" '
            f'fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
