"""Minimal SVG bar charts, written by hand so outputs stay diffable."""

from __future__ import annotations

from xml.sax.saxutils import escape


def bar_chart(values, labels, title="", xlabel="", ylabel="", width=480, height=320,
              fill="#3b6ea5") -> str:
    """Vertical bars for ``values`` (non-negative) with one label per bar."""
    values = [float(v) for v in values]
    if len(values) != len(labels):
        raise ValueError("need one label per bar")
    if any(v < 0 for v in values):
        raise ValueError("bar heights must be non-negative")
    left, right, top, bottom = 56, 16, 36, 48
    plot_w = width - left - right
    plot_h = height - top - bottom
    vmax = max(values, default=0.0) or 1.0
    n = max(len(values), 1)
    slot = plot_w / n
    bar_w = slot * 0.7
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    x0, y0 = left, top + plot_h
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{top}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for i in range(5):
        frac = i / 4
        y = y0 - frac * plot_h
        out.append(f'<line x1="{x0 - 4}" y1="{y:.1f}" x2="{x0}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.1f}" text-anchor="end">{frac * vmax:.2f}</text>')
    for i, (v, lab) in enumerate(zip(values, labels)):
        h = v / vmax * plot_h
        x = x0 + i * slot + (slot - bar_w) / 2
        out.append(
            f'<rect x="{x:.1f}" y="{y0 - h:.1f}" width="{bar_w:.1f}" height="{h:.1f}" fill="{fill}">'
            f'<title>{escape(str(lab))}: {v:.4f}</title></rect>'
        )
        out.append(f'<text x="{x + bar_w / 2:.1f}" y="{y0 + 16}" text-anchor="middle">{escape(str(lab))}</text>')
    if xlabel:
        out.append(f'<text x="{x0 + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">{escape(ylabel)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def diff_histogram_svg(report, title="Bin-rank difference density") -> str:
    density = report.density()
    keys = sorted(density)
    return bar_chart([density[k] for k in keys], [str(k) for k in keys], title=title,
                     xlabel="|forensic bin - calibration bin|", ylabel="fraction of links")
