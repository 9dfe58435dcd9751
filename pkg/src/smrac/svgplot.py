"""Minimal stacked time-series plots written straight to SVG."""

from xml.sax.saxutils import escape

import numpy as np

WIDTH = 800
PANEL_H = 180
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 24, 36
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
MAX_POINTS = 2000


def _thin(t, y):
    """Cheap min/max-preserving reduction to about ``MAX_POINTS`` vertices."""
    if t.size <= MAX_POINTS:
        return t, y
    step = int(np.ceil(t.size / (MAX_POINTS / 2)))
    idx = []
    for a in range(0, t.size, step):
        seg = y[a:a + step]
        lo, hi = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        idx.extend(sorted({lo, hi}))
    idx = np.array(idx)
    return t[idx], y[idx]


def _fmt(v):
    return f"{v:.3g}"


class _Panel:
    def __init__(self, top, title, t_range, values, log):
        self.top = top
        self.title = title
        self.t0, self.t1 = t_range
        self.log = log
        finite = np.concatenate([v[np.isfinite(v)] for v in values]) if values else np.array([])
        if log:
            finite = finite[finite > 0]
        if finite.size == 0:
            lo, hi = (1e-3, 1.0) if log else (0.0, 1.0)
        else:
            lo, hi = float(finite.min()), float(finite.max())
        if log:
            lo, hi = np.log10(lo), np.log10(hi)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi = lo, hi
        self.x0 = MARGIN_L
        self.x1 = WIDTH - MARGIN_R
        self.y0 = top + MARGIN_T
        self.y1 = top + PANEL_H - MARGIN_B

    def px(self, t):
        span = (self.t1 - self.t0) or 1.0
        return self.x0 + (np.asarray(t) - self.t0) / span * (self.x1 - self.x0)

    def py(self, v):
        v = np.asarray(v, dtype=float)
        if self.log:
            v = np.log10(np.maximum(v, 10.0 ** self.lo))
        return self.y1 - (v - self.lo) / (self.hi - self.lo) * (self.y1 - self.y0)

    def frame(self):
        out = [
            f'<rect x="{self.x0}" y="{self.y0}" width="{self.x1 - self.x0}" height="{self.y1 - self.y0}" '
            f'fill="none" stroke="#444"/>',
            f'<text x="{self.x0}" y="{self.y0 - 6}" font-size="13">{escape(self.title)}</text>',
        ]
        for frac in (0.0, 0.5, 1.0):
            v = self.lo + frac * (self.hi - self.lo)
            label = _fmt(10.0 ** v) if self.log else _fmt(v)
            y = self.y1 - frac * (self.y1 - self.y0)
            out.append(f'<text x="{self.x0 - 6}" y="{y + 4:.1f}" font-size="10" text-anchor="end">{label}</text>')
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            tv = self.t0 + frac * (self.t1 - self.t0)
            x = self.px(tv)
            out.append(f'<text x="{x:.1f}" y="{self.y1 + 14}" font-size="10" text-anchor="middle">{_fmt(tv)}</text>')
        return out

    def markers(self, instants):
        return [
            f'<line x1="{self.px(tk):.1f}" y1="{self.y0}" x2="{self.px(tk):.1f}" y2="{self.y1}" '
            f'stroke="#999" stroke-dasharray="3,3"/>'
            for tk in instants if self.t0 <= tk <= self.t1
        ]

    def line(self, t, v, color, dash=None):
        t, v = _thin(np.asarray(t, float), np.asarray(v, float))
        ok = np.isfinite(v)
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(self.px(t[ok]), self.py(v[ok])))
        style = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{style} points="{pts}"/>'

    def legend(self, labels):
        out = []
        for k, (label, color, dash) in enumerate(labels):
            x = self.x1 - 110
            y = self.y0 + 12 + 13 * k
            style = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 18}" y2="{y - 4}" stroke="{color}"{style}/>')
            out.append(f'<text x="{x + 22}" y="{y}" font-size="10">{escape(label)}</text>')
        return out


def _document(panels_body, n_panels, title):
    height = n_panels * PANEL_H + 30
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">'
    )
    parts = [head, '<rect width="100%" height="100%" fill="white"/>']
    parts.append(f'<text x="{MARGIN_L}" y="18" font-size="14" font-weight="bold">{escape(title)}</text>')
    parts.extend(panels_body)
    parts.append(f'<text x="{WIDTH / 2}" y="{height - 4}" font-size="11" text-anchor="middle">t [s]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def trace_svg(trace, instants=(), title="closed-loop run"):
    """Three panels: ``|e|``, ``V`` and every ``|phi_tilde_i|`` (log scale), with switch markers."""
    t = trace.t
    t_range = (float(t[0]), float(t[-1]))
    specs = [
        ("|e|", [(trace.e_norm, "|e|", None)]),
        ("V", [(trace.V, "V", None)]),
        ("|phi_tilde_i|", [(trace.phi_err[:, i], f"i={i + 1}", None) for i in range(trace.M)]),
    ]
    body = []
    for k, (name, series) in enumerate(specs):
        panel = _Panel(30 + k * PANEL_H, name, t_range, [s[0] for s in series], log=True)
        body += panel.frame() + panel.markers(instants)
        labels = []
        for j, (v, label, dash) in enumerate(series):
            color = PALETTE[j % len(PALETTE)]
            body.append(panel.line(t, v, color, dash))
            labels.append((label, color, dash))
        if len(labels) > 1:
            body += panel.legend(labels)
    return _document(body, len(specs), title)


def comparison_svg(memory, baseline, instants=(), title="memory vs baseline"):
    """Per-subsystem ``|phi_tilde_i|`` of both runs (solid: memory, dashed: baseline)."""
    t = memory.t
    t_range = (float(t[0]), float(t[-1]))
    body = []
    specs = [("|e|", [(memory.e_norm, baseline.e_norm)])]
    specs += [(f"|phi_tilde_{i + 1}|", [(memory.phi_err[:, i], baseline.phi_err[:, i])]) for i in range(memory.M)]
    for k, (name, pairs) in enumerate(specs):
        mem, base = pairs[0]
        panel = _Panel(30 + k * PANEL_H, name, t_range, [mem, base], log=True)
        body += panel.frame() + panel.markers(instants)
        body.append(panel.line(memory.t, mem, PALETTE[0]))
        body.append(panel.line(baseline.t, base, PALETTE[1], dash="5,3"))
        body += panel.legend([("memory", PALETTE[0], None), ("baseline", PALETTE[1], "5,3")])
    return _document(body, len(specs), title)
