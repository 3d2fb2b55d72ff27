"""Minimal hand-rolled SVG rendering of the space-time graph.

Best-effort visual aid: obstacles per future, optional chosen corridors,
the plan's shared prefix with per-future suffixes, and the executed trace.
"""

from __future__ import annotations

import math

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _nice_step(span: float) -> float:
    raw = span / 8.0
    mag = 10.0 ** math.floor(math.log10(max(raw, 1e-12)))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def st_graph_svg(scenario, plan=None, trace=None, corridors=None,
                 width: int = 720, height: int = 480) -> str:
    """Render the scenario (and optionally a plan / a trace) as SVG text."""
    futures = scenario.joint_futures()
    dt = scenario.dt
    T = scenario.horizon_steps
    t_end = (T - 1) * dt

    s_view = 1.0
    for f in futures:
        for ob in f.obstacles:
            s_view = max(s_view, ob.s_out)
    if plan is not None:
        for i in range(len(plan.suffixes)):
            s_view = max(s_view, float(plan.full_trajectory(i)[:, 0].max()))
    if trace is not None:
        s_view = max(s_view, max(r.s for r in trace.records))
    s_view = min(scenario.limits.s_max, 1.15 * s_view)

    ml, mr, mt, mb = 52.0, 14.0, 14.0, 40.0

    def X(t):
        return ml + (t / t_end) * (width - ml - mr)

    def Y(s):
        return height - mb - (s / s_view) * (height - mt - mb)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']

    ts = _nice_step(t_end)
    t = 0.0
    while t <= t_end + 1e-9:
        x = X(t)
        out.append(f'<line x1="{x:.1f}" y1="{Y(0):.1f}" x2="{x:.1f}" '
                   f'y2="{Y(s_view):.1f}" stroke="#eeeeee"/>')
        out.append(f'<text x="{x:.1f}" y="{height - mb + 16:.1f}" '
                   f'font-size="11" text-anchor="middle">{t:g}</text>')
        t += ts
    ss = _nice_step(s_view)
    s = 0.0
    while s <= s_view + 1e-9:
        y = Y(s)
        out.append(f'<line x1="{X(0):.1f}" y1="{y:.1f}" x2="{X(t_end):.1f}" '
                   f'y2="{y:.1f}" stroke="#eeeeee"/>')
        out.append(f'<text x="{ml - 6:.1f}" y="{y + 4:.1f}" font-size="11" '
                   f'text-anchor="end">{s:g}</text>')
        s += ss
    out.append(f'<text x="{(ml + width - mr) / 2:.1f}" y="{height - 8:.1f}" '
               f'font-size="12" text-anchor="middle">time (s)</text>')
    out.append(f'<text x="14" y="{(mt + height - mb) / 2:.1f}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 14 '
               f'{(mt + height - mb) / 2:.1f})">station (m)</text>')

    for i, f in enumerate(futures):
        color = PALETTE[i % len(PALETTE)]
        for ob in f.obstacles:
            x0 = X(max(0.0, ob.t_in))
            x1 = X(min(t_end, ob.t_out))
            y0 = Y(min(s_view, ob.s_out))
            y1 = Y(max(0.0, ob.s_in))
            label = f.label or f"future {i}"
            out.append(
                f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{x1 - x0:.1f}" '
                f'height="{y1 - y0:.1f}" fill="{color}" fill-opacity="0.30" '
                f'stroke="{color}"><title>{label} (p={f.probability:g})'
                f'</title></rect>')

    if corridors is not None:
        for i, c in enumerate(corridors):
            color = PALETTE[i % len(PALETTE)]
            for arr in (c.lb, c.ub):
                pts = " ".join(f"{X(k * dt):.1f},{Y(min(arr[k], s_view)):.1f}"
                               for k in range(min(T, len(arr))))
                out.append(f'<polyline points="{pts}" fill="none" '
                           f'stroke="{color}" stroke-width="1" '
                           f'stroke-dasharray="2,3" stroke-opacity="0.8"/>')

    if plan is not None:
        td = plan.t_d_steps
        pts = " ".join(f"{X(k * dt):.1f},{Y(plan.prefix[k, 0]):.1f}"
                       for k in range(td))
        for i in range(len(plan.suffixes)):
            color = PALETTE[i % len(PALETTE)]
            full = plan.full_trajectory(i)
            spts = " ".join(f"{X(k * dt):.1f},{Y(full[k, 0]):.1f}"
                            for k in range(td - 1, full.shape[0]))
            out.append(f'<polyline points="{spts}" fill="none" '
                       f'stroke="{color}" stroke-width="2" '
                       f'stroke-dasharray="6,3"/>')
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" '
                   f'stroke-width="3"/>')

    if trace is not None:
        pts = " ".join(f"{X(r.t):.1f},{Y(r.s):.1f}" for r in trace.records)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" '
                   f'stroke-width="2"/>')
        for r in trace.records:
            out.append(f'<circle cx="{X(r.t):.1f}" cy="{Y(r.s):.1f}" r="2.4" '
                       f'fill="black"/>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
