"""Trajectory serialization: CSV tables, SVG line charts, run manifests.

All emitters are deterministic — identical inputs give byte-identical files
(floats are written in shortest round-trip form, no timestamps) — so a run
can be reproduced and diffed from its manifest alone.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .lindblad import Trajectory

__all__ = [
    "trajectory_csv",
    "write_trajectory_csv",
    "trajectory_svg",
    "write_manifest",
]

# line colors per domain, following the figure palette of the study domain
_PALETTE = ("#c2185b", "#1e63b4", "#c8a102", "#4caf7d", "#7b1fa2", "#455a64")


def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_csv(traj: Trajectory) -> str:
    """RFC-4180 CSV text: t, jz_norm_i per domain, trace_err, purity."""
    m = len(traj.sizes)
    header = ["t"] + [f"jz_norm_{i + 1}" for i in range(m)] + ["trace_err", "purity"]
    lines = [",".join(header)]
    jz_norm = traj.jz_norm
    for k in range(traj.times.size):
        row = [_fmt(traj.times[k])]
        row += [_fmt(jz_norm[k, i]) for i in range(m)]
        row.append(_fmt(traj.trace_error[k]))
        row.append(_fmt(traj.purity[k]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path, traj: Trajectory) -> None:
    Path(path).write_bytes(trajectory_csv(traj).encode("utf-8"))


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _decade_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.ceil(math.log10(lo) - 1e-9)
    hi_e = math.floor(math.log10(hi) + 1e-9)
    if hi_e < lo_e:
        return [lo, hi]
    step = max(1, (hi_e - lo_e) // 8)
    return [10.0**e for e in range(lo_e, hi_e + 1, step)]


def _tick_label(v: float, log: bool) -> str:
    if log:
        e = math.log10(v)
        if abs(e - round(e)) < 1e-9:
            return f"1e{int(round(e))}"
        return f"{v:g}"
    return f"{v:g}"


def trajectory_svg(
    traj: Trajectory,
    log_x: bool = False,
    title: str | None = None,
    width: int = 720,
    height: int = 480,
) -> str:
    """A minimal SVG 1.1 line chart: normalized inversion of each domain
    against time, with a linear or logarithmic time axis."""
    t = np.asarray(traj.times, dtype=float)
    series = traj.jz_norm.T  # (M, n)
    if log_x:
        mask = t > 0
        t = t[mask]
        series = series[:, mask]
        if t.size < 2:
            raise ValueError("logarithmic axis needs at least two positive times")

    m_left, m_right, m_top, m_bottom = 64, 16, 34 if title else 16, 44
    plot_w = width - m_left - m_right
    plot_h = height - m_top - m_bottom

    x_lo, x_hi = float(t[0]), float(t[-1])
    y_lo, y_hi = -0.55, 0.55

    def x_pos(v):
        if log_x:
            frac = (math.log10(v) - math.log10(x_lo)) / (math.log10(x_hi) - math.log10(x_lo))
        else:
            frac = (v - x_lo) / (x_hi - x_lo) if x_hi > x_lo else 0.0
        return m_left + frac * plot_w

    def y_pos(v):
        frac = (v - y_lo) / (y_hi - y_lo)
        return m_top + (1.0 - frac) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{m_left}" y="{m_top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#444444" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="22" font-family="sans-serif" font-size="15" '
            f'text-anchor="middle">{title}</text>'
        )

    x_ticks = _decade_ticks(x_lo, x_hi) if log_x else _nice_ticks(x_lo, x_hi)
    for v in x_ticks:
        if not x_lo <= v <= x_hi:
            continue
        xp = x_pos(v)
        parts.append(
            f'<line x1="{xp:.2f}" y1="{m_top + plot_h}" x2="{xp:.2f}" '
            f'y2="{m_top + plot_h + 5}" stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{xp:.2f}" y="{m_top + plot_h + 19}" font-family="sans-serif" '
            f'font-size="12" text-anchor="middle">{_tick_label(v, log_x)}</text>'
        )
    for v in _nice_ticks(y_lo, y_hi, 7):
        yp = y_pos(v)
        parts.append(
            f'<line x1="{m_left - 5}" y1="{yp:.2f}" x2="{m_left}" y2="{yp:.2f}" '
            f'stroke="#444444" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{m_left}" y1="{yp:.2f}" x2="{m_left + plot_w}" y2="{yp:.2f}" '
            f'stroke="#dddddd" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{m_left - 9}" y="{yp + 4:.2f}" font-family="sans-serif" '
            f'font-size="12" text-anchor="end">{v:g}</text>'
        )
    parts.append(
        f'<text x="{m_left + plot_w / 2:.1f}" y="{height - 8}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle">t</text>'
    )
    parts.append(
        f'<text x="16" y="{m_top + plot_h / 2:.1f}" font-family="sans-serif" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 16 {m_top + plot_h / 2:.1f})">'
        "&#x27E8;Jz&#x27E9;/N</text>"
    )

    for i in range(series.shape[0]):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{x_pos(tv):.2f},{y_pos(min(max(yv, y_lo), y_hi)):.2f}"
            for tv, yv in zip(t, series[i])
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        lx = m_left + plot_w - 70
        ly = m_top + 16 + 17 * i
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="12">'
            f"D{i + 1}</text>"
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_manifest(path, spec_dict: dict, version: str, outputs: dict) -> None:
    """Echo every input plus tool version; enough to re-run the simulation."""
    doc = {
        "tool": "spindomains",
        "version": version,
        "spec": spec_dict,
        "outputs": outputs,
    }
    Path(path).write_bytes(
        (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
