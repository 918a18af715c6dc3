"""Render sweep rows into a human-readable report with SVG plots.

One section per family of checks found in the rows, each with the fitted
constants and a PASS/FAIL verdict against the tolerances this project holds
itself to.  Plots are written as self-contained SVG scatter charts with
reference slopes, no plotting library involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NothingToReportError
from .powerlaw import fit_power_law

DEFAULT_THRESHOLDS = {
    "inradius_exponent": -0.5,
    "inradius_exponent_tol": 0.05,
    "inradius_r2_min": 0.99,
    "asym_p05_floor": 0.2,
    "asym_scaling_slack": 2.0,
    "beta_over_sqrtlam_max": 10.0,
    "beta_slope_max": 1.1,
    "posvol_ratio_floor": 0.05,
    "thm61_slack_spread": 2.0,
}


@dataclass
class Section:
    name: str
    passed: bool | None
    lines: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReportResult:
    passed: bool
    sections: tuple[Section, ...]
    md_path: Path
    json_path: Path
    svg_paths: tuple[Path, ...]


def _get(rows, check, metric):
    """(mode, lam, component, value) tuples for one metric, in row order."""
    out = []
    for r in rows:
        if r["check"] == check and r["metric"] == metric:
            out.append(
                (r["mode"], float(r["lam"]), r["component"], float(r["value"]))
            )
    return out


def _mode_lam_pairs(entries):
    """Deduplicate to (lam, value) sorted by lam."""
    pairs = sorted({(lam, v) for _, lam, _, v in entries})
    return pairs


def _section_inradius(rows, thr):
    entries = _get(rows, "inradius", "inradius_max")
    if not entries:
        return None, None
    pairs = _mode_lam_pairs(entries)
    sec = Section("Inner radius against the eigenvalue", None)
    if len(pairs) < 3:
        sec.lines.append(f"only {len(pairs)} modes; need 3 for a fit")
        return sec, pairs
    fit = fit_power_law(pairs)
    ok = (
        abs(fit.exponent - thr["inradius_exponent"]) <= thr["inradius_exponent_tol"]
        and fit.r_squared >= thr["inradius_r2_min"]
    )
    sec.passed = ok
    sec.stats = {
        "exponent": fit.exponent,
        "coefficient": fit.coefficient,
        "r_squared": fit.r_squared,
        "n_modes": len(pairs),
    }
    sec.lines.append(
        f"fit inradius ~ {fit.coefficient:.4g} * lam^{fit.exponent:.4f} "
        f"(r^2 = {fit.r_squared:.5f}, {len(pairs)} modes)"
    )
    sec.lines.append(
        f"expected exponent {thr['inradius_exponent']} "
        f"+/- {thr['inradius_exponent_tol']}, r^2 >= {thr['inradius_r2_min']}"
    )
    return sec, pairs


def _section_asymmetry(rows, thr):
    p05 = _get(rows, "asymmetry", "p05_frac")
    mins = _get(rows, "asymmetry", "min_frac")
    if not p05:
        return None, None
    sec = Section("Ball asymmetry along the nodal set", None)
    p05_pairs = _mode_lam_pairs(p05)
    min_pairs = _mode_lam_pairs(mins)
    floor_ok = all(v >= thr["asym_p05_floor"] for _, v in p05_pairs)
    sec.lines.append(
        f"5th percentile of min(pos, neg) over modes: "
        f"{min(v for _, v in p05_pairs):.4f} min "
        f"(floor {thr['asym_p05_floor']})"
    )
    scaled = [(lam, v * math.sqrt(lam)) for lam, v in min_pairs]
    running, scale_ok = 0.0, True
    for _, s in scaled:
        if s < running / thr["asym_scaling_slack"]:
            scale_ok = False
        running = max(running, s)
    sec.lines.append(
        "min_frac * sqrt(lam) nondecreasing within x"
        f"{thr['asym_scaling_slack']:.0f}: {'yes' if scale_ok else 'NO'}"
    )
    sec.passed = floor_ok and scale_ok
    sec.stats = {
        "p05_min": min(v for _, v in p05_pairs),
        "floor_ok": floor_ok,
        "scaling_ok": scale_ok,
    }
    return sec, min_pairs


def _section_doubling(rows, thr):
    mx = _get(rows, "doubling", "beta_max")
    if not mx:
        return None, None
    sec = Section("Doubling exponents on wavelength balls", None)
    pairs = _mode_lam_pairs(mx)
    worst = max(v / math.sqrt(lam) for lam, v in pairs)
    bound_ok = worst <= thr["beta_over_sqrtlam_max"]
    sec.lines.append(
        f"max beta / sqrt(lam) = {worst:.4f} "
        f"(bound {thr['beta_over_sqrtlam_max']})"
    )
    slope_ok, slope = True, 0.0
    if len(pairs) >= 3:
        xs = [math.sqrt(lam) for lam, _ in pairs]
        ys = [v for _, v in pairs]
        n = len(xs)
        mean_x = sum(xs) / n
        mean_y = sum(ys) / n
        sxx = sum((x - mean_x) ** 2 for x in xs)
        slope = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / sxx
        slope_ok = slope <= thr["beta_slope_max"]
        sec.lines.append(
            f"linear slope of max beta against sqrt(lam): {slope:.4f} "
            f"(bound {thr['beta_slope_max']})"
        )
    sec.passed = bound_ok and slope_ok
    sec.stats = {"beta_over_sqrtlam_max": worst, "slope": slope}
    return sec, pairs


def _section_posvol(rows, thr):
    entries = _get(rows, "posvol", "ratio_min")
    if not entries:
        return None
    sec = Section("Positive volume against the growth bound", None)
    worst = min(v for _, _, _, v in entries)
    sec.passed = worst >= thr["posvol_ratio_floor"]
    sec.stats = {"ratio_min": worst}
    sec.lines.append(
        f"min over balls of lhs * clamped^(n-1) = {worst:.4f} "
        f"(floor {thr['posvol_ratio_floor']})"
    )
    return sec


def _section_thm61(rows, thr):
    slacks = _get(rows, "thm61", "slack")
    if not slacks:
        return None
    sec = Section("3D spectral bound from asymmetry and inradius", None)
    vals = [v for _, _, _, v in slacks]
    pos_ok = all(v > 0 for v in vals)
    spread = max(vals) / min(vals) if pos_ok else math.inf
    spread_ok = spread <= thr["thm61_slack_spread"]
    sec.passed = pos_ok and spread_ok
    sec.stats = {
        "slack_min": min(vals),
        "slack_max": max(vals),
        "spread": spread,
        "n": len(vals),
    }
    sec.lines.append(
        f"slack lam1 * inrad^2 / alpha^(1/3) over {len(vals)} components: "
        f"[{min(vals):.4g}, {max(vals):.4g}], spread x{spread:.3f} "
        f"(allowed x{thr['thm61_slack_spread']:.0f})"
    )
    ident = _get(rows, "thm61", "lam1_inrad2")
    if ident:
        vals2 = [v for _, _, _, v in ident]
        sec.lines.append(
            f"lam1 * inradius^2 across components: "
            f"[{min(vals2):.4g}, {max(vals2):.4g}]"
        )
    return sec


# ---------------------------------------------------------------- SVG ----


def _ticks_log(lo: float, hi: float):
    t = []
    e = math.floor(math.log10(lo))
    while 10.0**e <= hi * 1.0001:
        if 10.0**e >= lo * 0.9999:
            t.append(10.0**e)
        e += 1
    if not t:
        t = [lo, hi]
    return t


def _ticks_linear(lo: float, hi: float, n: int = 5):
    span = hi - lo
    scale = max(abs(lo), abs(hi), 1.0)
    if span <= 1e-9 * scale:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    out = []
    v = math.ceil(lo / step) * step
    while v <= hi + 1e-4 * span and len(out) < 50:
        out.append(v)
        v += step
    return out or [lo]


def svg_scatter(
    path,
    series,
    title: str,
    xlabel: str,
    ylabel: str,
    loglog: bool = True,
    ref_slopes=(),
):
    """Write a scatter chart; series = [(label, [(x, y), ...]), ...].

    ref_slopes = [(slope, label)]: straight guide lines through the first
    point of the first series (in the plot's coordinates).
    """
    w, h = 640, 460
    ml, mr, mt, mb = 70, 20, 40, 55
    pw, ph = w - ml - mr, h - mt - mb
    pts_all = [p for _, pts in series for p in pts]
    xs = [p[0] for p in pts_all]
    ys = [p[1] for p in pts_all]
    if not xs:
        raise NothingToReportError("no points to plot")

    def span(vals):
        lo, hi = min(vals), max(vals)
        if loglog:
            pad = (hi / lo) ** 0.08 if hi > lo else 2.0
            return lo / pad, hi * pad
        pad = 0.08 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.2
        return lo - pad, hi + pad

    x0, x1 = span(xs)
    y0, y1 = span(ys)
    if loglog:
        fx = lambda x: ml + pw * (math.log(x / x0) / math.log(x1 / x0))
        fy = lambda y: mt + ph * (1 - math.log(y / y0) / math.log(y1 / y0))
    else:
        fx = lambda x: ml + pw * ((x - x0) / (x1 - x0))
        fy = lambda y: mt + ph * (1 - (y - y0) / (y1 - y0))

    colors = ("#2a6fb0", "#c2502a", "#3d8f4e", "#8252a1")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="22" text-anchor="middle" '
        f'font-size="15">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#444"/>',
    ]
    xticks = _ticks_log(x0, x1) if loglog else _ticks_linear(x0, x1)
    yticks = _ticks_log(y0, y1) if loglog else _ticks_linear(y0, y1)
    for tx in xticks:
        px = fx(tx)
        out.append(
            f'<line x1="{px:.1f}" y1="{mt + ph}" x2="{px:.1f}" '
            f'y2="{mt + ph + 5}" stroke="#444"/>'
        )
        out.append(
            f'<text x="{px:.1f}" y="{mt + ph + 18}" '
            f'text-anchor="middle">{tx:.4g}</text>'
        )
    for ty in yticks:
        py = fy(ty)
        out.append(
            f'<line x1="{ml - 5}" y1="{py:.1f}" x2="{ml}" y2="{py:.1f}" '
            f'stroke="#444"/>'
        )
        out.append(
            f'<text x="{ml - 8}" y="{py + 4:.1f}" '
            f'text-anchor="end">{ty:.4g}</text>'
        )
    out.append(
        f'<text x="{ml + pw / 2:.1f}" y="{h - 12}" '
        f'text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{ylabel}</text>'
    )

    anchor = series[0][1][0]
    for slope, label in ref_slopes:
        if loglog:
            yy0 = anchor[1] * (x0 / anchor[0]) ** slope
            yy1 = anchor[1] * (x1 / anchor[0]) ** slope
        else:
            yy0 = anchor[1] + slope * (x0 - anchor[0])
            yy1 = anchor[1] + slope * (x1 - anchor[0])

        def clamp(y):
            return min(max(y, min(y0, y1)), max(y0, y1))

        out.append(
            f'<line x1="{fx(x0):.1f}" y1="{fy(clamp(yy0)):.1f}" '
            f'x2="{fx(x1):.1f}" y2="{fy(clamp(yy1)):.1f}" '
            f'stroke="#999" stroke-dasharray="6 4"/>'
        )
        out.append(
            f'<text x="{ml + pw - 4}" y="{fy(clamp(yy1)) - 6:.1f}" '
            f'text-anchor="end" fill="#777">{label}</text>'
        )

    for i, (label, pts) in enumerate(series):
        c = colors[i % len(colors)]
        for x, y in pts:
            out.append(
                f'<circle cx="{fx(x):.1f}" cy="{fy(y):.1f}" r="3.5" '
                f'fill="{c}" fill-opacity="0.85"/>'
            )
        out.append(
            f'<circle cx="{ml + 12}" cy="{mt + 14 + 16 * i}" r="3.5" fill="{c}"/>'
        )
        out.append(
            f'<text x="{ml + 22}" y="{mt + 18 + 16 * i}">{label}</text>'
        )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    return Path(path)


# -------------------------------------------------------------- report ----


def emit_report(rows, out_dir, thresholds: dict | None = None) -> ReportResult:
    """Write report.md, report.json, and plots for a set of sweep rows."""
    rows = list(rows)
    if not rows:
        raise NothingToReportError("no rows to report on")
    thr = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        thr.update(thresholds)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    sections: list[Section] = []
    svgs: list[Path] = []

    sec, inrad_pairs = _section_inradius(rows, thr)
    if sec:
        sections.append(sec)
        if inrad_pairs:
            svgs.append(
                svg_scatter(
                    out / "inradius_loglog.svg",
                    [("largest component inradius", inrad_pairs)],
                    "inner radius vs eigenvalue",
                    "lam",
                    "inradius",
                    loglog=True,
                    ref_slopes=[(-0.5, "slope -1/2")],
                )
            )

    sec, min_pairs = _section_asymmetry(rows, thr)
    if sec:
        sections.append(sec)
        if min_pairs:
            svgs.append(
                svg_scatter(
                    out / "asymmetry_loglog.svg",
                    [("min ball fraction", min_pairs)],
                    "worst sign fraction vs eigenvalue",
                    "lam",
                    "min(pos, neg) fraction",
                    loglog=True,
                    ref_slopes=[(-0.5, "slope -1/2")],
                )
            )

    sec, beta_pairs = _section_doubling(rows, thr)
    if sec:
        sections.append(sec)
        if beta_pairs:
            svgs.append(
                svg_scatter(
                    out / "doubling_beta.svg",
                    [("max beta", [(math.sqrt(lam), v) for lam, v in beta_pairs])],
                    "doubling exponent vs sqrt(lam)",
                    "sqrt(lam)",
                    "max beta",
                    loglog=False,
                    ref_slopes=[(1.0, "slope 1")],
                )
            )

    sec = _section_posvol(rows, thr)
    if sec:
        sections.append(sec)

    sec = _section_thm61(rows, thr)
    if sec:
        sections.append(sec)

    if not sections:
        raise NothingToReportError("rows contain no reportable checks")

    passed = all(s.passed for s in sections if s.passed is not None)
    md = ["# Sweep report", ""]
    for s in sections:
        verdict = (
            "PASS" if s.passed else "FAIL" if s.passed is not None else "n/a"
        )
        md.append(f"## {s.name} [{verdict}]")
        md.append("")
        for line in s.lines:
            md.append(f"- {line}")
        md.append("")
    if svgs:
        md.append("## Plots")
        md.append("")
        for p in svgs:
            md.append(f"![{p.stem}]({p.name})")
        md.append("")
    md_path = out / "report.md"
    md_path.write_text("\n".join(md), encoding="utf-8")

    json_path = out / "report.json"
    json_path.write_text(
        json.dumps(
            {
                "passed": passed,
                "sections": [
                    {
                        "name": s.name,
                        "passed": s.passed,
                        "lines": s.lines,
                        "stats": s.stats,
                    }
                    for s in sections
                ],
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return ReportResult(
        passed=passed,
        sections=tuple(sections),
        md_path=md_path,
        json_path=json_path,
        svg_paths=tuple(svgs),
    )
