"""Report rendering from sweep rows, including the SVG plots."""

import json
import math

import pytest

from nodelab.errors import NothingToReportError
from nodelab.harness import COLUMNS
from nodelab.report import emit_report, svg_scatter


def row(mode, lam, check, metric, value, component=""):
    return dict(zip(COLUMNS, [
        "cafe00000000", "synthetic", mode, component,
        repr(float(lam)), "64", check, metric, repr(float(value)),
    ]))


def synthetic_rows():
    rows = []
    for m in range(2, 8):
        lam = 2.0 * m * m
        rows.append(row(f"{m}x{m}", lam, "inradius", "inradius_max",
                        math.pi / (2 * m)))
        rows.append(row(f"{m}x{m}", lam, "asymmetry", "p05_frac", 0.45))
        rows.append(row(f"{m}x{m}", lam, "asymmetry", "min_frac", 0.42))
        rows.append(row(f"{m}x{m}", lam, "doubling", "beta_max", 1.3))
        rows.append(row(f"{m}x{m}", lam, "posvol", "ratio_min", 1.4))
    return rows


def section(res, word):
    return next(s for s in res.sections if word in s.name.lower())


def test_report_passes_on_clean_rows(tmp_path):
    res = emit_report(synthetic_rows(), tmp_path)
    assert res.passed
    assert len(res.sections) == 4
    assert all(s.passed for s in res.sections)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["passed"] is True
    # inradius ~ pi/(2m) = c * lam^{-1/2}: the fit recovers -1/2 exactly
    inrad = section(res, "inner radius")
    assert inrad.stats["exponent"] == pytest.approx(-0.5, abs=1e-12)
    assert inrad.stats["r_squared"] == pytest.approx(1.0, abs=1e-12)


def test_report_markdown_has_a_verdict_per_section(tmp_path):
    res = emit_report(synthetic_rows(), tmp_path)
    text = (tmp_path / "report.md").read_text()
    assert text.count("[PASS]") == len(res.sections)
    assert "## Plots" in text


def test_report_emits_svg_plots(tmp_path):
    emit_report(synthetic_rows(), tmp_path)
    svgs = sorted(p.name for p in tmp_path.glob("*.svg"))
    assert svgs == ["asymmetry_loglog.svg", "doubling_beta.svg",
                    "inradius_loglog.svg"]
    text = (tmp_path / "inradius_loglog.svg").read_text()
    assert text.startswith("<svg")
    assert "circle" in text


def test_report_fails_on_threshold_violation(tmp_path):
    rows = synthetic_rows()
    rows.append(row("9x9", 162.0, "asymmetry", "p05_frac", 0.05))
    rows.append(row("9x9", 162.0, "asymmetry", "min_frac", 0.04))
    res = emit_report(rows, tmp_path)
    assert not res.passed
    assert not section(res, "asymmetry").passed
    assert section(res, "inner radius").passed


def test_report_threshold_overrides(tmp_path):
    res = emit_report(synthetic_rows(), tmp_path,
                      thresholds={"posvol_ratio_floor": 2.0})
    assert not section(res, "positive volume").passed
    assert not res.passed


def test_empty_rows_raise(tmp_path):
    with pytest.raises(NothingToReportError):
        emit_report([], tmp_path)


def test_rows_without_known_checks_raise(tmp_path):
    rows = [row("2x2", 8.0, "mystery", "thing", 1.0)]
    with pytest.raises(NothingToReportError):
        emit_report(rows, tmp_path)


def test_report_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    emit_report(synthetic_rows(), a)
    emit_report(synthetic_rows(), b)
    for name in ("report.md", "report.json", "inradius_loglog.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_scatter_handles_degenerate_identical_values(tmp_path):
    # all-equal y values once spun the tick generator forever; keep this
    series = [("flat", [(1.0, 1.3233), (2.0, 1.3233), (3.0, 1.3233)])]
    p = tmp_path / "flat.svg"
    svg_scatter(p, series, "flat", "x", "y", loglog=False)
    assert p.read_text().startswith("<svg")


def test_scatter_loglog_with_reference_slope(tmp_path):
    series = [("decay", [(2.0 ** k, 3.0 * 2.0 ** (-0.5 * k)) for k in range(6)])]
    p = tmp_path / "decay.svg"
    svg_scatter(p, series, "decay", "lam", "r",
                loglog=True, ref_slopes=[(-0.5, "slope -1/2")])
    text = p.read_text()
    assert "dash" in text  # the reference line is dashed
    assert "slope -1/2" in text


def test_thm61_rows_make_their_own_section(tmp_path):
    rows = []
    for m in (2, 3, 4):
        lam1 = 3.0 * m * m
        rows.append(row(f"{m}x{m}x{m}", lam1, "thm61", "slack", 7.8,
                        component="1"))
        rows.append(row(f"{m}x{m}x{m}", lam1, "thm61", "lam1_inrad2",
                        3 * math.pi ** 2 / 4, component="1"))
    res = emit_report(rows, tmp_path)
    assert len(res.sections) == 1
    sec = res.sections[0]
    assert sec.passed
    assert sec.stats["spread"] == pytest.approx(1.0)
    # a negative slack sinks the section
    rows.append(row("5x5x5", 75.0, "thm61", "slack", -0.1, component="1"))
    res2 = emit_report(rows, tmp_path)
    assert not res2.passed
