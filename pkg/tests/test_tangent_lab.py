"""Tests for window extraction, blow-up scans and tangent verdicts."""

import numpy as np
import pytest

from metric_lab.errors import DomainError
from metric_lab.fractal_gen import (
    FlatSnowflakeGenerator,
    ModelTangentGenerator,
    model_tangent_space,
    unit_square_generator,
)
from metric_lab.gh_solver import GhResult
from metric_lab.tangent_lab import (
    ScaledGenerator,
    ScanConfig,
    ScanReport,
    ScanRow,
    classify_tangent,
    extract_window,
    nearest_position_seed,
    tangent_scan,
)


def synthetic_report(columns):
    """Build a ScanReport from {model: [upper bounds]} with zero lower bounds."""
    n = len(next(iter(columns.values())))
    rows = []
    for i in range(n):
        results = {m: GhResult(lower=0.0, upper=col[i]) for m, col in columns.items()}
        rows.append(ScanRow(2.0 ** -(3 + i), 10, results, {m: 0.0 for m in columns}))
    return ScanReport(tuple(rows), 1.0, tuple(columns))


class TestExtractWindow:
    def test_whole_space_at_scale_one(self):
        gen = unit_square_generator()
        w = extract_window(gen, (0.0, 0.0), 1.0, 2.0, 0.5)
        assert w.space.n == 9  # every node of the 1/2-grid on the square
        assert w.scale == 1.0

    def test_square_corner_window_matches_quarter_model(self):
        gen = unit_square_generator()
        lam = 2.0 ** -4
        w = extract_window(gen, (0.0, 0.0), lam, 1.0, lam / 16)
        m = model_tangent_space("quarter", 1.0, 1 / 16)
        assert w.space.n == m.space.n
        ours = sorted((round(l[0] / lam, 9), round(l[1] / lam, 9))
                      for l in w.space.labels)
        theirs = sorted((round(l[0], 9), round(l[1], 9)) for l in m.space.labels)
        assert ours == theirs

    def test_window_monotone_in_radius(self):
        gen = unit_square_generator()
        big = extract_window(gen, (0.5, 0.5), 2.0 ** -3, 1.0, 2.0 ** -7)
        small = extract_window(gen, (0.5, 0.5), 2.0 ** -3, 0.5, 2.0 ** -7)
        assert set(small.space.labels) <= set(big.space.labels)

    def test_bad_scale_rejected(self):
        gen = unit_square_generator()
        with pytest.raises(DomainError):
            extract_window(gen, (0.0, 0.0), -1.0, 1.0, 0.1)


class TestScan:
    def test_square_corner_scan_reports_quarter(self):
        cfg = ScanConfig(generator=unit_square_generator(), center=(0.0, 0.0),
                         scales=(2.0 ** -3, 2.0 ** -4, 2.0 ** -5),
                         window_radius=1.0, models=("quarter", "half"),
                         rule="lambda/8")
        report = tangent_scan(cfg)
        assert report.verdict is not None
        assert report.verdict.best_model == "quarter"
        assert report.verdict.conclusive
        for row in report.rows:
            assert row.results["quarter"].upper <= row.results["half"].upper

    def test_edge_interior_point_looks_like_half_plane(self):
        cfg = ScanConfig(generator=unit_square_generator(), center=(0.5, 0.0),
                         scales=(2.0 ** -3, 2.0 ** -4, 2.0 ** -5),
                         window_radius=1.0, models=("quarter", "half"),
                         rule="lambda/8")
        report = tangent_scan(cfg)
        assert report.verdict.best_model == "half"

    def test_model_scanned_against_itself_is_discretization_tight(self):
        cfg = ScanConfig(generator=ModelTangentGenerator("plane"),
                         center=(0.0, 0.0),
                         scales=(2.0 ** -2, 2.0 ** -3, 2.0 ** -4),
                         window_radius=1.0, models=("plane",), rule="lambda/8")
        report = tangent_scan(cfg)
        for row in report.rows:
            assert row.results["plane"].upper <= 2.0 / 8.0  # C*h/lam with C=2

    def test_scale_equivariance(self):
        gen = unit_square_generator()
        c = 4.0
        base_cfg = ScanConfig(generator=gen, center=(0.0, 0.0),
                              scales=(2.0 ** -3, 2.0 ** -4, 2.0 ** -5),
                              window_radius=1.0, models=("quarter",),
                              rule="lambda/8")
        scaled_cfg = ScanConfig(generator=ScaledGenerator(gen, c),
                                center=(0.0, 0.0),
                                scales=tuple(c * s for s in base_cfg.scales),
                                window_radius=1.0, models=("quarter",),
                                rule="lambda/8")
        a = tangent_scan(base_cfg)
        b = tangent_scan(scaled_cfg)
        for ra, rb in zip(a.rows, b.rows):
            assert rb.lam == pytest.approx(c * ra.lam)
            assert ra.results["quarter"].upper == pytest.approx(
                rb.results["quarter"].upper, abs=1e-9)

    def test_flat_snowflake_decreasing_trend(self):
        gen = FlatSnowflakeGenerator()
        cfg = ScanConfig(generator=gen, center=("vertex", 3, 17),
                         scales=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6),
                         window_radius=1.0, models=("line",), rule="lambda/32")
        report = tangent_scan(cfg)
        ups = [row.results["line"].upper for row in report.rows]
        assert ups[-1] < ups[0]

    def test_scales_must_decrease(self):
        with pytest.raises(DomainError):
            ScanConfig(generator=unit_square_generator(), center=(0, 0),
                       scales=(0.25, 0.5), window_radius=1.0, models=("plane",))

    def test_rule_must_refine_relative_to_scale(self):
        with pytest.raises(DomainError):
            ScanConfig(generator=unit_square_generator(), center=(0, 0),
                       scales=(0.5, 0.25), window_radius=1.0, models=("plane",),
                       rule=lambda lam: 0.01)  # h/lam grows as lam shrinks


class TestClassify:
    def test_zero_column_wins_flat_and_conclusive(self):
        report = synthetic_report({"plane": [0.0, 0.0, 0.0],
                                   "half": [0.4, 0.4, 0.4]})
        v = classify_tangent(report)
        assert v.best_model == "plane"
        assert v.trend == "flat"
        assert v.conclusive

    def test_tied_models_are_inconclusive(self):
        # equal uppers with zero lowers: the gap rule fires
        report = synthetic_report({"a": [0.3, 0.2, 0.11],
                                   "b": [0.3, 0.2, 0.12]})
        v = classify_tangent(report)
        assert v.trend == "inconclusive"
        assert not v.conclusive

    def test_monotone_column_is_decreasing(self):
        report = synthetic_report({"a": [0.30, 0.18, 0.11, 0.06]})
        v = classify_tangent(report)
        assert v.trend == "decreasing"

    def test_needs_three_rows(self):
        report = synthetic_report({"a": [0.3, 0.2]})
        with pytest.raises(DomainError):
            classify_tangent(report)


class TestSeeds:
    def test_position_seed_none_for_plain_labels(self):
        from metric_lab.metric_core import FiniteMetricSpace, PointedWindow
        sp = FiniteMetricSpace([[0, 1], [1, 0]], ("a", "b"))
        w = PointedWindow(sp, 0, 1.0, 1.0)
        assert nearest_position_seed(w, w) is None

    def test_position_seed_is_identity_for_identical_windows(self):
        w = model_tangent_space("quarter", 1.0, 1 / 8)
        seed = nearest_position_seed(w, w)
        assert all(i == j for i, j in seed.pairs)


class TestSlitCarpetScan:
    def test_slit_endpoint_scan_is_reported_not_asserted(self):
        # constant fractions keep the slit visible at every scale: the table
        # is exploratory output; only its internal sanity is asserted
        from metric_lab.fractal_gen import SlitCarpetGenerator, SlitSchedule

        gen = SlitCarpetGenerator(SlitSchedule((0.5, 0.5)))
        cfg = ScanConfig(generator=gen, center=(0.5, 0.25),
                         scales=(2.0 ** -2, 2.0 ** -3, 2.0 ** -4),
                         window_radius=1.0, models=("t", "plane"),
                         rule="lambda/8")
        report = tangent_scan(cfg)
        for row in report.rows:
            for res in row.results.values():
                assert 0.0 <= res.lower <= res.upper
        assert report.verdict is not None
