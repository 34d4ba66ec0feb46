import csv
import io
import math

import pytest

from eitlaser import experiments
from eitlaser.config import ScenarioConfig


def small_cfg(**kw):
    base = dict(r=0.5, ratio=50.0, t_end=0.5, n_points=11)
    base.update(kw)
    return ScenarioConfig(**base)


class TestSimulate:
    def test_row_count_and_order(self):
        rows = experiments.simulate(small_cfg())
        # minus branch at t = 0 has zero probability and is skipped
        assert len(rows) == 11 * 4 - 2
        assert [(r.branch, r.ordering) for r in rows[:2]] == [("plus", "with"), ("plus", "without")]
        assert rows[2].t_over_t0 == pytest.approx(0.05)

    def test_finite_and_probabilities(self):
        for row in experiments.simulate(small_cfg(measures=("T", "P", "T_A", "n", "q", "wigner"))):
            assert 0 <= row.prob <= 1
            assert row.W0 == pytest.approx(2 * row.P, abs=1e-6)
            for v in (row.T, row.P, row.T_A, row.n_mean, row.q_re, row.q_im):
                assert math.isfinite(v)

    def test_columns_follow_measures(self):
        cfg = small_cfg(measures=("P",), oracle=True)
        cols = experiments.columns_for(cfg)
        assert cols[-2:] == ["P", "oracle_fidelity"]
        assert "T" not in cols

    def test_oracle_column(self):
        cfg = small_cfg(r=0.3, oracle=True, branch="plus", measures=("T",), n_points=6, oracle_steps=400)
        rows = experiments.simulate(cfg)
        with_ordering = [r.oracle_fidelity for r in rows if r.ordering == "with"]
        without = [r.oracle_fidelity for r in rows if r.ordering == "without"]
        assert min(with_ordering) >= 1 - 1e-6
        assert min(without) < 0.99

    def test_weak_coupling_warning(self, caplog):
        experiments.simulate(small_cfg(ratio=8.0, n_points=2))
        assert "strong" in caplog.text

    def test_csv_deterministic_and_formatted(self, tmp_path):
        cfg = small_cfg()
        a = experiments.write_csv(experiments.simulate(cfg), experiments.columns_for(cfg), tmp_path / "a.csv")
        b = experiments.write_csv(experiments.simulate(cfg), experiments.columns_for(cfg), tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.reader(io.StringIO(a.read_text())))
        assert rows[0][0] == "t_over_t0"
        assert all(format(float(v), ".12g") == v for v in rows[5][3:])

    def test_negative_zero_is_folded(self):
        assert experiments._fmt(-0.0) == "0"

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            experiments._fmt(float("nan"))


class TestFeatures:
    def test_critical_radius(self):
        rep = experiments.critical_report()
        assert rep.r_c == pytest.approx(math.sqrt(0.1), abs=1e-12)
        assert rep.n_odd == pytest.approx(rep.n_odd_fock, abs=1e-10)

    def test_critical_scaling(self):
        assert experiments.critical_report(0.2).r_c == pytest.approx(0.447, abs=1e-3)

    def test_critical_bad_fraction(self):
        with pytest.raises(ValueError):
            experiments.critical_report(1.5)

    def test_noise_maxima_small_radius(self):
        for m in experiments.total_noise_maxima(0.25, 8.0):
            assert m.value == pytest.approx(1.0, abs=0.1)

    def test_plateau(self):
        rep = experiments.cat_plateau(1.0, 8.0)
        assert rep.min_T > 3 and rep.max_relative_oscillation < 0.05

    def test_phase_offset_helper_on_synthetic_curves(self):
        # features of cos(phi) at phi = k pi; shifting phi by c moves them by c
        c, w = 0.3, 7.0
        without = [k * math.pi / w for k in range(1, 40)]
        with_ = [(k * math.pi + c) / w for k in range(1, 40)]
        got, _ = experiments.phase_offset_at(
            with_, without, lambda t: w * t - c, lambda t: w * t, base=0.0, t_ref=10.0
        )
        assert got == pytest.approx(c, abs=1e-9)

    def test_local_extrema(self):
        ext = experiments.local_extrema(math.sin, 0.0, 10.0, 200, "max")
        # value-based refinement of a flat maximum resolves t to ~sqrt(eps)
        assert [e.t for e in ext] == pytest.approx([math.pi / 2, 5 * math.pi / 2], abs=1e-7)


class TestFigures:
    def test_presets(self):
        assert [n for n, _ in experiments.figure_configs("fig3")] == ["fig3_r0.25", "fig3_r0.5", "fig3_r1"]
        (_, cfg), = experiments.figure_configs("fig2")
        assert cfg.r == 1.8

    def test_fig2_circle(self):
        (_, cfg), = experiments.figure_configs("fig2")
        for row in experiments.trajectory_rows(cfg.replace(n_points=50)):
            z = complex(row["alpha_plus_re"], row["alpha_plus_im"])
            assert abs(z + 1.8) == pytest.approx(1.8, abs=1e-12)
            assert row["alpha_minus_re"] == pytest.approx(-row["alpha_plus_re"])

    def test_write_figure(self, tmp_path):
        paths = experiments.write_figure("fig4", tmp_path)
        names = sorted(p.name for p in paths)
        assert names == ["fig4_r0.25.columns.txt", "fig4_r0.25.csv", "fig4_r0.5.columns.txt", "fig4_r0.5.csv"]
        legend = (tmp_path / "fig4_r0.5.columns.txt").read_text()
        assert "P:" in legend and "r=0.5" in legend


class TestSweep:
    def test_parallel_matches_serial(self):
        serial = experiments.sweep_rows([0.25, 0.5], [8.0, 50.0], n=101)
        parallel = experiments.sweep_rows([0.25, 0.5], [8.0, 50.0], n=101, jobs=2)
        assert experiments.csv_text(serial, experiments.SWEEP_COLUMNS) == experiments.csv_text(
            parallel, experiments.SWEEP_COLUMNS
        )
        assert serial[1]["ordering_phase_half_period"] == pytest.approx(math.pi / 4)
