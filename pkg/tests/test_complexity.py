import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcdmimo import complexity as cx
from dcdmimo.complexity import OpCountLedger, ScenarioModel
from dcdmimo.equalizer import DcdLedger


def counted_complex_dot(n):
    """Real operations of sum_r conj(a_r) b_r by walking the loop."""
    adds = mults = 0
    for r in range(n):
        mults += 4
        adds += 2          # real and imaginary parts of one product
        if r:
            adds += 2      # accumulate
    return adds, mults


def counted_gram(n_rx, n_u):
    adds = mults = 0
    for i in range(n_u):
        for j in range(i):
            a, m = counted_complex_dot(n_rx)
            adds, mults = adds + a, mults + m
        # |h_i|^2: two squares per entry, summed
        mults += 2 * n_rx
        adds += 2 * n_rx - 1
    return adds, mults


class TestGateModel:
    @pytest.mark.parametrize("adds,mults,want", [
        (8128, 8192, 19038400), (16, 0, 2000), (1700, 1900, 4392500),
        (240, 256, 593200), (2000, 0, 250000), (2032, 2048, 4759600), (0, 0, 0),
    ])
    def test_rows(self, adds, mults, want):
        assert cx.gate_cost(adds, mults) == want

    def test_negative(self):
        with pytest.raises(ValueError):
            cx.gate_cost(-1, 0)

    def test_published_rows(self):
        rows = cx.CALIBRATED_ROWS
        assert all(r.consistent for n, r in rows.items() if n != "matched_filter")
        mf = rows["matched_filter"]
        assert mf.logic_ops == 5521600
        assert mf.model_logic_ops == 4759600
        assert not mf.consistent

    @given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
    def test_additive(self, a1, m1, a2, m2):
        s = OpCountLedger("x", a1, m1) + OpCountLedger("x", a2, m2)
        assert s.logic_ops == cx.gate_cost(a1, m1) + cx.gate_cost(a2, m2)
        assert OpCountLedger("x", a1, m1).scaled(3).logic_ops == 3 * cx.gate_cost(a1, m1)


class TestScenarios:
    def test_published_totals(self):
        assert cx.calibrated_totals() == {
            ("mmse", 1): 29547700, ("mmse", 2): 109040100,
            ("dcd", 1): 24810000, ("dcd", 2): 99840800}
        assert cx.calibrated_totals() == cx.PUBLISHED_TOTALS

    def test_scenario_two_construction(self):
        rows = cx.CALIBRATED_ROWS
        once = rows["gram"].logic_ops + rows["diag_add"].logic_ops + rows["inverse"].logic_ops
        per_symbol = rows["matched_filter"].logic_ops + rows["matvec"].logic_ops
        total = cx.scenario_total(cx.calibrated_stages("mmse"), ScenarioModel.of(2), "mmse")
        assert total == once + 14 * per_symbol

    def test_models(self):
        assert ScenarioModel.of(1).reuse_factor == 1
        assert ScenarioModel.of(2).reuse_factor == 14
        with pytest.raises(ValueError):
            ScenarioModel(2, 3)

    def test_stage_validation(self):
        with pytest.raises(ValueError):
            cx.scenario_total(cx.calibrated_stages("dcd"), ScenarioModel.of(1), "mmse")
        with pytest.raises(ValueError):
            cx.scenario_total([OpCountLedger("fft", 1, 1)], ScenarioModel.of(1), "dcd")
        with pytest.raises(ValueError):
            cx.scenario_total([], ScenarioModel.of(1), "zf")


class TestMeasured:
    @pytest.mark.parametrize("n_rx,n_u", [(64, 8), (16, 4), (8, 1), (3, 3)])
    def test_gram_counts(self, n_rx, n_u):
        g = cx.gram_counts(n_rx, n_u)
        assert (g.adds, g.mults) == counted_gram(n_rx, n_u)

    @pytest.mark.parametrize("n_rx,n_u", [(64, 8), (5, 2)])
    def test_matched_filter_counts(self, n_rx, n_u):
        a, m = counted_complex_dot(n_rx)
        mf = cx.matched_filter_counts(n_rx, n_u)
        assert (mf.adds, mf.mults) == (n_u * a, n_u * m)

    def test_reference_size(self):
        assert (cx.gram_counts(64, 8).adds, cx.gram_counts(64, 8).mults) == (8128, 8192)
        assert (cx.matched_filter_counts(64, 8).adds,
                cx.matched_filter_counts(64, 8).mults) == (2032, 2048)
        assert cx.diag_add_counts(8).adds == 16

    def test_small_solver_counts(self):
        # 1x1: one square root and one reciprocal; substitution: two divisions
        c = cx.cholesky_counts(1)
        assert (c.adds, c.mults) == (0, 2)
        t = cx.triangular_solve_counts(1)
        assert (t.adds, t.mults) == (0, 4)

    def test_measured_stages(self):
        st_ = cx.measured_stages("dcd", 64, 8, 1971.6)
        assert [s.stage for s in st_] == ["gram", "matched_filter", "dcd"]
        assert st_[-1].adds == 1972 and st_[-1].mults == 0
        assert len(cx.measured_stages("mmse", 64, 8)) == 5
        with pytest.raises(ValueError):
            cx.measured_stages("dcd", 64, 8)
        with pytest.raises(ValueError):
            cx.measured_stages("zf", 64, 8)


class TestHistogram:
    def test_edges(self):
        assert cx.HIST_EDGES.size == 31
        assert cx.HIST_EDGES[0] == 1040.0 and cx.HIST_EDGES[-1] == pytest.approx(3040.0)

    def test_counts(self):
        h = cx.dcd_addition_histogram([1000, 1040, 1200, 2000, 3040, 3100])
        assert h.n == 6 and h.below == 1 and h.above == 1
        assert h.counts.sum() == 4
        assert h.counts[0] == 1 and h.counts[-1] == 1
        assert (h.minimum, h.maximum) == (1000, 3100)
        assert h.mean == pytest.approx(np.mean([1000, 1040, 1200, 2000, 3040, 3100]))

    def test_from_ledgers(self):
        h = cx.dcd_addition_histogram([DcdLedger(additions=1500, comparisons=500)])
        assert h.mean == 2000.0

    def test_empty(self):
        with pytest.raises(ValueError):
            cx.dcd_addition_histogram([])


class TestReports:
    def test_text_flags_inconsistency(self):
        text = cx.report_text()
        assert "5521600" in text and "4759600" in text
        assert "29547700" in text and "99840800" in text

    def test_tsv_with_measured(self):
        measured = {"mmse": cx.measured_stages("mmse", 64, 8),
                    "dcd": cx.measured_stages("dcd", 64, 8, 1972)}
        tsv = cx.report_tsv(measured)
        assert "# measured complexity results" in tsv
        dcd1 = 19038400 + 4759600 + 1972 * 125
        assert f"dcd\t{dcd1}\t" in tsv
