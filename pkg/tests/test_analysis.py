import numpy as np
import pytest

from truncquant import (
    MINMAX,
    TRUNCQUANT,
    UNIFORM,
    DomainError,
    Interval,
    NormalizationParams,
    PrecisionOrderError,
    QuantConfig,
    QuantizedTensor,
    ShapeError,
    qt_error,
    qt_gap_intervals,
    qt_gap_measure,
    quant_binwidth,
    quant_error,
    surrogate_slope,
    trunc_binwidth,
    truncate,
    truncready_binwidth,
    uniform_quantize,
)
from truncquant.analysis import QtReport


def test_interval_rejects_empty():
    with pytest.raises(DomainError):
        Interval(0.5, 0.5)


class TestQuantBinwidth:
    def test_bottom_edge_clipped(self):
        iv = quant_binwidth(0, 2)
        assert iv.lo == 0.0
        assert iv.hi == pytest.approx(1 / 6)

    def test_top_edge_contains_one(self):
        iv = quant_binwidth(3, 2)
        assert iv.lo == pytest.approx(5 / 6)
        assert 1.0 in iv

    def test_out_of_range_index(self):
        with pytest.raises(DomainError):
            quant_binwidth(4, 2)
        with pytest.raises(DomainError):
            quant_binwidth(-1, 2)


class TestTruncBinwidth:
    def test_first_and_interior(self):
        iv0 = trunc_binwidth(0, 2, 8)
        assert iv0.lo == 0.0
        assert iv0.hi == pytest.approx(63.5 / 255)
        iv2 = trunc_binwidth(2, 2, 8)
        assert iv2.lo == pytest.approx(0.5)
        assert iv2.hi == pytest.approx(191.5 / 255)

    def test_requires_higher_start(self):
        with pytest.raises(PrecisionOrderError):
            trunc_binwidth(0, 3, 3)
        with pytest.raises(PrecisionOrderError):
            trunc_binwidth(0, 3, 2)


class TestTruncreadyBinwidth:
    def test_first_bin(self):
        iv = truncready_binwidth(0, 2)
        assert (iv.lo, iv.hi) == (0.0, 0.25)

    def test_top_bin_one_bit(self):
        iv = truncready_binwidth(1, 1)
        assert (iv.lo, iv.hi) == (0.5, 1.0)

    def test_equal_widths(self):
        for bits in range(1, 9):
            widths = {truncready_binwidth(k, bits).width for k in range(1 << bits)}
            assert widths == {1.0 / (1 << bits)}


@pytest.mark.parametrize("bits", range(1, 9))
def test_quant_binwidths_tile_unit_interval(bits):
    cfg = QuantConfig(bits)
    ivs = [quant_binwidth(i, bits) for i in range(cfg.max_bin + 1)]
    assert ivs[0].lo == 0.0
    assert ivs[-1].hi >= 1.0
    for a, b in zip(ivs, ivs[1:]):
        assert a.hi == b.lo


@pytest.mark.parametrize("bits,start_bits", [(1, 2), (2, 8), (3, 8), (4, 6), (7, 8)])
def test_trunc_binwidths_tile_unit_interval(bits, start_bits):
    cfg = QuantConfig(bits)
    ivs = [trunc_binwidth(j, bits, start_bits) for j in range(cfg.max_bin + 1)]
    assert ivs[0].lo == 0.0
    assert ivs[-1].hi >= 1.0
    for a, b in zip(ivs, ivs[1:]):
        assert a.hi == b.lo


@pytest.mark.parametrize("bits", range(1, 9))
def test_truncready_binwidths_tile_unit_interval(bits):
    cfg = QuantConfig(bits)
    ivs = [truncready_binwidth(k, bits) for k in range(cfg.max_bin + 1)]
    assert ivs[0].lo == 0.0
    assert ivs[-1].hi == 1.0
    for a, b in zip(ivs, ivs[1:]):
        assert a.hi == b.lo


class TestGapIntervals:
    def test_two_bit_from_eight(self):
        gaps = qt_gap_intervals(2, 8)
        assert len(gaps) == 2
        first, second = gaps
        assert first.interval.lo == pytest.approx(0.5 / 3)
        assert first.interval.hi == pytest.approx(63.5 / 255)
        assert (first.quant_bin, first.trunc_bin) == (1, 0)
        assert second.interval.lo == pytest.approx(191.5 / 255)
        assert second.interval.hi == pytest.approx(2.5 / 3)
        assert (second.quant_bin, second.trunc_bin) == (2, 3)
        assert qt_gap_measure(2, 8) == pytest.approx(0.1647, abs=2e-4)

    def test_two_bit_from_three(self):
        gaps = qt_gap_intervals(2, 3)
        assert gaps
        assert gaps[0].interval.lo == pytest.approx(0.5 / 3)
        assert gaps[0].interval.hi == pytest.approx(1.5 / 7)
        assert (gaps[0].quant_bin, gaps[0].trunc_bin) == (1, 0)

    def test_truncready_scheme_has_no_gaps(self):
        for bits, start_bits in [(1, 2), (2, 8), (5, 12)]:
            assert qt_gap_intervals(bits, start_bits, TRUNCQUANT) == []
            assert qt_gap_measure(bits, start_bits, TRUNCQUANT) == 0.0

    def test_precision_order_enforced(self):
        with pytest.raises(PrecisionOrderError):
            qt_gap_intervals(3, 3)
        with pytest.raises(PrecisionOrderError):
            qt_gap_intervals(3, 3, TRUNCQUANT)

    @pytest.mark.parametrize("bits,start_bits", [(1, 8), (2, 8), (3, 8), (2, 3), (4, 8)])
    def test_brute_force_sweep_agrees(self, bits, start_bits):
        """Cross-validate the analytic extraction against an operational sweep."""
        rng = np.random.default_rng(99)
        x = rng.random(200_000)
        q = uniform_quantize(x, QuantConfig(bits)).bins.astype(np.int64)
        t = truncate(uniform_quantize(x, QuantConfig(start_bits)), bits).bins.astype(
            np.int64
        )
        mismatch = q != t
        assert np.mean(mismatch) == pytest.approx(
            qt_gap_measure(bits, start_bits), abs=4e-3
        )
        gaps = qt_gap_intervals(bits, start_bits)
        for i in np.nonzero(mismatch)[0][:500]:
            hits = [
                g
                for g in gaps
                if x[i] in g.interval
                and g.quant_bin == q[i]
                and g.trunc_bin == t[i]
            ]
            assert hits, f"mismatched point {x[i]} not covered by any gap"


class TestQuantError:
    def test_zero_on_exact_grid(self):
        cfg = QuantConfig(3)
        wn = np.arange(8) / 7.0
        q = uniform_quantize(wn, cfg)
        assert quant_error(wn, q) == 0.0

    def test_scalar_evaluation(self):
        wn = np.array([0.2])
        q = uniform_quantize(wn, QuantConfig(2))
        assert quant_error(wn, q, "l1") == pytest.approx(abs(0.2 - 1 / 3), abs=1e-12)

    def test_scaled_by_norm_params(self):
        wn = np.array([0.2])
        norm = NormalizationParams(MINMAX, 4.0, (0.0, 4.0))
        q = uniform_quantize(wn, QuantConfig(2), norm=norm)
        assert quant_error(wn, q, "l1") == pytest.approx(4 * abs(0.2 - 1 / 3), abs=1e-12)

    def test_shape_mismatch(self):
        q = uniform_quantize(np.zeros(3), QuantConfig(2))
        with pytest.raises(ShapeError):
            quant_error(np.zeros(4), q)

    def test_nonincreasing_in_bits_on_random_tensor(self):
        rng = np.random.default_rng(11)
        wn = rng.random(10_000)
        errors = [
            quant_error(wn, uniform_quantize(wn, QuantConfig(bits)))
            for bits in range(1, 9)
        ]
        assert all(a >= b for a, b in zip(errors, errors[1:]))


class TestQtError:
    def test_hand_traced_fixture(self):
        wn = np.array([0.2, 0.5, 0.8, 0.99])
        report = qt_error(wn, 2, 8, UNIFORM, "l1", delta_prime=1.0, layer="fix")
        assert report.layer == "fix"
        assert (report.n, report.b) == (2, 8)
        assert report.total_weights == 4
        assert report.gap_count == 2
        assert report.level_size == pytest.approx(1 / 3)
        assert report.e_t_factored == pytest.approx(2 / 3, abs=1e-15)
        assert report.e_t_direct == pytest.approx(2 / 3, rel=1e-9)

    def test_truncready_scheme_is_gap_free(self):
        rng = np.random.default_rng(4)
        wn = rng.random(5000)
        report = qt_error(wn, 3, 8, TRUNCQUANT)
        assert report.gap_count == 0
        assert report.e_t_direct == 0.0
        assert report.e_t_factored == 0.0

    def test_l2_has_no_factored_form(self):
        report = qt_error(np.array([0.2, 0.7]), 2, 8, UNIFORM, "l2")
        assert report.e_t_factored is None
        assert report.csv_row()[8] == ""

    def test_validation(self):
        with pytest.raises(PrecisionOrderError):
            qt_error(np.array([0.5]), 8, 8)
        with pytest.raises(DomainError):
            qt_error(np.array([0.5]), 2, 8, UNIFORM, "linf")

    def test_csv_row_matches_header(self):
        report = qt_error(np.array([0.2, 0.5, 0.8, 0.99]), 2, 8, layer="w")
        row = report.csv_row()
        assert len(row) == len(QtReport.CSV_HEADER)
        assert row[0] == "w"
        assert row[1:5] == ["2", "8", "4", "2"]
        assert row[-1] == "l1"


def test_factored_form_matches_direct_on_random_tensors():
    rng = np.random.default_rng(42)
    for _ in range(5):
        wn = rng.random(10_000)
        for start_bits in (3, 8):
            for bits in range(1, start_bits):
                report = qt_error(wn, bits, start_bits, UNIFORM, "l1")
                assert report.e_t_direct == pytest.approx(
                    report.e_t_factored, rel=1e-9
                )


def test_surrogate_slope_matches_backward_scale():
    for bits in range(1, 9):
        cfg = QuantConfig(bits)
        expected = cfg.max_bin / cfg.num_bins
        assert surrogate_slope(bits) == pytest.approx(expected, abs=1e-12)
