import numpy as np
import pytest

from finitegap import comb as cb
from finitegap.errors import SolverError, ValidationError
from finitegap.spectral_set import GapSystem, critical_points


class TestCombData:
    def test_validation(self):
        with pytest.raises(ValidationError):
            cb.CombData(teeth=((0.5, 0.1), (0.5, 0.2)))  # duplicate frequency
        with pytest.raises(ValidationError):
            cb.CombData(teeth=((0.5, -0.1),))
        with pytest.raises(ValidationError):
            cb.CombData(teeth=((1.5, 0.1),))

    def test_widom_flag(self):
        finite = cb.CombData(teeth=((0.5, 0.3),), tail_bound=0.25)
        assert finite.is_widom
        diverging = cb.CombData(teeth=((0.5, 0.3),), tail_bound=np.inf)
        assert not diverging.is_widom

    def test_json_roundtrip(self):
        c = cb.CombData(teeth=((0.3, 0.5), (0.6, 0.2)), tail_bound=0.1)
        assert cb.CombData.from_json(c.to_json()) == c

    def test_rational_relation_search(self):
        rel = cb.CombData(teeth=((0.5, 0.1),)).rational_relation_report(max_coeff=3)
        assert (2,) in rel
        none = cb.CombData(teeth=((1 / np.pi, 0.1),)).rational_relation_report(max_coeff=3)
        assert none == []


class TestForwardMap:
    def test_symmetric_one_gap(self, sym_one_gap, sym_one_gap_cp):
        c = cb.comb_from_gaps(sym_one_gap, sym_one_gap_cp)
        assert c.omegas[0] == pytest.approx(0.5, abs=1e-12)
        assert c.heights[0] == pytest.approx(np.log(np.sqrt(3.0)), abs=1e-12)

    def test_heights_positive_three_gap(self, three_gap, three_gap_cp):
        c = cb.comb_from_gaps(three_gap, three_gap_cp)
        assert all(h > 0 for h in c.heights)
        assert c.delta0 == pytest.approx(np.exp(-sum(three_gap_cp.h)), abs=1e-14)


class TestInverseMap:
    def test_roundtrip_one_gap(self, sym_one_gap, sym_one_gap_cp):
        c = cb.comb_from_gaps(sym_one_gap, sym_one_gap_cp)
        bracket = GapSystem(-2.0, 2.0, ((-0.8, 0.9),))
        rec = cb.gaps_from_comb(c, bracket)
        assert np.allclose(rec.gaps, sym_one_gap.gaps, atol=1e-8)

    def test_roundtrip_two_gap(self, two_gap, two_gap_cp):
        c = cb.comb_from_gaps(two_gap, two_gap_cp)
        bracket = GapSystem(-2.0, 3.0, ((-1.1, -0.25), (0.7, 1.7)))
        rec = cb.gaps_from_comb(c, bracket)
        err = np.max(np.abs(np.asarray(rec.gaps) - np.asarray(two_gap.gaps)))
        assert err / two_gap.diameter < 1e-6

    def test_small_tooth_gives_small_gap(self):
        base = GapSystem(-2.0, 2.0, ((-0.1, 0.1),))
        c0 = cb.comb_from_gaps(base)
        tiny = cb.CombData(teeth=((c0.omegas[0], 1e-6),))
        rec = cb.gaps_from_comb(tiny, base)
        a, b = rec.gaps[0]
        assert b - a < 1e-2

    def test_requires_finite_comb(self, sym_one_gap):
        c = cb.CombData(teeth=((0.5, 0.3),), tail_bound=0.1)
        with pytest.raises(ValidationError):
            cb.gaps_from_comb(c, sym_one_gap)

    def test_bracket_mismatch(self, two_gap):
        c = cb.CombData(teeth=((0.5, 0.3),))
        with pytest.raises(ValidationError):
            cb.gaps_from_comb(c, two_gap)


class TestTruncation:
    def test_arithmetic(self):
        c = cb.CombData(teeth=((0.3, 0.5), (0.6, 0.2), (0.8, 0.05)))
        t = cb.truncate_comb(c, 10)
        assert t.teeth == ((0.3, 0.4), (0.6, 0.1))

    def test_large_n_recovers_heights(self):
        c = cb.CombData(teeth=((0.3, 0.5), (0.6, 0.2)))
        t = cb.truncate_comb(c, 10**9)
        assert np.allclose(t.heights, c.heights, atol=1e-8)

    def test_small_n_empties(self):
        c = cb.CombData(teeth=((0.3, 0.5),))
        assert cb.truncate_comb(c, 2).teeth == ()

    def test_delta_report_monotone_with_exact_limit(self):
        c = cb.CombData(teeth=((0.3, 0.5), (0.6, 0.2), (0.8, 0.05)))
        rep = cb.widom_delta_report(c, [2, 5, 10, 50, 10**12])
        vals = [r["delta_n0"] for r in rep]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(c.delta0, abs=1e-6)

    def test_geometric_tail_limit(self):
        # heights 2^-j sum to 1, so Delta(0) -> exp(-1)
        teeth = tuple((0.5 * (j + 1) / 22.0, 2.0 ** -(j + 1)) for j in range(20))
        c = cb.CombData(teeth=teeth)
        rep = cb.widom_delta_report(c, [10**9])
        assert rep[0]["delta_n0"] == pytest.approx(np.exp(-1.0), abs=1e-5)


class TestKernelTruncation:
    def test_envelopes(self, two_gap):
        up = cb.kernel_truncation_report(two_gap, [3, 10, 100], eps=-1)
        dn = cb.kernel_truncation_report(two_gap, [3, 10, 100], eps=1)
        for r in up:
            assert r["k0"] == pytest.approx(1.0, abs=1e-9)
        for r in dn:
            assert r["k0"] == pytest.approx(r["delta_n0"] ** 2, abs=1e-9)

    def test_generic_divisor_between_envelopes(self, two_gap):
        rep = cb.kernel_truncation_report(
            two_gap, [10, 100], eps=[1, -1], rel_positions=[0.3, 0.7]
        )
        for r in rep:
            assert r["delta_n0"] ** 2 - 1e-12 <= r["k0"] <= 1.0 + 1e-12


class TestSixGapRoundtrip:
    def test_relative_error(self):
        gs = GapSystem(
            -4.0, 4.0,
            ((-3.4, -3.0), (-2.4, -1.9), (-1.2, -0.8), (0.1, 0.5), (1.3, 1.9), (2.7, 3.2)),
        )
        c = cb.comb_from_gaps(gs)
        bracket = GapSystem(-4.0, 4.0, tuple((a + 0.03, b - 0.02) for a, b in gs.gaps))
        rec = cb.gaps_from_comb(c, bracket)
        err = np.max(np.abs(np.asarray(rec.gaps) - np.asarray(gs.gaps)))
        assert err / gs.diameter < 1e-6
