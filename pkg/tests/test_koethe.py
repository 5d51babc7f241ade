import math

import numpy as np
import pytest

from weightcalc.bridge import sequence_from_weight
from weightcalc.koethe import (KoetheMatrix, NuclearityStatus, PreconditionError, SeriesVerdict,
                               condition4_from_gp, decay_exponent, gp_nuclearity, gp_series_test,
                               monotone_difference_check, sup_bound_diagnostic)
from weightcalc.numerics import geometric_k_sweep
from weightcalc.sequences import WeightSequence, gevrey_sequence
from weightcalc.weights import WeightFunction

OMEGA0 = WeightFunction.omega0()
GEV2 = WeightFunction.gevrey_weight(2)
LOG2 = WeightFunction.loga(2)


def test_exponents_are_M_of_j_sqrt_k():
    mat = KoetheMatrix(GEV2, 4, 10_000)
    k = np.array([0, 1, 4, 100])
    assert np.allclose(mat.exponent(3, k), [0.0, GEV2(3.0), GEV2(6.0), GEV2(30.0)])
    assert np.array_equal(mat.row(2, 50), mat.exponent(2, np.arange(51)))
    assert mat.invariant_violations == []


def test_refuses_beyond_reliable_range():
    with pytest.raises(PreconditionError):
        KoetheMatrix(gevrey_sequence(1.0, 256), 8, 10 ** 6)
    mat = KoetheMatrix(gevrey_sequence(1.0, 256), 2, 100)
    with pytest.raises(PreconditionError):
        mat.exponent(8, [10 ** 6])


def test_fault_injection_nonconvex_source():
    def bumpy(t):
        t = np.asarray(t, float)
        return np.log(np.maximum(t, 1.0)) + 3 * np.sin(np.log(np.maximum(t, 1.0)))

    mat = KoetheMatrix(bumpy, 4, 10_000)
    assert mat.invariant_violations


def test_omega0_series_is_harmonic():
    mat = KoetheMatrix(OMEGA0, 8, 10 ** 6)
    t = gp_series_test(mat, 1, 2, 10 ** 5)
    # summand (j/m) for every k >= 1: partial sum = K/2 + 1 exactly
    assert t.partial_sum == pytest.approx(10 ** 5 / 2 + 1, rel=1e-12)
    assert abs(t.nu) < 1e-9 and t.verdict is SeriesVerdict.DIVERGENT
    sb = sup_bound_diagnostic(mat, 1, 2, 10 ** 5)
    assert sb.at_boundary


def test_gevrey_series_converges():
    mat = KoetheMatrix(GEV2, 8, 10 ** 6)
    t = gp_series_test(mat, 1, 2)
    assert t.verdict is SeriesVerdict.CONVERGENT and t.nu > 2
    # summands exp(sqrt(sqrt k) - sqrt(2 sqrt k)) recomputed directly
    k = np.arange(1, 10 ** 6 + 1, dtype=float)
    assert t.partial_sum == pytest.approx(1 + math.fsum(np.exp(GEV2(np.sqrt(k)) - GEV2(2 * np.sqrt(k)))),
                                          rel=1e-12)
    sb = sup_bound_diagnostic(mat, 1, 2)
    assert not sb.at_boundary and math.isfinite(sb.A_hat)


def test_series_test_arguments():
    mat = KoetheMatrix(GEV2, 4, 1000)
    with pytest.raises(ValueError):
        gp_series_test(mat, 3, 2)
    with pytest.raises(ValueError):
        gp_series_test(mat, 1, 2, 5)
    with pytest.raises(ValueError):
        sup_bound_diagnostic(mat, 2, 2)


def test_series_csv(tmp_path):
    t = gp_series_test(KoetheMatrix(LOG2, 4, 1000), 1, 4, 1000)
    text = t.to_csv(tmp_path / "s.csv")
    rows = text.splitlines()
    assert rows[0] == "k,exponent,partial_sum" and len(rows) == len(geometric_k_sweep(1000)) + 1
    assert float(rows[-1].split(",")[2]) == pytest.approx(t.partial_sum)


def test_nu_monotone_in_m():
    mat = KoetheMatrix(LOG2, 8, 10 ** 6)
    nus = [decay_exponent(mat, 1, m, 10 ** 6)[0] for m in range(2, 33)]
    assert np.all(np.diff(nus) >= -1e-9)


def test_monotone_difference():
    mat = KoetheMatrix(GEV2, 8, 10 ** 6)
    assert monotone_difference_check(mat, 1, 8).holds
    with pytest.raises(ValueError):
        monotone_difference_check(mat, 2, 2)


def test_condition4_from_gp():
    mat = KoetheMatrix(GEV2, 8, 10 ** 6)
    H, v = condition4_from_gp(mat, 1, 16)
    assert v.holds and H >= 16
    with pytest.raises(PreconditionError):
        condition4_from_gp(KoetheMatrix(OMEGA0, 8, 10 ** 6), 1, 2)


@pytest.mark.parametrize("w, status", [(GEV2, NuclearityStatus.NUCLEAR), (LOG2, NuclearityStatus.NUCLEAR),
                                       (OMEGA0, NuclearityStatus.NOT_NUCLEAR)])
def test_gp_nuclearity(w, status):
    rep = gp_nuclearity(KoetheMatrix(w, 8, 10 ** 6))
    assert rep.status is status
    d = rep.to_dict()
    assert [r["j"] for r in d["perJ"]] == list(range(1, 9))
    if status is NuclearityStatus.NUCLEAR:
        assert rep.routes_agree and all(r.m is not None and r.m > r.j for r in rep.per_j)


def test_sequence_sourced_matrix():
    seq = sequence_from_weight(GEV2, 1024)
    rep = gp_nuclearity(KoetheMatrix(seq, 8, 10 ** 6))
    assert rep.status is NuclearityStatus.NUCLEAR


def test_scaling_invariance():
    # omega + c changes every a(j, k) by the same constant (k >= 1): summands are unchanged
    base = KoetheMatrix(LOG2, 4, 10 ** 4)
    shifted = KoetheMatrix(lambda t: LOG2(t) + np.where(np.asarray(t) > 0, 5.0, 0.0), 4, 10 ** 4)
    a = gp_series_test(base, 1, 4)
    b = gp_series_test(shifted, 1, 4)
    assert b.partial_sum == pytest.approx(a.partial_sum, rel=1e-12)
    assert b.nu == pytest.approx(a.nu, abs=1e-9)


def test_constant_sequence_matrix_not_nuclear():
    one = WeightSequence(np.zeros(9), "one", infinite_tail=True)
    rep = gp_nuclearity(KoetheMatrix(one, 4, 10 ** 4))
    assert rep.status is NuclearityStatus.NOT_NUCLEAR
