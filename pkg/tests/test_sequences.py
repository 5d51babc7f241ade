import json
import math

import numpy as np
import pytest

from weightcalc.numerics import make_log_grid
from weightcalc.sequences import (AssociatedFunctionView, WeightSequence, associated_function,
                                  check_condition_1_1, check_lower_root_bound, check_M1, check_M2,
                                  check_M2prime, gevrey_sequence)
from weightcalc.verdict import Status


def brute_M(seq, t):
    return max(0.0, max(p * math.log(t) - seq.normalized[p] for p in range(seq.P + 1)))


def test_gevrey_logs():
    s = gevrey_sequence(1.0, 16)
    assert s.log_values[5] == pytest.approx(math.log(120.0))
    assert gevrey_sequence(2.0, 16).log_values[5] == pytest.approx(2 * math.log(120.0))


@pytest.mark.parametrize("t", [0.5, 1.0, 2.5, 10.0, 123.4, 255.0])
def test_associated_matches_brute_force(t):
    s = gevrey_sequence(1.0, 256)
    assert s.associated(t) == pytest.approx(brute_M(s, t), abs=1e-12)
    v = associated_function(s, t)
    assert float(v.value) == pytest.approx(brute_M(s, t), abs=1e-12)
    assert not v.truncated


def test_associated_of_constant_sequence_is_log_plus():
    one = WeightSequence(np.zeros(65), "one")
    assert associated_function(one, 10.0).truncated
    assert associated_function(one, 0.5).value == 0.0


def test_associated_rejects_nonpositive():
    with pytest.raises(ValueError):
        associated_function(gevrey_sequence(1.0), 0.0)


def test_sequence_validation():
    with pytest.raises(ValueError):
        WeightSequence(np.zeros(5))
    with pytest.raises(ValueError):
        WeightSequence(np.array([0.0] * 8 + [math.inf]))
    WeightSequence(np.zeros(3), infinite_tail=True)


def test_json_round_trip(tmp_path):
    s = gevrey_sequence(1.5, 32)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(s.to_json()))
    back = WeightSequence.load(p)
    assert np.array_equal(back.log_values, s.log_values) and back.label == s.label
    with pytest.raises(ValueError):
        WeightSequence.from_json({"label": "x"})


def test_reliable_range():
    s = gevrey_sequence(1.0, 256)
    assert s.reliable_t_max == pytest.approx(256.0)
    assert associated_function(s, 200.0).p < 256


def test_associated_view_convex_in_log_t():
    v = AssociatedFunctionView(gevrey_sequence(2.0, 256), make_log_grid(1, 1e5, 300))
    assert v.monotone_defect() == 0.0
    assert v.convexity_defect() <= 1e-9


def test_M1_examples():
    assert check_M1(gevrey_sequence(2.0)).holds
    bad = WeightSequence(np.array([0.0, 0, 5, 5, 5, 5, 5, 5, 5, 6]), "bad")
    v = check_M1(bad)
    assert v.fails and v.counterexample["p"] == 2


def test_M2_examples():
    g = gevrey_sequence(2.0)
    assert check_M2(g).holds and check_M2prime(g).holds
    assert check_M2(WeightSequence(np.zeros(65))).holds
    # l_p = p^2: M_{p+1}/M_p = e (e^2)^p is geometric, but M_p / min_q M_q M_{p-q} = e^{p^2/2} is not
    quad = WeightSequence(np.arange(65.0) ** 2, "quad")
    v = check_M2prime(quad)
    assert v.holds and v.witness["H"] >= math.e ** 2
    assert check_M2(quad).fails
    assert check_M2prime(WeightSequence(np.arange(65.0) ** 3, "cubic")).fails
    with pytest.raises(ValueError):
        check_M2(WeightSequence(np.zeros(3), infinite_tail=True))


def test_lower_root_bound():
    assert check_lower_root_bound(gevrey_sequence(1.0)).holds
    p = np.arange(65.0)
    decaying = WeightSequence(-p * np.log1p(p), "decay")
    assert check_lower_root_bound(decaying).status is Status.INCONCLUSIVE


def test_condition_1_1_gevrey():
    v = check_condition_1_1(gevrey_sequence(2.0), C=1.0)
    assert v.holds and v.witness["B"] >= 1.0
    # Gevrey order 1/2 grows too slowly for s^{s/2}: the sup keeps moving to the cutoff
    assert not check_condition_1_1(gevrey_sequence(1.0), C=0.01).holds
