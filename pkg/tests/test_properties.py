import json
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from weightcalc.bridge import sequence_from_weight
from weightcalc.conjugation import conjugate_at
from weightcalc.numerics import ExtendedReal, partial_sums
from weightcalc.report import dumps
from weightcalc.sequences import WeightSequence, check_M1
from weightcalc.weights import WeightFunction

increments = st.lists(st.floats(0.0, 5.0, allow_nan=False), min_size=8, max_size=80)


def convex_sequence(incs):
    d = np.sort(np.asarray(incs))
    return WeightSequence(np.concatenate([[0.0], np.cumsum(d)]), "random")


@given(increments, st.floats(1e-3, 1e3))
def test_associated_matches_exhaustive_scan(incs, t):
    seq = convex_sequence(incs)
    brute = max(0.0, max(p * math.log(t) - seq.normalized[p] for p in range(seq.P + 1)))
    assert abs(float(seq.associated(t)) - brute) <= 1e-9 * max(1.0, brute)


@given(st.lists(st.floats(-5.0, 5.0, allow_nan=False), min_size=9, max_size=60))
def test_associated_sees_only_the_convex_minorant(vals):
    # any sequence (not only log-convex) gives a nondecreasing M, convex in log t
    seq = WeightSequence(np.asarray(vals), "any")
    u = np.linspace(-3, 3, 61)
    M = seq.associated(np.exp(u))
    assert np.all(np.diff(M) >= -1e-12)
    assert np.all(np.diff(M, 2) >= -1e-9)


@settings(deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 60.0))
def test_power_conjugate_closed_form(a, s):
    v, _, _ = conjugate_at(WeightFunction.power(a), [s])
    r = s / a
    exact = r * math.log(r) - r + 1 if r >= 1 else 0.0
    assert abs(v[0] - exact) <= 1e-9 * max(1.0, exact)


@settings(deadline=None)
@given(st.sampled_from(["log2", "log3", "gevrey2", "power0.3"]), st.floats(0.0, 20.0), st.floats(0.0, 30.0))
def test_fenchel_young(name, u, s):
    w = {"log2": WeightFunction.loga(2), "log3": WeightFunction.loga(3),
         "gevrey2": WeightFunction.gevrey_weight(2), "power0.3": WeightFunction.power(0.3)}[name]
    v, _, _ = conjugate_at(w, [s])
    assert float(w.phi(u)) + v[0] >= u * s - 1e-9 * max(1.0, u * s)


@settings(deadline=None, max_examples=25)
@given(st.floats(0.05, 0.95))
def test_conjugate_sequences_log_convex(a):
    assert check_M1(sequence_from_weight(WeightFunction.power(a), 128)).holds


@given(st.lists(st.floats(-30.0, 0.0, allow_nan=False), min_size=2, max_size=200))
def test_partial_sums_exact_and_monotone(e):
    s = partial_sums(e)
    assert np.all(np.diff(s) >= 0)
    assert math.isclose(s[-1], math.fsum(math.exp(x) for x in e), rel_tol=1e-15)


@given(st.floats(0.0, 1e300), st.floats(0.0, 1e300))
def test_extended_real_closed_under_addition(x, y):
    z = ExtendedReal(x) + y
    assert isinstance(z, ExtendedReal) and z == x + y


json_leaf = st.one_of(st.none(), st.booleans(), st.integers(-10 ** 6, 10 ** 6), st.text(max_size=5),
                      st.floats(allow_nan=False))
json_tree = st.recursive(json_leaf, lambda c: st.one_of(st.lists(c, max_size=4),
                                                        st.dictionaries(st.text(max_size=4), c, max_size=4)),
                         max_leaves=20)


def _expected(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, list):
        return [_expected(v) for v in x]
    if isinstance(x, dict):
        return {k: _expected(v) for k, v in x.items()}
    return x


@given(json_tree)
def test_report_json_round_trip(tree):
    text = dumps(tree)
    assert json.loads(text) == _expected(tree)
