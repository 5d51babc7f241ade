"""Acceptance criteria 1-11, one test each; every test records a PASS/FAIL line."""

import math
import subprocess
import sys

import numpy as np
import pytest

from weightcalc.bridge import (bmm_transfer_check, condition_1_1_bound_shape, equivalence_sandwich, r_epsilon,
                               sequence_from_weight, sequence_from_weight_product_form)
from weightcalc.conjugation import biconjugate_check, young_conjugate
from weightcalc.koethe import (KoetheMatrix, NuclearityStatus, SeriesVerdict, classify_nu, condition4_from_gp,
                               decay_exponent, gp_nuclearity, monotone_difference_check, sup_bound_diagnostic)
from weightcalc.numerics import make_log_grid
from weightcalc.sequences import check_condition_1_1, check_M1, check_M2
from weightcalc.weights import WeightFunction, check_BMM, check_condition4, iterate_condition4

from conftest import BUILTINS

GRID = make_log_grid(1.0, 1e8, 512)
K = 10 ** 6
RESULTS: dict[int, str] = {}

SANDWICH_FAMILIES = [WeightFunction.gevrey_weight(s) for s in (1.5, 2, 3)] + \
                    [WeightFunction.power(a) for a in (1 / 3, 1 / 2, 2 / 3)]


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_01_log2_cond4_without_bmm():
    w = WeightFunction.loga(2)
    c4 = check_condition4(w, GRID)
    bmm = check_BMM(w, GRID)
    grows = all(c["diverging"] and c["tailSlope"] > 0 for c in bmm.evidence["candidates"])
    ok = c4.holds and c4.witness["H"] <= math.e ** 2 and bmm.fails and grows
    record(1, ok, f"cond4 {c4.status.value} H={c4.witness and c4.witness['H']:g}; "
                  f"BMM {bmm.status.value}, tail margin increasing for every H: {grows}")


def test_criterion_02_omega0_degenerate():
    w = WeightFunction.omega0()
    c4 = check_condition4(w, GRID)
    mat = KoetheMatrix(w, 8, K)
    rep = gp_nuclearity(mat)
    nus = [r.nu for r in rep.per_j]
    k = np.arange(1, K + 1, 997)
    ratio_exact = all(np.allclose(mat.exponent(j, k) - mat.exponent(m, k), math.log(j / m), rtol=0, atol=1e-12)
                      for j, m in ((1, 2), (3, 8), (5, 40)))
    ok = (c4.fails and rep.status is NuclearityStatus.NOT_NUCLEAR and ratio_exact
          and all(-0.05 <= nu <= 0.05 for nu in nus))
    record(2, ok, f"cond4 {c4.status.value}; nuclearity {rep.status.value}; "
                  f"nu in [{min(nus):.3g}, {max(nus):.3g}]; summand ratio (j/m) exact: {ratio_exact}")


def test_criterion_03_gevrey2_nuclear_both_routes():
    mat = KoetheMatrix(WeightFunction.gevrey_weight(2), 8, K)
    rep = gp_nuclearity(mat)
    rebuilt = []
    for r in rep.per_j:
        H_hat, v = condition4_from_gp(mat, r.j, r.m)
        rebuilt.append((H_hat, v.holds))
    ok = (rep.status is NuclearityStatus.NUCLEAR and rep.routes_agree
          and [r.j for r in rep.per_j] == list(range(1, 9)) and all(r.route == "both" for r in rep.per_j)
          and all(h for _, h in rebuilt))
    record(3, ok, f"{rep.status.value}, routes agree {rep.routes_agree}, m = {[r.m for r in rep.per_j]}, "
                  f"H_hat in [{min(h for h, _ in rebuilt):.4g}, {max(h for h, _ in rebuilt):.4g}] verified")


def test_criterion_04_bridge_identity():
    worst, m1 = 0.0, True
    for w in BUILTINS.values():
        a = sequence_from_weight(w, 64)
        b = sequence_from_weight_product_form(w, 64)
        n = min(a.P, b.P) + 1
        worst = max(worst, float(np.max(np.abs(a.log_values[:n] - b.log_values[:n]))))
        m1 &= a.infinite_tail == b.infinite_tail and check_M1(a).holds
    record(4, worst <= 1e-6 and m1, f"max |conjugate - product| = {worst:.3g} over {len(BUILTINS)} families; M1 {m1}")


def test_criterion_05_sandwich():
    As = []
    for w in SANDWICH_FAMILIES:
        A, v = equivalence_sandwich(w, sequence_from_weight(w, 1024), GRID, tol=1e-6)
        As.append((w.label, v.holds, A))
    ok = all(h and math.isfinite(A) for _, h, A in As)
    record(5, ok, "; ".join(f"{lab} A={A:.4g}" for lab, _, A in As))


def test_criterion_06_bmm_transfer():
    rows = []
    for w in SANDWICH_FAMILIES:
        seq = sequence_from_weight(w, 1024)
        H = check_BMM(w, GRID).witness["H"]
        A, _ = equivalence_sandwich(w, seq, GRID)
        v = bmm_transfer_check(w, seq, GRID)
        rows.append((w.label, v.holds and math.isclose(v.witness["constant"], A / 2 + 1.5 * H), H))
    record(6, all(ok for _, ok, _ in rows), "; ".join(f"{lab} H={H:g} {ok}" for lab, ok, H in rows))


def test_criterion_07_conjugation_calculus():
    def err(u_points, slopes):
        w = WeightFunction.from_phi(lambda u: u * u / 2, 12.0, u_points)
        return biconjugate_check(w, young_conjugate(w, 10.0, slopes))

    coarse, fine = err(8193, 2048), err(16385, 4096)
    inv = {lab: max(young_conjugate(w, 64.0).invariant_defects().values()) for lab, w in BUILTINS.items()}
    ok = fine <= 1e-6 and fine <= coarse / 2 and all(d <= 1e-9 for d in inv.values())
    record(7, ok, f"quadratic error {fine:.3g} at 4096 slopes ({coarse:.3g} at 2048, ratio {coarse / fine:.2f}); "
                  f"worst invariant defect {max(inv.values()):.3g}")


def test_criterion_08_condition_1_1():
    eps = 1 / math.e  # C = eps e = 1
    rows = []
    for w in (WeightFunction.gevrey_weight(2), WeightFunction.power(0.5)):
        seq = sequence_from_weight(w, 256)
        v = check_condition_1_1(seq, C=1.0)
        shape = condition_1_1_bound_shape(w, seq, eps)
        R = r_epsilon(w, eps)
        rows.append((w.label, v.holds and shape.holds and v.witness["B"] <= math.exp(R) * (1 + 1e-12),
                     v.witness and v.witness["B"], math.exp(R)))
    record(8, all(r[1] for r in rows), "; ".join(f"{lab} B={B:g} <= e^R={eR:g}" for lab, _, B, eR in rows))


def test_criterion_09_final_example():
    w = WeightFunction.loga(2)
    seq = sequence_from_weight(w, 256)
    m1, c11, m2 = check_M1(seq), check_condition_1_1(seq), check_M2(seq)
    c4 = check_condition4(seq, GRID)
    H = check_condition4(w, GRID).witness["H"]
    C2 = iterate_condition4(w, GRID, H, 2).C
    t = GRID.points[H * H * GRID.points <= seq.reliable_t_max]
    chain = float(np.max(seq.associated(t) + np.log(t) - seq.associated(H * H * t)))
    bound = 2 * math.log(H) + C2
    ok = m1.holds and c11.holds and c4.holds and chain <= bound + 1e-9 and m2.fails
    record(9, ok, f"M1 {m1.status.value}, condition_1_1 {c11.status.value}, cond4(M) {c4.status.value}, "
                  f"chain {chain:.4g} <= 2 log H + C_2,H = {bound:.4g} (H={H:g}), M2 {m2.status.value}")


def test_criterion_10_proof_diagnostics():
    mono_ok, sup_ok, pairs, conv = True, True, 0, 0
    for lab, w in BUILTINS.items():
        mat = KoetheMatrix(sequence_from_weight(w, 1024), 8, K)
        for j in range(1, 8):
            for m in range(j + 1, 9):
                pairs += 1
                mono_ok &= monotone_difference_check(mat, j, m).holds
                sb = sup_bound_diagnostic(mat, j, m)
                if lab == "omega0":
                    sup_ok &= sb.at_boundary
                elif classify_nu(decay_exponent(mat, j, m, K)[0]) is SeriesVerdict.CONVERGENT:
                    conv += 1
                    sup_ok &= math.isfinite(sb.A_hat) and not sb.at_boundary
    record(10, mono_ok and sup_ok, f"monotone difference on {pairs} pairs: {mono_ok}; "
                                   f"{conv} convergent pairs interior, omega0 pairs at K: {sup_ok}")


def test_criterion_11_determinism(tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        r = subprocess.run([sys.executable, "-m", "weightcalc", "analyze", "--family", "gevrey:2", "--suite", "all",
                            "--format", "json", "--out", str(p)], capture_output=True)
        assert r.returncode == 0, r.stderr
        outs.append(p.read_bytes())
    record(11, outs[0] == outs[1] and len(outs[0]) > 0, f"two runs, {len(outs[0])} bytes each, identical")
