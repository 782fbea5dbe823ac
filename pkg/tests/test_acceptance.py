"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
PASS lines inline).  Tolerances are pinned here and nowhere else.
"""

import math
import random
import time

import numpy as np
import pytest

from ergokit.bd_criteria import LATTICE_EDGES, classify, mean_hitting_time, verify_test_sequence
from ergokit.bd_spectral import (
    delta_bd,
    gap_bounds_bd,
    representative_w,
    truncated_gap_oracle,
    variational_lower_bd,
)
from ergokit.diffusion import (
    DIFF_LATTICE_EDGES,
    criteria_diff,
    delta_diff,
    fd_gap_oracle,
    kit_for,
    representative_f,
    variational_lower_diff,
)
from ergokit.eigensolver import TridiagonalMatrix, eigenvalues
from ergokit.ladder import MuLadder
from corpus import (
    LATTICE_EXTRAS,
    ORACLE_CHAINS,
    ORACLE_DIFFUSIONS,
    chain,
    diff,
    gamma_chain,
    random_chains,
)

MM1 = chain(1, "1", "2", "mm1")
MM1_GAP = (math.sqrt(2.0) - 1.0) ** 2


def _report(name: str, ok: bool, detail: str = ""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _auto_cutoff(model) -> float:
    kit = kit_for(model)
    tails = kit.log_mtail_knots() - math.log(kit.mass_verdict().quantity)
    ok = tails < math.log(1e-9)
    return float(kit.knots[int(np.argmax(ok))])


def test_criterion_1_gamma_thresholds():
    """Exponential ergodicity iff gamma >= 2; strong ergodicity iff gamma > 2."""
    t0 = time.time()
    expected_exp = {0.5: False, 1.0: False, 1.5: False, 2.0: True, 2.5: True, 3.0: True}
    expected_strong = {1.0: False, 2.0: False, 2.5: True, 3.0: True}
    failures = []
    for gamma, want in expected_exp.items():
        rep = classify(gamma_chain(gamma))
        v = rep.rows["exponential ergodicity"]
        if v.inconclusive or v.holds != want:
            failures.append(f"exp({gamma}) = {v.outcome.value}, want "
                            f"{'Holds' if want else 'Fails'}")
    for gamma, want in expected_strong.items():
        rep = classify(gamma_chain(gamma))
        v = rep.rows["strong ergodicity"]
        if v.inconclusive or v.holds != want:
            failures.append(f"strong({gamma}) = {v.outcome.value}, want "
                            f"{'Holds' if want else 'Fails'}")
    elapsed = time.time() - t0
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.1f}s >= 10s")
    _report("1 (gamma thresholds)", not failures,
            f"{len(expected_exp) + len(expected_strong)} verdicts in {elapsed:.2f}s"
            + ("; " + "; ".join(failures) if failures else ""))


def test_criterion_2_mm1_gap_bracket():
    """Truncation oracle hits (sqrt2 - 1)^2 within 1% and sits in the bracket."""
    t0 = time.time()
    res = truncated_gap_oracle(MM1, 4096)
    delta = delta_bd(MM1)
    lower, upper = 1.0 / (4.0 * delta), 1.0 / delta
    elapsed = time.time() - t0
    ok = (abs(res.value - MM1_GAP) <= 0.01 * MM1_GAP
          and lower <= res.value <= upper and elapsed < 5.0)
    _report("2 (M/M/1 gap bracket)", ok,
            f"oracle={res.value:.6f} target={MM1_GAP:.6f} "
            f"bracket=[{lower:.6f}, {upper:.6f}] in {elapsed:.2f}s")


def test_criterion_3_drifted_brownian_motion():
    """delta = 1/c^2 to 0.5%; the oracle gap c^2/4 = 1 to 2%, at the
    lower endpoint of the bracket (the factor-4-sharp side)."""
    model = diff("1", "-2", "bm2-acceptance")
    d = delta_diff(model)
    res = fd_gap_oracle(model, cutoff=30.0, n=2048, which="l1")
    lower = 1.0 / (4.0 * d)
    ok_delta = abs(d - 0.25) <= 0.005 * 0.25
    ok_gap = abs(res.value - 1.0) <= 0.02
    ok_sharp = abs(res.value - lower) <= 0.02 * lower
    _report("3 (drifted BM factor-4 sharpness)", ok_delta and ok_gap and ok_sharp,
            f"delta={d:.6f} oracle={res.value:.4f} lower={lower:.4f}")


def test_criterion_4_ornstein_uhlenbeck_dirichlet():
    """fd lambda_0 = 1 to 2%, inside the delta bracket; the variational
    bound with the exact eigenfunction f(x) = x gives 1 to 1%."""
    model = diff("1", "-x", "ou-acceptance")
    res = fd_gap_oracle(model, cutoff=8.0, n=2048, which="l0")
    d = delta_diff(model)
    lower, upper = 1.0 / (4.0 * d), 1.0 / d
    bound = variational_lower_diff(model, lambda x: x)
    ok = (abs(res.value - 1.0) <= 0.02 and lower <= res.value <= upper
          and abs(bound.value - 1.0) <= 0.01)
    _report("4 (OU Dirichlet eigenvalue)", ok,
            f"oracle={res.value:.4f} bracket=[{lower:.4f}, {upper:.4f}] "
            f"variational={bound.value:.4f}")


@pytest.fixture(scope="module")
def chain_oracles():
    out = {}
    for model in ORACLE_CHAINS:
        ladder = MuLadder(model)
        out[model.name] = (model, ladder, truncated_gap_oracle(model, 2 ** 13,
                                                               ladder=ladder).value)
    return out


@pytest.fixture(scope="module")
def diffusion_oracles():
    out = {}
    for model in ORACLE_DIFFUSIONS:
        res = fd_gap_oracle(model, cutoff=_auto_cutoff(model), n=2048, which="l1")
        out[model.name] = (model, res.value)
    return out


def test_criterion_5_variational_soundness(chain_oracles, diffusion_oracles):
    """Every admissible test sequence/function stays below oracle + 3%."""
    checked = 0
    failures = []
    for name, (model, ladder, gap) in chain_oracles.items():
        for label, w in (("representative", representative_w(model, ladder=ladder)),
                         ("linear", np.arange(1024.0))):
            bound = variational_lower_bd(model, w, ladder=ladder).value
            checked += 1
            if bound > gap * 1.03:
                failures.append(f"{name}/{label}: {bound:.4f} > {gap:.4f}")
    for name, (model, gap) in diffusion_oracles.items():
        for label, f in (("representative", representative_f(model)),
                         ("linear", lambda x: x)):
            bound = variational_lower_diff(model, f).value
            checked += 1
            if bound > gap * 1.03:
                failures.append(f"{name}/{label}: {bound:.4f} > {gap:.4f}")
    _report("5 (variational soundness)", not failures,
            f"{checked} bounds over {len(chain_oracles) + len(diffusion_oracles)} models"
            + ("; " + "; ".join(failures) if failures else ""))


def test_criterion_6_bracketing(chain_oracles, diffusion_oracles):
    """Oracle gap inside [(4 delta)^-1 * 0.95, delta^-1 * 1.05] whenever
    delta is finite."""
    checked = 0
    failures = []
    for name, (model, ladder, gap) in chain_oracles.items():
        d = delta_bd(ladder)
        if d is None or math.isinf(d):
            continue
        checked += 1
        if not (0.95 / (4.0 * d) <= gap <= 1.05 / d):
            failures.append(f"{name}: gap={gap:.4f} outside delta={d:.4f} bracket")
    for name, (model, gap) in diffusion_oracles.items():
        d = delta_diff(model)
        if d is None or math.isinf(d):
            continue
        checked += 1
        if not (0.95 / (4.0 * d) <= gap <= 1.05 / d):
            failures.append(f"{name}: gap={gap:.4f} outside delta={d:.4f} bracket")
    _report("6 (two-sided bracketing)", bool(checked) and not failures,
            f"{checked} finite-delta models"
            + ("; " + "; ".join(failures) if failures else ""))


def test_criterion_7_lattice_consistency():
    """No implication-order violation and no contradiction anywhere."""
    violations = []
    contradictions = 0
    models = 0
    for model in ORACLE_CHAINS + [m for m in LATTICE_EXTRAS if m.kind == "birth-death"] \
            + random_chains(100):
        rep = classify(model, nu=4.0)
        models += 1
        contradictions += len(rep.contradictions)
        for weaker, stronger in LATTICE_EDGES:
            if weaker in rep.rows and stronger in rep.rows:
                if rep.rows[stronger].holds and rep.rows[weaker].fails:
                    violations.append(f"{model.name}: {stronger} > {weaker}")
    for model in ORACLE_DIFFUSIONS + [m for m in LATTICE_EXTRAS if m.kind == "diffusion"]:
        rep = criteria_diff(model, nu=4.0)
        models += 1
        contradictions += len(rep.contradictions)
        for weaker, stronger in DIFF_LATTICE_EDGES:
            if weaker in rep.rows and stronger in rep.rows:
                if rep.rows[stronger].holds and rep.rows[weaker].fails:
                    violations.append(f"{model.name}: {stronger} > {weaker}")
    ok = not violations and contradictions == 0
    _report("7 (lattice consistency)", ok,
            f"{models} models, {contradictions} contradictions"
            + ("; " + "; ".join(violations[:5]) if violations else ""))


def test_criterion_8_eigensolver_suite():
    """Trace identity to 1e-8 relative and closed-form 2x2/3x3 eigenvalues
    across 1000 random tridiagonal instances."""
    rng = random.Random(31415)
    worst_trace = 0.0
    worst_eig = 0.0
    for i in range(1000):
        if i % 2 == 0:
            d = [rng.uniform(-5, 5), rng.uniform(-5, 5)]
            e = [rng.uniform(-3, 3)]
            mean = (d[0] + d[1]) / 2
            disc = math.hypot((d[0] - d[1]) / 2, e[0])
            expected = [mean - disc, mean + disc]
        else:
            d = [rng.uniform(-5, 5) for _ in range(3)]
            e = [rng.uniform(-3, 3) for _ in range(2)]
            expected = sorted(np.roots([
                1.0,
                -(d[0] + d[1] + d[2]),
                d[0] * d[1] + d[0] * d[2] + d[1] * d[2] - e[0] ** 2 - e[1] ** 2,
                -(d[0] * d[1] * d[2] - d[2] * e[0] ** 2 - d[0] * e[1] ** 2),
            ]).real)
        t = TridiagonalMatrix(np.array(d), np.array(e))
        got = eigenvalues(t, range(len(d)), tol=1e-13)
        scale = max(1.0, float(np.sum(np.abs(t.diag))))
        worst_trace = max(worst_trace, abs(sum(got) - float(np.sum(t.diag))) / scale)
        worst_eig = max(worst_eig, max(abs(a - b) for a, b in zip(got, expected)))
    ok = worst_trace <= 1e-8 and worst_eig <= 1e-8
    _report("8 (eigensolver unit suite)", ok,
            f"worst trace residual {worst_trace:.2e}, worst eigenvalue error {worst_eig:.2e}")


def test_criterion_9_hitting_time_cross_check():
    """E_1 sigma_0 = 1 exactly for the M/M/1 chain, and the hitting-time
    sequence satisfies the ergodicity system with equality to 1e-9 up to
    N = 1000."""
    ladder = MuLadder(MM1)
    e1 = mean_hitting_time(ladder, 1)
    ys = [0.0] + [mean_hitting_time(ladder, i) for i in range(1, 1003)]
    verdict = verify_test_sequence(MM1, ys, lam=0.0, n=1000)
    worst = abs(verdict.quantity)
    ok = abs(e1 - 1.0) <= 1e-12 and verdict.holds and worst <= 1e-9
    _report("9 (hitting-time cross-check)", ok,
            f"E_1 sigma_0 = {e1!r}, worst residual {worst:.2e} up to N=1000")
