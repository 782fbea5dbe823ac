import math

import pytest

from ergokit.bd_criteria import (
    LATTICE_EDGES,
    NASH_CAVEAT,
    classify,
    discrete_spectrum,
    ergodicity,
    exponential_ergodicity,
    log_sobolev,
    mean_hitting_time,
    nash,
    recurrence,
    strong_ergodicity,
    strong_quantity_tail_form,
    uniqueness,
    verify_test_sequence,
)
from ergokit.bd_spectral import delta_verdict
from ergokit.ladder import MuLadder, Outcome
from corpus import chain, gamma_chain

MM1 = chain(1, "1", "2", "mm1")
CONST = chain(1, "1", "1", "const")
G2 = gamma_chain(2)
G3 = gamma_chain(3)


def out(v):
    return v.outcome


def test_uniqueness_examples():
    assert uniqueness(G2).holds
    assert uniqueness(chain(1, "exp(n)", "1", "explosive")).fails
    assert uniqueness(CONST).holds


def test_recurrence_examples():
    assert recurrence(G2).holds
    assert recurrence(chain(1, "2", "1", "drift-out")).fails
    assert recurrence(MM1).holds


def test_ergodicity_examples():
    v = ergodicity(G2)
    assert v.holds
    assert v.quantity == pytest.approx(1 + math.pi ** 2 / 6, rel=1e-8)
    assert ergodicity(CONST).fails
    v = ergodicity(MM1)
    assert v.holds and v.quantity == pytest.approx(2.0, abs=1e-12)


def test_exponential_ergodicity_gamma_thresholds():
    # exponential ergodicity exactly from gamma = 2 upwards
    assert exponential_ergodicity(G2).holds
    assert exponential_ergodicity(gamma_chain(1)).fails
    assert exponential_ergodicity(G3).holds
    assert exponential_ergodicity(gamma_chain(1.5)).fails


def test_exponential_quantity_is_delta_exactly():
    lad = MuLadder(G2)
    v = exponential_ergodicity(lad)
    d = delta_verdict(lad)
    assert v.quantity == d.quantity  # same code path, bit-identical


def test_discrete_spectrum_examples():
    assert discrete_spectrum(G2).fails
    assert discrete_spectrum(G3).holds
    assert discrete_spectrum(chain(1, "exp(n)", "exp(n)", "exp-both")).holds


def test_log_sobolev_examples():
    assert log_sobolev(G2).fails
    assert log_sobolev(G3).holds
    # geometric tails do NOT beat the linear log factor: the product
    # 2(n-1)log(2)(1 - 2^-n) grows, so the criterion fails for this chain
    assert log_sobolev(MM1).fails


def test_strong_ergodicity_examples():
    assert strong_ergodicity(G2).fails
    v = strong_ergodicity(G3)
    assert v.holds
    # S(gamma=3) = sum_n n^-3 * n = pi^2/6 in closed form
    assert v.quantity == pytest.approx(math.pi ** 2 / 6, rel=1e-4)
    # linear mean hitting times: the M/M/1 queue is not uniformly ergodic
    assert strong_ergodicity(MM1).fails


def test_strong_quantity_matches_tail_form():
    lad = MuLadder(G3)
    direct = strong_ergodicity(lad)
    alt = strong_quantity_tail_form(lad)
    assert direct.holds and alt.holds
    assert direct.quantity == pytest.approx(alt.quantity, rel=1e-8)


def test_nash_examples():
    assert nash(G3, nu=10.0).holds
    assert nash(G2, nu=4.0).fails
    with pytest.raises(ValueError):
        nash(G2, nu=2.0)
    assert NASH_CAVEAT in nash(G3, nu=10.0).flags


def test_mean_hitting_time_examples():
    assert mean_hitting_time(MM1, 1) == pytest.approx(1.0, abs=1e-12)
    assert mean_hitting_time(CONST, 1) == math.inf
    assert mean_hitting_time(G2, 1) == pytest.approx(math.pi ** 2 / 6, rel=1e-8)


def test_mean_hitting_time_nondecreasing():
    lad = MuLadder(MM1)
    values = [mean_hitting_time(lad, i) for i in range(1, 30)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_verify_hitting_time_sequence_is_equality_solution():
    lad = MuLadder(MM1)
    ys = [0.0] + [mean_hitting_time(lad, i) for i in range(1, 1003)]
    v = verify_test_sequence(MM1, ys, lam=0.0, n=1000)
    assert v.holds
    assert abs(v.quantity) <= 1e-9


def test_verify_zero_sequence_fails():
    v = verify_test_sequence(MM1, lambda i: 0.0, lam=0.0, n=50)
    assert v.fails
    assert "i=1" in v.detail or "i=0" not in v.detail


def test_verify_linear_sequence_fails_with_rate():
    v = verify_test_sequence(gamma_chain(1), lambda i: float(i), lam=0.5, n=100)
    assert v.fails


def test_verify_side_condition_rejects_large_lambda():
    with pytest.raises(ValueError, match="lambda"):
        verify_test_sequence(MM1, lambda i: float(i), lam=1.5, n=50)


def test_verify_rejects_negative_y():
    with pytest.raises(ValueError):
        verify_test_sequence(MM1, lambda i: -1.0, n=10)


def test_classify_gamma2():
    rep = classify(G2)
    got = {k: out(v) for k, v in rep.rows.items()}
    assert got == {
        "uniqueness": Outcome.HOLDS,
        "recurrence": Outcome.HOLDS,
        "ergodicity": Outcome.HOLDS,
        "exponential ergodicity": Outcome.HOLDS,
        "discrete spectrum": Outcome.FAILS,
        "LogS": Outcome.FAILS,
        "strong ergodicity": Outcome.FAILS,
    }
    assert rep.consistent


def test_classify_gamma3_strong_holds():
    rep = classify(G3)
    assert rep.rows["exponential ergodicity"].holds
    assert rep.rows["strong ergodicity"].holds


def test_classify_gamma_half():
    rep = classify(gamma_chain(0.5))
    assert rep.rows["uniqueness"].holds
    assert rep.rows["recurrence"].holds
    assert rep.rows["ergodicity"].fails
    assert rep.rows["exponential ergodicity"].fails
    assert rep.rows["strong ergodicity"].fails


def test_classify_closure_upgrades_inconclusive():
    # at gamma = 2.5 the discrete-spectrum probe alone is inconclusive but
    # LogS holds, so the lattice closure settles it
    rep = classify(gamma_chain(2.5))
    assert rep.rows["discrete spectrum"].holds
    assert rep.lattice_closure_applied
    assert "closure" in rep.rows["discrete spectrum"].detail


def test_classify_respects_lattice_order():
    ranks = {"uniqueness": 0, "recurrence": 1, "ergodicity": 2,
             "exponential ergodicity": 3, "discrete spectrum": 4, "LogS": 5,
             "strong ergodicity": 4.5, "Nash": 6}
    for gamma in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0):
        rep = classify(gamma_chain(gamma), nu=4.0)
        assert rep.consistent, gamma
        for weaker, stronger in LATTICE_EDGES:
            if weaker in rep.rows and stronger in rep.rows:
                assert not (rep.rows[stronger].holds and rep.rows[weaker].fails), \
                    (gamma, weaker, stronger, ranks)
