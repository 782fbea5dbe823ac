import math
import random

import numpy as np
import pytest

from ergokit.eigensolver import TridiagonalMatrix, eigenvalues, kth_eigenvalue, sturm_count


def t(diag, off):
    return TridiagonalMatrix(np.asarray(diag, float), np.asarray(off, float))


def test_two_by_two_count():
    m = t([2.0, 2.0], [-1.0])  # eigenvalues 1 and 3
    assert sturm_count(m, 2.0) == 1
    assert sturm_count(m, 0.5) == 0
    assert sturm_count(m, 10.0) == 2


def test_diagonal_count():
    m = t([1.0, 2.0, 3.0], [0.0, 0.0])
    assert sturm_count(m, 2.5) == 2


def test_count_below_spectrum():
    m = t([1.0, 2.0, 3.0], [0.4, -0.2])
    assert sturm_count(m, -1e300) == 0


def test_count_monotone_and_gershgorin():
    rng = np.random.default_rng(7)
    m = t(rng.normal(size=12), rng.normal(size=11))
    lo, hi = m.gershgorin()
    assert sturm_count(m, lo - 1e-9) == 0
    assert sturm_count(m, hi + 1e-9) == 12
    xs = np.linspace(lo, hi, 50)
    counts = [sturm_count(m, float(x)) for x in xs]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_two_by_two_eigenvalues():
    m = t([2.0, 2.0], [-1.0])
    assert kth_eigenvalue(m, 0) == pytest.approx(1.0, abs=1e-10)
    assert kth_eigenvalue(m, 1) == pytest.approx(3.0, abs=1e-10)


def test_one_by_one():
    assert kth_eigenvalue(t([5.0], []), 0) == pytest.approx(5.0, abs=1e-12)


def test_out_of_range_k():
    with pytest.raises(ValueError):
        kth_eigenvalue(t([1.0, 2.0], [0.1]), 2)
    with pytest.raises(ValueError):
        kth_eigenvalue(t([1.0], []), 0, tol=0.0)


def test_nonfinite_entries_rejected():
    with pytest.raises(ValueError):
        t([1.0, math.inf], [0.0])


def test_eigenvalues_sorted_and_bracketed():
    rng = np.random.default_rng(11)
    m = t(rng.normal(size=9) * 3, rng.normal(size=8))
    evs = eigenvalues(m, range(9), tol=1e-12)
    assert all(b >= a - 1e-9 for a, b in zip(evs, evs[1:]))
    for k, ev in enumerate(evs):
        width = 1e-10 * max(1.0, abs(ev))
        assert sturm_count(m, ev - width) <= k < sturm_count(m, ev + width)


def test_trace_identity_random_matrices():
    rng = np.random.default_rng(23)
    for _ in range(40):
        n = int(rng.integers(2, 51))
        m = t(rng.normal(size=n) * rng.uniform(0.1, 10),
              rng.normal(size=n - 1) * rng.uniform(0.1, 10))
        evs = eigenvalues(m, range(n), tol=1e-13)
        trace = float(np.sum(m.diag))
        assert sum(evs) == pytest.approx(trace, abs=1e-8 * max(1.0, float(np.sum(np.abs(m.diag)))))


def test_matches_closed_forms_bulk():
    # 2x2 and 3x3 closed forms across a thousand random instances
    rng = random.Random(99)
    for i in range(1000):
        if i % 2 == 0:
            d1, d2 = rng.uniform(-5, 5), rng.uniform(-5, 5)
            e = rng.uniform(-3, 3)
            m = t([d1, d2], [e])
            mean = (d1 + d2) / 2
            disc = math.hypot((d1 - d2) / 2, e)
            expected = [mean - disc, mean + disc]
        else:
            d = [rng.uniform(-5, 5) for _ in range(3)]
            e = [rng.uniform(-3, 3) for _ in range(2)]
            m = t(d, e)
            # characteristic cubic, solved independently
            expected = sorted(np.roots([
                1.0,
                -(d[0] + d[1] + d[2]),
                d[0] * d[1] + d[0] * d[2] + d[1] * d[2] - e[0] ** 2 - e[1] ** 2,
                -(d[0] * d[1] * d[2] - d[2] * e[0] ** 2 - d[0] * e[1] ** 2),
            ]).real)
        got = eigenvalues(m, range(m.n), tol=1e-12)
        for a, b in zip(got, expected):
            assert a == pytest.approx(b, abs=5e-9)
