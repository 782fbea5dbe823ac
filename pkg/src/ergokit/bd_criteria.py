"""Ergodicity classification for birth-death chains.

Every property of the chain is characterized by the convergence or
divergence of an explicit series or supremum built from the mu-ladder
(r_j below is 1/(mu_j b_j), R_n = sum_{j<=n} r_j):

    uniqueness           sum_n r_n * mu[0, n]            = infinity   (*)
    recurrence           sum_n r_n                       = infinity
    ergodicity           (*) and mu[0, inf) < infinity
    exponential erg.     (*) and sup_n mu[n, inf) R_{n-1} < infinity
    discrete spectrum    (*) and lim_n sup_{k>n} mu[k, inf) (R_{k-1}-R_{n-1}) = 0
    LogS inequality      (*) and sup_n mu[n, inf) log(1/mu[n, inf)) R_{n-1} < inf
    strong ergodicity    (*) and S = sum_{n>=1} mu_n R_{n-1} < infinity
    Nash inequality      (*) and sup_n mu[n, inf)^((nu-2)/nu) R_{n-1} < inf

The properties form an implication lattice: each line above implies the
ones before it, strong ergodicity sits between exponential ergodicity and
Nash but is incomparable with LogS.  ``classify`` evaluates every row,
then closes the report under the lattice: a Holds propagates down to
weaker rows, a Fails propagates up to stronger rows, and a decided
pair violating the order is reported as an internal contradiction (it
signals a probe bug) instead of being closed over.

The Nash criterion is sufficient but not exactly necessary; its verdict
always carries a caveat flag.

``verify_test_sequence`` checks the classical test-sequence systems: a
nonnegative finite (y_i) with

    b_i (y_{i+1} - y_i) - a_i (y_i - y_{i-1})  <=  -lambda y_i - 1

for all i outside a finite set H certifies ergodicity (lambda = 0) or
exponential ergodicity (0 < lambda < q_i).  The check is necessarily a
bounded-horizon falsifier: Holds means "verified up to N", never a proof
for all i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bd_spectral
from .ladder import (
    Budget,
    MuLadder,
    Outcome,
    REASON_BUDGET,
    Verdict,
    series_verdict,
    sup_verdict,
)
from .models import BirthDeathModel

__all__ = [
    "ClassificationReport",
    "uniqueness",
    "recurrence",
    "ergodicity",
    "exponential_ergodicity",
    "discrete_spectrum",
    "log_sobolev",
    "strong_ergodicity",
    "nash",
    "mean_hitting_time",
    "verify_test_sequence",
    "classify",
    "LATTICE_EDGES",
    "NASH_CAVEAT",
]

NASH_CAVEAT = "sufficient-side criterion only; a small gap from being necessary"
CONJECTURE_NONE: tuple[str, ...] = ()

# (weaker, stronger) pairs; LogS and strong ergodicity are incomparable
LATTICE_EDGES = (
    ("uniqueness", "recurrence"),
    ("recurrence", "ergodicity"),
    ("ergodicity", "exponential ergodicity"),
    ("exponential ergodicity", "discrete spectrum"),
    ("discrete spectrum", "LogS"),
    ("LogS", "Nash"),
    ("exponential ergodicity", "strong ergodicity"),
    ("strong ergodicity", "Nash"),
)


def _as_ladder(model_or_ladder, budget: Budget | None) -> MuLadder:
    if isinstance(model_or_ladder, MuLadder):
        return model_or_ladder
    return MuLadder(model_or_ladder, budget)


def _conjunction(*verdicts: Verdict, quantity: float | None = None,
                 probes_from: Verdict | None = None) -> Verdict:
    """All-of combination: any Fails fails, all Holds holds, else Inconclusive."""
    lead = probes_from or verdicts[-1]
    for v in verdicts:
        if v.fails:
            return Verdict(Outcome.FAILS, v.reason, v.probes, detail=v.detail)
    if all(v.holds for v in verdicts):
        return Verdict(Outcome.HOLDS, lead.reason, lead.probes,
                       quantity=quantity if quantity is not None else lead.quantity,
                       detail=lead.detail)
    lagging = next(v for v in verdicts if v.inconclusive)
    return Verdict(Outcome.INCONCLUSIVE, lagging.reason, lagging.probes, detail=lagging.detail)


def uniqueness(model_or_ladder, budget: Budget | None = None) -> Verdict:
    """Holds iff sum_n mu[0,n]/(mu_n b_n) diverges (condition (*))."""
    ladder = _as_ladder(model_or_ladder, budget)
    h = ladder.grown_to(ladder.budget.max_horizon)
    logb, _, logmu, logpre, _ = ladder.arrays(h)

    def term(idx):
        with np.errstate(over="ignore"):
            return np.exp(logpre[idx] - logmu[idx] - logb[idx])

    return series_verdict(term, ladder.budget, start=0, limit=h).invert()


def recurrence(model_or_ladder, budget: Budget | None = None) -> Verdict:
    """Holds iff sum_n 1/(mu_n b_n) diverges."""
    ladder = _as_ladder(model_or_ladder, budget)
    h = ladder.grown_to(ladder.budget.max_horizon)
    logb, _, logmu, _, _ = ladder.arrays(h)

    def term(idx):
        with np.errstate(over="ignore"):
            return np.exp(-logmu[idx] - logb[idx])

    return series_verdict(term, ladder.budget, start=0, limit=h).invert()


def ergodicity(model_or_ladder, budget: Budget | None = None,
               star: Verdict | None = None) -> Verdict:
    """(*) together with finite total mass; quantity is mu[0, inf)."""
    ladder = _as_ladder(model_or_ladder, budget)
    star = star or uniqueness(ladder)
    mass = ladder.total_mass()
    return _conjunction(star, mass, quantity=mass.quantity, probes_from=mass)


def exponential_ergodicity(model_or_ladder, budget: Budget | None = None,
                           star: Verdict | None = None) -> Verdict:
    """(*) together with a finite delta; quantity is delta itself."""
    ladder = _as_ladder(model_or_ladder, budget)
    star = star or uniqueness(ladder)
    dv = bd_spectral.delta_verdict(ladder)
    return _conjunction(star, dv, quantity=dv.quantity, probes_from=dv)


def discrete_spectrum(model_or_ladder, budget: Budget | None = None,
                      star: Verdict | None = None) -> Verdict:
    """Holds iff d_n = sup_{k>n} mu[k,inf) (R_{k-1} - R_{n-1}) tends to 0.

    d_n is evaluated at doubling n; it must fall below 1e-6, or decrease
    with a stable positive decay exponent, to Hold; stabilizing above
    1e-3 Fails; anything else is Inconclusive.
    """
    ladder = _as_ladder(model_or_ladder, budget)
    star = star or uniqueness(ladder)
    mass = ladder.total_mass()
    if mass.fails:
        fail = Verdict(Outcome.FAILS, mass.reason, mass.probes,
                       detail="total mass diverges, tails are infinite")
        return _conjunction(star, fail)
    if mass.inconclusive:
        return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, mass.probes,
                       detail="total mass undecided")
    h = ladder.grown_to(ladder.budget.max_horizon)
    _, _, _, _, log_r_sum = ladder.arrays(h)
    logtails = ladder.log_tails_array(h - 1)

    ks = np.arange(1, h)
    probes: list[tuple[float, float]] = []
    ds: list[float] = []
    n = min(64 * ladder.budget.multiplier, max(h // 16, 2))
    while n <= h // 16:
        sub = ks[ks > n]
        with np.errstate(invalid="ignore"):
            gap_log = _vec_log_sub(log_r_sum[sub - 1], log_r_sum[n - 1])
        d = float(np.max(logtails[sub] + gap_log))
        ds.append(d)
        probes.append((float(n), math.exp(d) if d < 700 else math.inf))
        n *= 2
    if not probes:
        return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, (),
                       detail="no probe range for the doubling-n schedule")
    lin = [p[1] for p in probes]
    decreasing = all(lin[i] <= lin[i - 1] for i in range(1, len(lin)))
    verdict = None
    if decreasing and lin[-1] < 1e-6:
        verdict = Verdict(Outcome.HOLDS, "converged", tuple(probes), quantity=lin[-1])
    elif decreasing and len(lin) >= 4 and lin[-1] > 0:
        p_hats = [math.log2(lin[i - 1] / lin[i]) for i in range(len(lin) - 2, len(lin))]
        if all(p >= 0.8 for p in p_hats):
            verdict = Verdict(Outcome.HOLDS, "converged", tuple(probes), quantity=lin[-1],
                              detail=f"d_n decays with exponent {p_hats[-1]:.2f}")
    if verdict is None and len(lin) >= 3:
        tail3 = lin[-3:]
        if all(v > 1e-3 for v in tail3) and max(tail3) <= 1.1 * min(tail3):
            verdict = Verdict(Outcome.FAILS, "diverged-term-bound", tuple(probes),
                              detail=f"d_n stabilizes at {lin[-1]:.3g}")
    if verdict is None:
        verdict = Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, tuple(probes), quantity=lin[-1])
    return _conjunction(star, verdict, quantity=verdict.quantity, probes_from=verdict)


def _vec_log_sub(a: np.ndarray, b) -> np.ndarray:
    """Elementwise log(e^a - e^b); -inf where a <= b."""
    a = np.asarray(a, dtype=float)
    b_arr = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    out = np.full(a.shape, -math.inf)
    mask = a > b_arr
    with np.errstate(divide="ignore", invalid="ignore"):
        out[mask] = a[mask] + np.log1p(-np.exp(b_arr[mask] - a[mask]))
    return out


def log_sobolev(model_or_ladder, budget: Budget | None = None,
                star: Verdict | None = None) -> Verdict:
    """Criterion for the logarithmic Sobolev inequality:
    sup_n mu[n,inf) log(1/mu[n,inf)) R_{n-1} < infinity.

    Indices with mu[n, inf) >= 1 are skipped (finitely many when the
    mass is finite).
    """
    ladder = _as_ladder(model_or_ladder, budget)
    star = star or uniqueness(ladder)
    mass = ladder.total_mass()
    if mass.fails:
        return _conjunction(star, Verdict(Outcome.FAILS, mass.reason, mass.probes,
                                          detail="no stationary distribution"))
    if mass.inconclusive:
        return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, mass.probes,
                       detail="total mass undecided")
    h = ladder.grown_to(ladder.budget.max_horizon)
    _, _, _, _, log_r_sum = ladder.arrays(h)
    logtails = ladder.log_tails_array(h - 1)

    def logvalue(idx):
        lt = logtails[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(lt < 0, lt + np.log(np.maximum(-lt, 1e-300)) + log_r_sum[idx - 1],
                           -math.inf)
        return out

    v = sup_verdict(logvalue, ladder.budget, start=1, log_domain=True, limit=h)
    return _conjunction(star, v, quantity=v.quantity, probes_from=v)


def strong_ergodicity(model_or_ladder, budget: Budget | None = None,
                      star: Verdict | None = None) -> Verdict:
    """Holds iff S = sum_{n>=1} mu_n R_{n-1} converges; quantity is S."""
    ladder = _as_ladder(model_or_ladder, budget)
    star = star or uniqueness(ladder)
    h = ladder.grown_to(ladder.budget.max_horizon)
    _, _, logmu, _, log_r_sum = ladder.arrays(h)

    def term(idx):
        with np.errstate(over="ignore"):
            return np.exp(logmu[idx] + log_r_sum[idx - 1])

    v = series_verdict(term, ladder.budget, start=1, limit=h)
    return _conjunction(star, v, quantity=v.quantity, probes_from=v)


def strong_quantity_tail_form(model_or_ladder, budget: Budget | None = None) -> Verdict:
    """S in its equivalent form sum_{n>=0} mu[n+1, inf)/(mu_n b_n)."""
    ladder = _as_ladder(model_or_ladder, budget)
    mass = ladder.total_mass()
    if not mass.holds:
        return mass
    h = ladder.grown_to(ladder.budget.max_horizon)
    logb, _, logmu, _, _ = ladder.arrays(h)
    logtails = ladder.log_tails_array(h - 1)

    def term(idx):
        with np.errstate(over="ignore"):
            return np.exp(logtails[idx + 1] - logmu[idx] - logb[idx])

    saved = ladder.budget
    shrunk = Budget(saved.base, saved.doublings - 1, saved.multiplier)
    return series_verdict(term, shrunk, start=0, limit=h // 2)


def nash(model_or_ladder, nu: float, budget: Budget | None = None,
         star: Verdict | None = None) -> Verdict:
    """Nash-inequality criterion with exponent (nu-2)/nu; needs nu > 2.

    The verdict carries a caveat flag: the criterion is sufficient but
    not exactly necessary.
    """
    if not nu > 2:
        raise ValueError("nash criterion needs nu > 2")
    ladder = _as_ladder(model_or_ladder, budget)
    star = star or uniqueness(ladder)
    mass = ladder.total_mass()
    if mass.fails:
        return _conjunction(star, Verdict(Outcome.FAILS, mass.reason, mass.probes,
                                          detail="no stationary distribution")).with_flags(NASH_CAVEAT)
    if mass.inconclusive:
        return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, mass.probes,
                       detail="total mass undecided", flags=(NASH_CAVEAT,))
    h = ladder.grown_to(ladder.budget.max_horizon)
    _, _, _, _, log_r_sum = ladder.arrays(h)
    logtails = ladder.log_tails_array(h - 1)
    expo = (nu - 2.0) / nu

    def logvalue(idx):
        return expo * logtails[idx] + log_r_sum[idx - 1]

    v = sup_verdict(logvalue, ladder.budget, start=1, log_domain=True, limit=h)
    return _conjunction(star, v, quantity=v.quantity, probes_from=v).with_flags(NASH_CAVEAT)


# ---------------------------------------------------------------------------
# Hitting times and the test-sequence verifier
# ---------------------------------------------------------------------------


def mean_hitting_time(model_or_ladder, i: int, budget: Budget | None = None) -> float | None:
    """E_i sigma_0 = sum_{k=1}^{i} mu[k, inf)/(mu_k a_k).

    Returns ``math.inf`` when the tail masses diverge and None when they
    are undecided.
    """
    if i < 1:
        raise ValueError("need i >= 1")
    ladder = _as_ladder(model_or_ladder, budget)
    mass = ladder.total_mass()
    if mass.fails:
        return math.inf
    if mass.inconclusive:
        return None
    _, loga, logmu, _, _ = ladder.arrays(i)
    logtails = ladder.log_tails_array(i)
    terms = np.exp(logtails[1:i + 1] - logmu[1:i + 1] - loga[1:i + 1])
    return float(np.sum(terms))


def verify_test_sequence(model: BirthDeathModel, y, lam: float = 0.0,
                         h_set: frozenset[int] | set[int] = frozenset({0}),
                         n: int = 1000) -> Verdict:
    """Check the test-sequence inequality system up to horizon ``n``.

    ``y`` maps indices to nonnegative finite values (callable or
    sequence).  With ``lam`` = 0 this is the ergodicity system, with
    ``lam`` > 0 the exponential-ergodicity system (requiring lam < q_i
    for every probed i).  Holds means verified up to the horizon, with
    the worst residual reported; it is never a proof for all i.
    """
    h_set = frozenset(h_set)
    if not h_set:
        raise ValueError("H must be a nonempty finite set")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if callable(y):
        ys = np.array([float(y(k)) for k in range(n + 2)])
    else:
        ys = np.asarray(y, dtype=float)
        if len(ys) < n + 2:
            raise ValueError(f"need y on 0..{n + 1}, got length {len(ys)}")
    if not np.all(np.isfinite(ys)) or np.any(ys < 0):
        bad = int(np.argmax(~np.isfinite(ys) | (ys < 0)))
        raise ValueError(f"y must be nonnegative and finite; y_{bad} = {ys[bad]}")

    idx = np.arange(1, n + 1)
    b = model.birth_rates(np.arange(0, n + 1))
    a = np.concatenate([[math.nan], model.death_rates(idx)])
    if lam > 0:
        q = np.concatenate([[b[0]], b[1:] + a[1:]])
        if np.any(lam >= q):
            bad = int(np.argmax(lam >= q))
            raise ValueError(
                f"lambda = {lam} is not below the total jump rate q_{bad} = {q[bad]}; "
                "the exponential-ergodicity system requires lambda < q_i for all i")

    flux = np.empty(n + 1)
    flux[0] = b[0] * (ys[1] - ys[0])
    flux[1:] = b[1:] * (ys[2:n + 2] - ys[1:n + 1]) - a[1:] * (ys[1:n + 1] - ys[0:n])
    residual = flux + lam * ys[:n + 1] + 1.0

    check = np.array([i for i in range(n + 1) if i not in h_set], dtype=int)
    tol = 1e-9 * np.maximum(1.0, np.abs(ys[check]))
    violations = residual[check] > tol
    boundary = sum(b[i] * ys[i + 1] + (a[i] * ys[i - 1] if i >= 1 else 0.0) for i in h_set
                   if i <= n)
    worst = float(np.max(residual[check])) if len(check) else -math.inf
    probes = tuple((float(i), float(residual[i])) for i in check[np.argsort(residual[check])[-3:]])
    if violations.any():
        first = int(check[np.argmax(violations)])
        return Verdict(Outcome.FAILS, "checked", probes, quantity=worst,
                       detail=f"inequality violated first at i={first} "
                              f"(residual {residual[first]:.3g})")
    return Verdict(Outcome.HOLDS, "checked", probes, quantity=worst,
                   detail=f"verified up to N={n} (worst residual {worst:.3g}); "
                          f"H-boundary sum {boundary:.6g} finite")


# ---------------------------------------------------------------------------
# Full classification with lattice closure
# ---------------------------------------------------------------------------


ROW_ORDER = ("uniqueness", "recurrence", "ergodicity", "exponential ergodicity",
             "discrete spectrum", "LogS", "strong ergodicity", "Nash")


@dataclass
class ClassificationReport:
    """Per-property verdicts plus lattice-closure bookkeeping."""

    model_name: str
    rows: dict[str, Verdict]
    nu: float | None = None
    lattice_closure_applied: bool = False
    contradictions: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def order(self) -> list[str]:
        return [r for r in ROW_ORDER if r in self.rows]

    @property
    def consistent(self) -> bool:
        return not self.contradictions


def _closure_over(rows: dict[str, Verdict], edges) -> tuple[dict[str, Verdict], list[str], bool]:
    """Propagate Holds down and Fails up the lattice; detect contradictions."""
    contradictions = []
    for weaker, stronger in edges:
        if weaker in rows and stronger in rows:
            if rows[stronger].holds and rows[weaker].fails:
                contradictions.append(
                    f"{stronger} Holds while {weaker} Fails; implication order violated")
    if contradictions:
        return rows, contradictions, False
    changed = True
    applied = False
    rows = dict(rows)
    while changed:
        changed = False
        for weaker, stronger in edges:
            if weaker not in rows or stronger not in rows:
                continue
            if rows[stronger].holds and rows[weaker].inconclusive:
                rows[weaker] = rows[weaker].with_outcome(
                    Outcome.HOLDS, detail=f"via implication closure from {stronger}")
                changed = applied = True
            if rows[weaker].fails and rows[stronger].inconclusive:
                rows[stronger] = rows[stronger].with_outcome(
                    Outcome.FAILS, detail=f"via implication closure from {weaker}")
                changed = applied = True
    return rows, [], applied


def classify(model: BirthDeathModel, nu: float | None = None,
             budget: Budget | None = None) -> ClassificationReport:
    """Evaluate every Table row and close the report under the lattice."""
    ladder = MuLadder(model, budget)
    star = uniqueness(ladder)
    rows: dict[str, Verdict] = {
        "uniqueness": star,
        "recurrence": recurrence(ladder),
        "ergodicity": ergodicity(ladder, star=star),
        "exponential ergodicity": exponential_ergodicity(ladder, star=star),
        "discrete spectrum": discrete_spectrum(ladder, star=star),
        "LogS": log_sobolev(ladder, star=star),
        "strong ergodicity": strong_ergodicity(ladder, star=star),
    }
    if nu is not None:
        rows["Nash"] = nash(ladder, nu, star=star)
    closed, contradictions, applied = _closure_over(rows, LATTICE_EDGES)
    notes = []
    if nu is not None:
        notes.append(f"Nash row evaluated at nu={nu}")
    return ClassificationReport(model_name=model.name, rows=closed, nu=nu,
                                lattice_closure_applied=applied,
                                contradictions=contradictions, notes=notes)
