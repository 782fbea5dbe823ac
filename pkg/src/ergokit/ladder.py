"""The mu-ladder and honest numeric convergence verdicts.

For a birth-death chain with birth rates b_i and death rates a_i the
reversibility weights are

    mu_0 = 1,   mu_n = (b_0 ... b_{n-1}) / (a_1 ... a_n),   n >= 1,

with partial sums mu[i, k] = sum_{i <= j <= k} mu_j.  Every classification
criterion downstream reduces to deciding whether some series converges or
some supremum is finite.  Numeric probing cannot decide convergence in
general, so every decision procedure here returns a three-valued
:class:`Verdict` (Holds / Fails / Inconclusive) together with its probe
trace; Inconclusive is a first-class outcome, never a silent guess.

Decision triggers for :func:`series_verdict`, evaluated on partial sums
S_N at doubling horizons N = N0 * 2^k (defaults N0=256, k=0..8):

* converged: relative increment (S_2N - S_N)/max(S_2N, 1e-300) < 1e-8 at
  the two final doublings;
* diverged (growth): S_2N/S_N >= 1 + 1e-3 at the last three doublings,
  with non-decaying increments (increment ratio >= 0.97), which separates
  harmonic-type divergence from slowly convergent series;
* diverged (term bound): term(N) * N stays >= 1e-3 and non-decaying
  across the last three probes, i.e. terms are bounded below in the
  scale that forces divergence;
* converged (tail extrapolation): terms decay like a stable power
  n^(-p) with p >= 1.25 across the last probes; the quantity is then the
  partial sum plus the integral tail estimate term(N) * N / (p - 1).
  This certifies polynomially convergent series (e.g. sum n^-1.5) that
  the plain increment test cannot reach at any sane budget.

Anything else is Inconclusive with reason ``budget-exhausted``.

:func:`sup_verdict` applies the analogous rules to running maxima:
finite when the running maximum is bit-identical over two consecutive
doublings with the argmax in the first half of the range, diverged on
sustained relative growth >= 1e-3 per doubling.

mu_n itself is tracked in both plain and log form; when mu_n leaves
[1e-300, 1e300] the plain accessor reports the offending index and all
internal sums switch to max-shifted exponentials.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .expr import EvalDomainError
from .models import BirthDeathModel

__all__ = [
    "Outcome",
    "Verdict",
    "Budget",
    "default_budget",
    "series_verdict",
    "sup_verdict",
    "MuLadder",
    "MuRangeError",
    "TailsUndecidedError",
]

MU_LOG_LO = math.log(1e-300)
MU_LOG_HI = math.log(1e300)
REL_FLOOR = 1e-300
CONV_REL = 1e-8
GROWTH_REL = 1e-3
TERM_BOUND_LEVEL = 1e-3
NON_DECAY_RATIO = 0.97
EXTRAP_MIN_EXPONENT = 1.25
SUP_PLATEAU_REL = 1e-4
OVERFLOW_GUARD = 1e290


class MuRangeError(OverflowError):
    """mu_n left the representable window [1e-300, 1e300]."""

    def __init__(self, index: int, log_mu: float):
        super().__init__(f"mu_{index} has log value {log_mu:.6g}, outside the plain-float window; "
                         "use the log-domain accessors")
        self.index = index


class TailsUndecidedError(RuntimeError):
    """Tail masses mu[n, inf) requested while the total mass is undecided."""


class Outcome(enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


REASON_CONVERGED = "converged"
REASON_GROWTH = "diverged-growth"
REASON_TERM_BOUND = "diverged-term-bound"
REASON_BUDGET = "budget-exhausted"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a semi-decision procedure, with its numeric evidence.

    ``outcome`` is Holds or Fails only when one of the documented numeric
    triggers fired; otherwise Inconclusive.  ``probes`` is the (horizon,
    value) trace, ``quantity`` the final numeric estimate when finite.
    """

    outcome: Outcome
    reason: str
    probes: tuple[tuple[float, float], ...] = ()
    quantity: float | None = None
    detail: str = ""
    flags: tuple[str, ...] = ()

    @property
    def holds(self) -> bool:
        return self.outcome is Outcome.HOLDS

    @property
    def fails(self) -> bool:
        return self.outcome is Outcome.FAILS

    @property
    def inconclusive(self) -> bool:
        return self.outcome is Outcome.INCONCLUSIVE

    def invert(self) -> "Verdict":
        """Swap Holds and Fails (e.g. 'series diverges' -> 'property holds')."""
        if self.outcome is Outcome.INCONCLUSIVE:
            return self
        flipped = Outcome.FAILS if self.holds else Outcome.HOLDS
        return Verdict(flipped, self.reason, self.probes, self.quantity, self.detail, self.flags)

    def with_flags(self, *flags: str) -> "Verdict":
        return Verdict(self.outcome, self.reason, self.probes, self.quantity,
                       self.detail, self.flags + tuple(flags))

    def with_outcome(self, outcome: Outcome, detail: str | None = None) -> "Verdict":
        return Verdict(outcome, self.reason, self.probes, self.quantity,
                       detail if detail is not None else self.detail, self.flags)


@dataclass(frozen=True)
class Budget:
    """Doubling-horizon probe schedule.  ``multiplier`` scales everything."""

    base: int = 256
    doublings: int = 8
    multiplier: int = 1

    def horizons(self) -> list[int]:
        start = self.base * self.multiplier
        return [start * (1 << k) for k in range(self.doublings + 1)]

    @property
    def max_horizon(self) -> int:
        return self.base * self.multiplier * (1 << self.doublings)


def default_budget() -> Budget:
    """Default schedule; the ERGOKIT_BUDGET environment variable multiplies it."""
    mult = 1
    raw = os.environ.get("ERGOKIT_BUDGET", "")
    if raw.strip():
        try:
            mult = max(1, int(raw))
        except ValueError:
            mult = 1
    return Budget(multiplier=mult)


def log_sub(a: float, b: float) -> float:
    """log(e^a - e^b) for a >= b; -inf when they coincide."""
    if b == -math.inf:
        return a
    if b >= a:
        return -math.inf
    return a + math.log1p(-math.exp(b - a))


def _eval_terms(term, lo: int, hi: int) -> np.ndarray:
    idx = np.arange(lo, hi, dtype=np.int64)
    try:
        vals = np.asarray(term(idx), dtype=float)
        if vals.shape != idx.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(term(int(n))) for n in idx], dtype=float)
    return vals


def _clamped_horizons(budget: Budget, limit: int | None) -> list[int]:
    horizons = budget.horizons()
    if limit is None:
        return horizons
    out: list[int] = []
    for h in horizons:
        h = min(h, limit)
        if not out or h > out[-1]:
            out.append(h)
    return out


def series_verdict(term, budget: Budget | None = None, start: int = 0,
                   limit: int | None = None) -> Verdict:
    """Decide sum_{n >= start} term(n) < infinity, per the module triggers.

    ``term`` maps an index (or an int64 numpy array) to nonnegative values.
    Holds means the series converged with ``quantity`` its value; Fails
    means it diverged.  ``limit`` clamps the probe horizons (used when the
    model's rates stop being evaluable beyond some index); a shortened
    schedule can leave fewer triggers able to fire.
    """
    budget = budget or default_budget()
    horizons = _clamped_horizons(budget, limit)
    probes: list[tuple[float, float]] = []
    samples: list[float] = []  # term value at each horizon
    total = 0.0
    prev = start
    for n_k in horizons:
        vals = _eval_terms(term, prev, n_k)
        if len(vals) and float(np.min(vals)) < 0:
            bad = prev + int(np.argmin(vals))
            raise ValueError(f"series term at n={bad} is negative")
        if len(vals):
            top = float(np.max(vals))
            if not math.isfinite(top) or top >= OVERFLOW_GUARD:
                bad = prev + int(np.argmax(vals))
                probes.append((float(n_k), math.inf))
                return Verdict(Outcome.FAILS, REASON_TERM_BOUND, tuple(probes),
                               detail=f"term overflow at n={bad}")
            total += float(np.sum(vals))
        prev = n_k
        probes.append((float(n_k), total))
        samples.append(float(vals[-1]) if len(vals) else 0.0)
        if not math.isfinite(total) or total >= OVERFLOW_GUARD:
            return Verdict(Outcome.FAILS, REASON_GROWTH, tuple(probes),
                           detail="partial sums overflow")
    return _classify_series(probes, samples)


def _classify_series(probes, samples) -> Verdict:
    sums = [p[1] for p in probes]
    ns = [p[0] for p in probes]
    k = len(sums) - 1

    # converged: vanishing relative increments at the two final doublings
    rel = [(sums[i] - sums[i - 1]) / max(sums[i], REL_FLOOR) for i in range(1, len(sums))]
    if len(rel) >= 2 and rel[-1] < CONV_REL and rel[-2] < CONV_REL:
        return Verdict(Outcome.HOLDS, REASON_CONVERGED, tuple(probes), quantity=sums[-1])

    # diverged by sustained growth with non-decaying increments
    if len(sums) >= 4:
        ratios = [sums[i] / max(sums[i - 1], REL_FLOOR) for i in range(k - 2, k + 1)]
        inc = [sums[i] - sums[i - 1] for i in range(k - 2, k + 1)]
        inc_ok = all(inc[i] >= NON_DECAY_RATIO * inc[i - 1] for i in range(1, 3)) and inc[0] > 0
        if all(r >= 1.0 + GROWTH_REL for r in ratios) and inc_ok:
            return Verdict(Outcome.FAILS, REASON_GROWTH, tuple(probes))

    # diverged because terms are bounded below on the n * term(n) scale
    if len(samples) >= 3:
        tn = [samples[i] * ns[i] for i in range(len(samples))]
        last = tn[-3:]
        if all(v >= TERM_BOUND_LEVEL for v in last) and \
           all(last[i] >= NON_DECAY_RATIO * last[i - 1] for i in range(1, 3)):
            return Verdict(Outcome.FAILS, REASON_TERM_BOUND, tuple(probes))

    # converged by stable power-law tail extrapolation
    if len(samples) >= 4:
        t = samples[-4:]
        if all(v > 0 for v in t) and all(t[i] < t[i - 1] for i in range(1, 4)):
            p_hats = [math.log2(t[i - 1] / t[i]) for i in range(1, 4)]
            mean_p = sum(p_hats) / 3.0
            spread = max(p_hats) - min(p_hats)
            stable = spread <= 0.1 * max(1.0, mean_p)
            accelerating = p_hats[0] <= p_hats[1] <= p_hats[2]
            if all(p >= EXTRAP_MIN_EXPONENT for p in p_hats) and (stable or accelerating):
                p = p_hats[-1]
                tail = samples[-1] * ns[-1] / (p - 1.0)
                return Verdict(Outcome.HOLDS, REASON_CONVERGED, tuple(probes),
                               quantity=sums[-1] + tail,
                               detail=f"tail extrapolated with decay exponent {p:.3f}")

    return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, tuple(probes), quantity=sums[-1])


def sup_verdict(value, budget: Budget | None = None, start: int = 1,
                log_domain: bool = False, limit: int | None = None) -> Verdict:
    """Decide sup_{n >= start} value(n) < infinity.

    Holds when the running maximum is bit-identical over two consecutive
    doublings with its argmax in the first half of the range, or when its
    relative growth drops below 1e-4 at the two final doublings (a
    plateau, e.g. value(n) = 1 - 1/n); Fails when it grows by a relative
    1e-3 or more at each of the last three doublings.  With
    ``log_domain=True`` the callable returns log values (may be -inf) and
    the reported quantity is exponentiated.
    """
    budget = budget or default_budget()
    horizons = _clamped_horizons(budget, limit)
    if not horizons or horizons[-1] <= start:
        return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, (),
                       detail="no probe range above the start index")
    probes: list[tuple[float, float]] = []
    best = -math.inf
    best_at = start
    prev = start
    maxima: list[float] = []
    for n_k in horizons:
        vals = _eval_terms(value, prev, n_k)
        if len(vals):
            if not log_domain:
                if float(np.min(vals)) < 0:
                    bad = prev + int(np.argmin(vals))
                    raise ValueError(f"sup value at n={bad} is negative")
                top_idx = int(np.argmax(vals))
                if vals[top_idx] >= OVERFLOW_GUARD:
                    probes.append((float(n_k), math.inf))
                    return Verdict(Outcome.FAILS, REASON_TERM_BOUND, tuple(probes),
                                   detail=f"value overflow at n={prev + top_idx}")
            else:
                top_idx = int(np.nanargmax(vals)) if np.isnan(vals).any() else int(np.argmax(vals))
            if vals[top_idx] > best:
                best = float(vals[top_idx])
                best_at = prev + top_idx
        prev = n_k
        maxima.append(best)
        probes.append((float(n_k), best if not log_domain else _safe_exp(best)))
    return _classify_sup(probes, maxima, horizons, best, best_at, log_domain)


def _safe_exp(x: float) -> float:
    if x == -math.inf:
        return 0.0
    if x > 700:
        return math.inf
    return math.exp(x)


def _classify_sup(probes, maxima, horizons, best, best_at, log_domain) -> Verdict:
    quantity = _safe_exp(best) if log_domain else best
    if len(maxima) >= 3 and maxima[-1] == maxima[-2] == maxima[-3] and \
            best_at < horizons[-1] / 2:
        return Verdict(Outcome.HOLDS, REASON_CONVERGED, tuple(probes), quantity=quantity,
                       detail=f"argmax at n={best_at}")
    if len(maxima) >= 4:
        grow = math.log1p(GROWTH_REL)
        if log_domain:
            steps = [maxima[i] - maxima[i - 1] for i in range(len(maxima) - 3, len(maxima))]
            fired = all(s >= grow for s in steps)
        else:
            fired = all(maxima[i] >= (1.0 + GROWTH_REL) * maxima[i - 1] and maxima[i - 1] > 0
                        for i in range(len(maxima) - 3, len(maxima)))
        if fired:
            return Verdict(Outcome.FAILS, REASON_GROWTH, tuple(probes))
    # plateau: still creeping up, but by a vanishing relative amount
    if len(maxima) >= 3:
        if log_domain:
            steps = [maxima[i] - maxima[i - 1] for i in range(len(maxima) - 2, len(maxima))]
            flat = all(s <= SUP_PLATEAU_REL for s in steps)
        else:
            flat = all(maxima[i] - maxima[i - 1] <= SUP_PLATEAU_REL * max(abs(maxima[i]), REL_FLOOR)
                       for i in range(len(maxima) - 2, len(maxima)))
        if flat:
            return Verdict(Outcome.HOLDS, REASON_CONVERGED, tuple(probes), quantity=quantity,
                           detail=f"plateau; argmax at n={best_at}")
    return Verdict(Outcome.INCONCLUSIVE, REASON_BUDGET, tuple(probes), quantity=quantity,
                   detail=f"argmax at n={best_at}")


# ---------------------------------------------------------------------------
# The mu-ladder
# ---------------------------------------------------------------------------


class MuLadder:
    """Cached mu_n values, prefix sums and tail masses for a chain.

    All arrays are append-only and grown on demand, so concurrent readers
    are safe; interleaved growth is idempotent.  Everything is kept in the
    log domain alongside plain floats, which keeps criteria computable when
    mu_n underflows (fast-growing death rates) or overflows.
    """

    def __init__(self, model: BirthDeathModel, budget: Budget | None = None):
        self.model = model
        self.budget = budget or default_budget()
        self._n = 0  # arrays currently cover indices 0 .. _n
        b0 = model.birth_rate(0)
        self._b = np.array([b0])
        self._a = np.array([math.nan])  # a_0 undefined
        self._logb = np.array([math.log(b0)])
        self._loga = np.array([math.nan])
        self._logmu = np.array([0.0])
        self._mu = np.array([1.0])
        self._logpre = np.array([0.0])  # log mu[0, n]
        self._logR = np.array([-self._logb[0]])  # log sum_{j<=n} 1/(mu_j b_j)
        self._mass: Verdict | None = None
        self._logtail: np.ndarray | None = None
        self._log_rem: float = -math.inf
        self.cap: int | None = None  # last index with evaluable rates, if limited
        self.cap_reason: str = ""

    # -- growth ------------------------------------------------------------

    def _ensure(self, n: int) -> None:
        if self.cap is not None:
            n = min(n, self.cap)
        if n <= self._n:
            return
        lo, hi = self._n + 1, max(n, 2 * self._n)
        idx = np.arange(lo, hi + 1)
        try:
            b = self.model.birth_rates(idx)
            a = self.model.death_rates(idx)
        except EvalDomainError:
            # rates stop being representable somewhere in the chunk: find
            # the first bad index and cap the ladder there, honestly
            good = lo - 1
            for i in range(lo, hi + 1):
                try:
                    self.model.birth_rate(i)
                    self.model.death_rate(i)
                except EvalDomainError as exc:
                    self.cap = good
                    self.cap_reason = str(exc)
                    break
                good = i
            if self.cap is None:  # pragma: no cover - vector/scalar mismatch
                self.cap = good
                self.cap_reason = "rates not evaluable"
            self._ensure(self.cap)
            return
        logb = np.log(b)
        loga = np.log(a)
        steps = np.empty(len(idx))
        steps[0] = self._logb[self._n] - loga[0]
        steps[1:] = logb[:-1] - loga[1:]
        logmu = self._logmu[self._n] + np.cumsum(steps)
        # plain mu by the exact multiplicative recurrence; entries poisoned
        # by intermediate under/overflow are recovered from the log form
        ratios = np.empty(len(idx))
        ratios[0] = self._b[self._n] / a[0]
        ratios[1:] = b[:-1] / a[1:]
        start_mu = float(self._mu[self._n])
        if not (0.0 < start_mu < math.inf):
            start_mu = _safe_exp(float(self._logmu[self._n]))
        with np.errstate(over="ignore", under="ignore"):
            mu = start_mu * np.cumprod(ratios)
            bad = (mu == 0.0) | ~np.isfinite(mu)
            if bad.any():
                mu[bad] = np.exp(logmu[bad])
        self._b = np.concatenate([self._b, b])
        self._a = np.concatenate([self._a, a])
        self._logb = np.concatenate([self._logb, logb])
        self._loga = np.concatenate([self._loga, loga])
        self._logmu = np.concatenate([self._logmu, logmu])
        self._mu = np.concatenate([self._mu, mu])
        logpre = np.logaddexp.accumulate(np.concatenate([[self._logpre[self._n]], logmu]))[1:]
        self._logpre = np.concatenate([self._logpre, logpre])
        logr = -logmu - logb
        logR = np.logaddexp.accumulate(np.concatenate([[self._logR[self._n]], logr]))[1:]
        self._logR = np.concatenate([self._logR, logR])
        self._n = hi

    # -- plain accessors ----------------------------------------------------

    def log_mu(self, n: int) -> float:
        self._ensure(n)
        return float(self._logmu[n])

    def mu(self, n: int) -> float:
        """mu_n as a plain float; raises :class:`MuRangeError` outside range."""
        self._ensure(n)
        lm = float(self._logmu[n])
        if not (MU_LOG_LO <= lm <= MU_LOG_HI):
            raise MuRangeError(n, lm)
        return float(self._mu[n])

    def mu_segment(self, i: int, k: int) -> float:
        """mu[i, k] = sum_{i <= j <= k} mu_j (plain sum when representable)."""
        if not 0 <= i <= k:
            raise ValueError("need 0 <= i <= k")
        self._ensure(k)
        chunk = self._mu[i:k + 1]
        if np.all(np.isfinite(chunk)):
            return float(np.sum(chunk))
        return _safe_exp(float(_logsumexp(self._logmu[i:k + 1])))

    def log_mu_prefix(self, n: int) -> float:
        self._ensure(n)
        return float(self._logpre[n])

    def log_R(self, n: int) -> float:
        """log of sum_{j=0}^{n} 1/(mu_j b_j)."""
        self._ensure(n)
        return float(self._logR[n])

    def arrays(self, n: int):
        """(logb, loga, logmu, logpre, logR) views covering indices 0..n."""
        self._ensure(n)
        s = slice(0, n + 1)
        return (self._logb[s], self._loga[s], self._logmu[s], self._logpre[s], self._logR[s])

    def rates(self, n: int):
        """(b_0..b_n, a_0..a_n) as plain arrays; a_0 is NaN (undefined)."""
        self._ensure(n)
        if self.cap is not None and n > self.cap:
            raise EvalDomainError(f"rates evaluable only up to index {self.cap}: "
                                  f"{self.cap_reason}")
        return self._b[:n + 1], self._a[:n + 1]

    def grown_to(self, n: int) -> int:
        """Grow towards index n; the returned coverage is n unless the
        rates stop being evaluable earlier (the cap)."""
        self._ensure(n)
        return n if self.cap is None else min(n, self.cap)

    # -- total mass and tails ------------------------------------------------

    def total_mass(self) -> Verdict:
        """Verdict for mu[0, inf): Holds-finite with the summed quantity,
        Fails for divergence, else Inconclusive."""
        if self._mass is None:
            h = self.grown_to(self.budget.max_horizon)

            def term(idx):
                with np.errstate(over="ignore"):
                    return np.exp(self._logmu[idx])

            self._mass = series_verdict(term, self.budget, start=0, limit=h)
        return self._mass

    def _build_tails(self) -> None:
        if self._logtail is not None:
            return
        mass = self.total_mass()
        if not mass.holds:
            raise TailsUndecidedError("total mass is not decided finite")
        h = self.grown_to(self.budget.max_horizon)  # mass summed over n < h
        rev = np.logaddexp.accumulate(self._logmu[h - 1::-1])[::-1]
        # remainder beyond the summed range: the difference between the
        # mass quantity and its own final partial sum, i.e. exactly the
        # extrapolated tail correction.  When the sum converged plainly
        # (no correction recorded) the deep tails still need a remainder:
        # extrapolate it geometrically from the last two halving blocks.
        rem = max(mass.quantity - mass.probes[-1][1], 0.0)
        self._log_rem = math.log(rem) if rem > 0 else -math.inf
        if rem == 0.0 and h >= 8:
            b1 = _logsumexp(self._logmu[h // 4:h // 2])
            b2 = _logsumexp(self._logmu[h // 2:h])
            if b2 > -math.inf and b1 > -math.inf:
                rho = math.exp(min(b2 - b1, 0.0))
                if 0.0 < rho <= 0.9:
                    self._log_rem = b2 + math.log(rho / (1.0 - rho))
        self._logtail = np.logaddexp(rev, self._log_rem)

    def log_tail(self, n: int) -> float:
        """log mu[n, inf); requires the total mass to be decided.

        Returns +inf when the mass diverges; raises
        :class:`TailsUndecidedError` when it is undecided.
        """
        mass = self.total_mass()
        if mass.fails:
            return math.inf
        if mass.inconclusive:
            raise TailsUndecidedError("total mass is not decided finite")
        self._build_tails()
        if n >= len(self._logtail):
            raise ValueError(f"tail horizon exceeded (n={n})")
        return float(self._logtail[n])

    def tail(self, n: int) -> float:
        lt = self.log_tail(n)
        return math.inf if lt == math.inf else _safe_exp(lt)

    def log_tails_array(self, n: int) -> np.ndarray:
        """log mu[k, inf) for k = 0..n as one array (n < budget.max_horizon)."""
        mass = self.total_mass()
        if mass.fails:
            return np.full(n + 1, math.inf)
        if mass.inconclusive:
            raise TailsUndecidedError("total mass is not decided finite")
        self._build_tails()
        if n >= len(self._logtail):
            raise ValueError(f"tail horizon exceeded (n={n})")
        return self._logtail[:n + 1]

    def log_truncated_tails(self, n: int, horizon: int) -> np.ndarray:
        """log mu[k, horizon] for k = 0..n: sound lower bounds for tails,
        usable for divergence detection while the mass is undecided."""
        self._ensure(horizon)
        rev = np.logaddexp.accumulate(self._logmu[horizon::-1])[::-1]
        return rev[:n + 1]


def _logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    if m == -math.inf:
        return -math.inf
    if m == math.inf:
        return math.inf
    return m + math.log(float(np.sum(np.exp(a - m))))
