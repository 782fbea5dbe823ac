"""Shared model corpus for the property and acceptance suites."""

from __future__ import annotations

import random

from ergokit.models import parse_model_text


def chain(b0, b, a, name, overrides=()):
    lines = [f"kind = birth-death", f"b0 = {b0}", f'b = "{b}"', f'a = "{a}"']
    for key, idx, val in overrides:
        lines.append(f"{key}[{idx}] = {val}")
    return parse_model_text("\n".join(lines) + "\n", name)


def diff(a, b, name):
    return parse_model_text(f'kind = diffusion\na = "{a}"\nb = "{b}"\n', name)


def gamma_chain(gamma):
    return chain(1, f"n^{gamma}", f"n^{gamma}", f"gamma{gamma}")


# chains with a finite delta whose truncation oracle converges at desk scale
ORACLE_CHAINS = [
    gamma_chain(2.0),
    gamma_chain(2.25),
    gamma_chain(2.5),
    gamma_chain(3.0),
    gamma_chain(4.0),
    chain(1, "1", "2", "mm1-a2b1"),
    chain(1, "1", "3", "mm1-a3b1"),
    chain(1.2, "1.2", "2.5", "mm1-a25b12"),
    chain(2, "2", "4", "mm1-a4b2"),
    chain(1, "n+1", "2*n+2", "linear-ratio-half"),
]

# diffusions with a finite delta and exponentially light stationary tails
ORACLE_DIFFUSIONS = [
    diff("1", "-1", "bm-c1"),
    diff("1", "-2", "bm-c2"),
    diff("1", "-3", "bm-c3"),
    diff("1", "-x", "ou"),
    diff("1", "-2*x", "ou-2x"),
    diff("1", "-x-1", "ou-shifted"),
    diff("1", "-0.5-x", "ou-half-shift"),
    diff("2", "-2", "bm-a2c2"),
    diff("1", "-4", "bm-c4"),
    diff("0.5", "-x", "ou-a05"),
]

# broader set for lattice-consistency checks (no oracle required)
LATTICE_EXTRAS = [
    gamma_chain(0.5),
    gamma_chain(1.0),
    gamma_chain(1.5),
    chain(1, "1", "1", "constant-rates"),
    chain(1, "exp(n)", "1", "explosive-birth"),
    chain(1, "exp(n)", "exp(n)", "exp-both"),
    chain(1, "2", "1", "transient-drift"),
    chain(1, "n^2", "n^2", "gamma2-override", overrides=[("b", 5, 26.0), ("a", 7, 45.0)]),
    diff("1", "0", "flat-line"),
    diff("(1+x)^2", "0", "kac-quadratic"),
    diff("(1+x)^3", "0", "kac-cubic"),
    diff("1", "1", "outward-drift"),
    diff("1+x", "-2", "bm-growing-a"),
]


def random_chain(rng: random.Random, idx: int):
    """A random power-plus-constant rate family; positive by construction."""
    g_b = round(rng.uniform(0.3, 3.0), 2)
    g_a = round(g_b + rng.uniform(-0.3, 0.3), 2)
    c_b = round(rng.uniform(0.5, 2.0), 2)
    c_a = round(rng.uniform(0.5, 2.0), 2)
    d_b = round(rng.uniform(0.1, 1.0), 2)
    d_a = round(rng.uniform(0.1, 1.0), 2)
    b0 = round(rng.uniform(0.5, 2.0), 2)
    overrides = []
    if rng.random() < 0.3:
        overrides.append(("b", rng.randrange(1, 9), round(rng.uniform(0.5, 5.0), 2)))
    if rng.random() < 0.3:
        overrides.append(("a", rng.randrange(1, 9), round(rng.uniform(0.5, 5.0), 2)))
    return chain(b0, f"{c_b}*n^{g_b}+{d_b}", f"{c_a}*n^{g_a}+{d_a}",
                 f"random-{idx}", overrides)


def random_chains(count: int = 100, seed: int = 20260808):
    rng = random.Random(seed)
    return [random_chain(rng, i) for i in range(count)]
