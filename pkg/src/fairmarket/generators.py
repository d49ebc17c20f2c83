"""Seeded instance generators and small hand-built instances with known properties."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .instance import Instance

__all__ = ["generate", "fixture", "FIXTURES"]

FIXTURES = ("c3", "c4", "c5", "c6")


def _check_dims(n, m, vmax):
    for label, value in (("n", n), ("m", m), ("vmax", vmax)):
        if value is None:
            raise ValueError(f"missing parameter {label}")
        if int(value) != value or value < 1:
            raise ValueError(f"{label} must be a positive integer, got {value}")


def random_instance(n: int, m: int, vmax: int, seed: int) -> Instance:
    """Uniform values in [0, vmax]; goods nobody values get one positive entry."""
    _check_dims(n, m, vmax)
    rng = np.random.default_rng(seed)
    values = rng.integers(0, vmax + 1, size=(n, m))
    for j in range(m):
        if not values[:, j].any():
            values[rng.integers(0, n), j] = rng.integers(1, vmax + 1)
    return Instance(values.tolist(), name=f"random-n{n}-m{m}-v{vmax}-s{seed}")


def identical_instance(n: int, m: int, vmax: int, seed: int) -> Instance:
    """Every agent shares one random row with entries in [1, vmax]."""
    _check_dims(n, m, vmax)
    rng = np.random.default_rng(seed)
    row = rng.integers(1, vmax + 1, size=m).tolist()
    return Instance([list(row) for _ in range(n)], name=f"identical-n{n}-m{m}-v{vmax}-s{seed}")


def fixture(name: str, n: Optional[int] = None) -> Instance:
    """Integer-scaled versions of the worked examples.

    c3: two high goods and three signature goods, c=10**4, delta=1/3000,
        everything scaled by 3000. Goods are ordered (h1, h2, g1, g2, g3).
    c4: identity valuations (default n=3).
    c5: the 5x7 spending-restricted counterexample scaled by 60.
    c6: the 2n-good instance where a 2-approximate NSW allocation is
        neither EF1 nor PO (default n=2).
    """
    if name == "c3":
        high, own, other = 3 * 10**7, 1000, 999
        rows = []
        for i in range(3):
            rows.append([high, high] + [own if g == i else other for g in range(3)])
        return Instance(rows, name="c3")
    if name == "c4":
        n = 3 if n is None else n
        _check_dims(n, n, 1)
        return Instance([[int(i == j) for j in range(n)] for i in range(n)], name=f"c4-n{n}")
    if name == "c5":
        a, b, c = 45, 42, 40
        rows = [
            [a, 0, 0, a, 0, 0, 0],
            [0, a, 0, a, 0, 0, 0],
            [0, 0, a, a, 0, 0, 0],
            [b, b, b, b, c, 0, c],
            [b, b, b, b, 0, c, c],
        ]
        return Instance(rows, name="c5")
    if name == "c6":
        n = 2 if n is None else n
        _check_dims(n, 2 * n, 1)
        m = 2 * n
        rows = []
        for i in range(n):
            row = [2 ** (n - 1)] * (m - 2)
            row += [1, 2**n - 1] if i == n - 1 else [0, 0]
            rows.append(row)
        return Instance(rows, name=f"c6-n{n}")
    raise ValueError(f"unknown fixture {name!r}; expected one of {', '.join(FIXTURES)}")


def generate(
    family: str,
    seed: int = 0,
    *,
    n: Optional[int] = None,
    m: Optional[int] = None,
    vmax: Optional[int] = None,
    fixture_name: Optional[str] = None,
) -> Instance:
    """Build an instance; a pure function of its arguments."""
    if family == "random":
        return random_instance(n, m, vmax, seed)
    if family == "identical":
        return identical_instance(n, m, vmax, seed)
    if family == "fixture":
        if fixture_name is None:
            raise ValueError("fixture family needs a fixture name")
        return fixture(fixture_name, n)
    raise ValueError(f"unknown family {family!r}")
