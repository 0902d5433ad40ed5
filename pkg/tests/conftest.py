"""Shared test helpers."""

import numpy as np
import pytest

from cbo_hull.hull import BaselineGeometry, HullParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_hull(rng, bg: BaselineGeometry | None = None) -> HullParams:
    """Random hull drawn around (not strictly inside) the experiment box."""
    if bg is None:
        bg = BaselineGeometry(555.0, 2664.0, 512.0, 1026.0)
    return HullParams(
        a=rng.uniform(0.5, 1.8) * bg.a,
        b=rng.uniform(0.8, 1.2) * bg.b,
        c=rng.uniform(0.5, 1.8) * bg.c,
        d=rng.uniform(0.6, 1.5) * bg.d,
        n=rng.uniform(0.1, 5.0),
        theta=rng.uniform(0.0, 50.0),
    )


def random_baseline(rng) -> BaselineGeometry:
    return BaselineGeometry(
        a=rng.uniform(150.0, 1200.0),
        b=rng.uniform(500.0, 4000.0),
        c=rng.uniform(150.0, 1200.0),
        d=rng.uniform(200.0, 1500.0),
    )


def brute_force_margin(p: HullParams, bg: BaselineGeometry, stations: int = 100_000) -> float:
    """Independent dense-scan containment oracle.

    Re-derives both radius functions from the piecewise formulas and scans
    uniformly spaced stations over the envelope extent, applying the same
    co-axial, cylinders-start-together alignment and sentinel rules.
    """
    sentinel = 0.5 * bg.d
    # interior minimum of the cubic tail (invalid-geometry check)
    tan_t = np.tan(np.radians(p.theta))
    A = 3.0 * p.d / (2.0 * p.c**2) - tan_t / p.c
    B = p.d / p.c**3 - tan_t / p.c**2
    zs = np.linspace(0.0, p.c, stations)
    tail_r = 0.5 * p.d - A * zs**2 + B * zs**3
    if tail_r.min() < -1e-9 * p.d:
        return sentinel

    offset = p.a - bg.a
    if offset < 0.0 or offset + bg.length > p.length:
        return sentinel

    xb = np.linspace(0.0, bg.length, stations)
    r_env = np.interp(xb, [0.0, bg.a, bg.a + bg.b, bg.length], [0.0, 0.5 * bg.d, 0.5 * bg.d, 0.0])
    xh = xb + offset
    r_hull = np.empty_like(xh)
    nose = xh < p.a
    u = (xh[nose] - p.a) / p.a
    r_hull[nose] = 0.5 * p.d * np.maximum(1.0 - u * u, 0.0) ** (1.0 / p.n)
    mid = (xh >= p.a) & (xh <= p.a + p.b)
    r_hull[mid] = 0.5 * p.d
    tail = xh > p.a + p.b
    z = xh[tail] - p.a - p.b
    r_hull[tail] = 0.5 * p.d - A * z**2 + B * z**3
    return float(np.max(r_env - r_hull))
