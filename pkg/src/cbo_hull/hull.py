"""Myring hull geometry, baseline packing envelope, and the containment constraint.

The hull is an axisymmetric body of revolution with three sections: a
power-law nose, a cylindrical midbody, and a cubic tail.  Radii follow

    r_nose(x) = (d/2) * [1 - ((x - a)/a)^2]^(1/n)          for x in [0, a]
    r_tail(x) = d/2 - A z^2 + B z^3,  z = x - a - b         for x in [a+b, a+b+c]

with A = 3d/(2 c^2) - tan(theta)/c and B = d/c^3 - tan(theta)/c^2.  Both
pieces meet the cylinder at d/2 and close to zero radius at the ends.

The packing envelope is a cone-cylinder-cone solid that must fit entirely
inside the hull; the signed containment margin is the worst radial
interference between the two, negative when the envelope fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError


@dataclass(frozen=True)
class HullParams:
    """Six-parameter description of a Myring hull."""

    a: float      # nose length [mm]
    b: float      # cylindrical body length [mm]
    c: float      # tail length [mm]
    d: float      # body diameter [mm]
    n: float      # nose shaping exponent (1 = parabolic, 2 = elliptic)
    theta: float  # tail exit angle [deg]

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d", "n", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"hull parameter {name!r} must be positive, got {value}")
        if not (math.isfinite(self.n) and self.n > 0):
            raise ValueError(f"nose exponent n must be positive, got {self.n}")
        if not math.isfinite(self.theta):
            raise ValueError(f"tail angle theta must be finite, got {self.theta}")

    @property
    def length(self) -> float:
        """Total hull length a + b + c [mm]."""
        return self.a + self.b + self.c


@dataclass(frozen=True)
class BaselineGeometry:
    """Cone-cylinder-cone packing envelope the hull must contain."""

    a: float  # nose cone length [mm]
    b: float  # cylinder length [mm]
    c: float  # tail cone length [mm]
    d: float  # cylinder diameter [mm]

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, float(getattr(self, name)))
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"baseline parameter {name!r} must be positive, got {value}")

    @property
    def length(self) -> float:
        return self.a + self.b + self.c


#: Packed envelope used by both built-in experiment presets [mm].
DEFAULT_BASELINE = BaselineGeometry(a=555.0, b=2664.0, c=512.0, d=1026.0)


def _tail_coeffs(p: HullParams) -> tuple[float, float]:
    tan_theta = math.tan(math.radians(p.theta))
    quad = 3.0 * p.d / (2.0 * p.c**2) - tan_theta / p.c
    cub = p.d / p.c**3 - tan_theta / p.c**2
    return quad, cub


def nose_radius(p: HullParams, x: float) -> float:
    """Nose profile radius at axial position x in [0, a] (mm)."""
    if not 0.0 <= x <= p.a:
        raise ValueError(f"nose position x={x} outside [0, {p.a}]")
    u = (x - p.a) / p.a
    w = 1.0 - u * u
    if w <= 0.0:  # x == 0 exactly, or round-off just below
        return 0.0
    return 0.5 * p.d * w ** (1.0 / p.n)


def tail_radius(p: HullParams, x: float) -> float:
    """Tail profile radius at axial position x in [a+b, a+b+c] (mm).

    May be negative for extreme (theta, c, d) combinations; callers treat a
    negative radius as geometric invalidity rather than an error.
    """
    lo = p.a + p.b
    if not lo <= x <= lo + p.c:
        raise ValueError(f"tail position x={x} outside [{lo}, {lo + p.c}]")
    z = x - lo
    quad, cub = _tail_coeffs(p)
    return 0.5 * p.d - quad * z * z + cub * z**3


def hull_radius(p: HullParams, x: float) -> float:
    """Full piecewise profile radius at axial position x in [0, a+b+c] (mm)."""
    if not 0.0 <= x <= p.length:
        raise ValueError(f"position x={x} outside [0, {p.length}]")
    if x < p.a:
        return nose_radius(p, x)
    if x <= p.a + p.b:
        return 0.5 * p.d
    return tail_radius(p, x)


def hull_radius_profile(p: HullParams, x: np.ndarray) -> np.ndarray:
    """Vectorized hull_radius over an array of in-range axial positions."""
    x = np.asarray(x, dtype=float)
    if x.size and (x.min() < 0.0 or x.max() > p.length):
        raise ValueError("profile positions outside [0, length]")
    r = np.full(x.shape, 0.5 * p.d)

    nose = x < p.a
    u = (x[nose] - p.a) / p.a
    w = np.maximum(1.0 - u * u, 0.0)
    r[nose] = 0.5 * p.d * w ** (1.0 / p.n)

    tail = x > p.a + p.b
    z = x[tail] - p.a - p.b
    quad, cub = _tail_coeffs(p)
    r[tail] = 0.5 * p.d - quad * z * z + cub * z**3
    return r


def min_tail_radius(p: HullParams) -> float:
    """Exact minimum of the cubic tail profile over its full extent.

    The derivative -2*quad*z + 3*cub*z^2 has at most one interior root, so
    the minimum is attained at z=0 (d/2), z=c (exactly 0 by the closure
    identity; evaluated analytically to avoid cancellation round-off), or
    that root.
    """
    quad, cub = _tail_coeffs(p)
    lowest = 0.0  # closure value at z=c; z=0 gives d/2 > 0
    if cub != 0.0:
        z_crit = 2.0 * quad / (3.0 * cub)
        if 0.0 < z_crit < p.c:
            lowest = min(lowest, 0.5 * p.d - quad * z_crit**2 + cub * z_crit**3)
    return lowest


def is_valid_geometry(p: HullParams) -> bool:
    """True when the profile radius is nonnegative along the whole hull."""
    return min_tail_radius(p) >= 0.0


def baseline_radius(bg: BaselineGeometry, x: float) -> float:
    """Envelope radius at axial position x in [0, a+b+c] (baseline frame, mm)."""
    if not 0.0 <= x <= bg.length:
        raise ValueError(f"position x={x} outside [0, {bg.length}]")
    half = 0.5 * bg.d
    if x < bg.a:
        return half * x / bg.a
    if x <= bg.a + bg.b:
        return half
    return half * (bg.length - x) / bg.c


def _baseline_radius_profile(bg: BaselineGeometry, x: np.ndarray) -> np.ndarray:
    half = 0.5 * bg.d
    knots = (0.0, bg.a, bg.a + bg.b, bg.length)
    return np.interp(x, knots, (0.0, half, half, 0.0))


def containment_margin(p: HullParams, bg: BaselineGeometry, samples: int = 4096) -> float:
    """Signed worst-case radial interference of the envelope inside the hull (mm).

    The hull and envelope are co-axial with their cylinder sections starting
    together, i.e. the envelope's nose cone begins at hull position a - a_bg.
    Returns max over sampled stations of (envelope radius - hull radius):
    <= 0 means the envelope fits, > 0 is the deepest interference.

    Designs whose hull cannot cover the envelope's axial extent, and designs
    with a negative tail radius anywhere, get the sentinel value +d_bg/2
    (maximal violation) so the optimizer sees them as plainly infeasible.
    """
    if samples < 64:
        raise ValueError(f"samples must be >= 64, got {samples}")
    sentinel = 0.5 * bg.d
    if min_tail_radius(p) < 0.0:
        return sentinel
    offset = p.a - bg.a  # envelope origin in the hull frame
    if offset < 0.0 or offset + bg.length > p.length:
        return sentinel

    stations = np.linspace(0.0, bg.length, samples)
    joints = [bg.a, bg.a + bg.b, p.a - offset, p.a + p.b - offset]
    joints = [j for j in joints if 0.0 <= j <= bg.length]
    stations = np.union1d(stations, joints)

    r_env = _baseline_radius_profile(bg, stations)
    r_hull = hull_radius_profile(p, stations + offset)
    if np.any(r_hull < -1e-9 * p.d):  # tolerance for endpoint cancellation round-off
        return sentinel
    return float(np.max(r_env - r_hull))


@dataclass(frozen=True)
class Profile:
    """Sampled outline of an axisymmetric hull: paired axial stations and radii."""

    x: np.ndarray  # strictly increasing axial positions from 0 to length [mm]
    r: np.ndarray  # radii >= 0, zero at both ends [mm]

    def __post_init__(self) -> None:
        if self.x.shape != self.r.shape or self.x.ndim != 1 or self.x.size < 2:
            raise ValueError("profile needs matching 1-d station and radius arrays")
        if np.any(np.diff(self.x) <= 0.0):
            raise ValueError("profile stations must be strictly increasing")
        if self.x[0] != 0.0:
            raise ValueError("profile must start at x=0")
        if np.any(self.r < 0.0):
            raise ValueError("profile radii must be nonnegative")
        if self.r[0] != 0.0 or self.r[-1] != 0.0:
            raise ValueError("closed profile must have zero end radii")


def profile(p: HullParams, stations: int = 257) -> Profile:
    """Sample the hull outline at evenly spaced stations plus the section joints."""
    if stations < 2:
        raise ValueError("need at least 2 stations")
    if min_tail_radius(p) < 0.0:
        raise InvalidGeometryError("tail radius goes negative; no closed profile")
    x = np.union1d(np.linspace(0.0, p.length, stations), [p.a, p.a + p.b])
    r = hull_radius_profile(p, x)
    # the cubic closes at exactly zero; remove cancellation round-off at the apex
    r[-1] = 0.0
    np.maximum(r, 0.0, out=r)
    return Profile(x=x, r=r)


def write_profile_csv(prof: Profile, path) -> None:
    """Write the profile as `x_mm,r_mm` rows with 6 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x_mm,r_mm\n")
        for x, r in zip(prof.x, prof.r):
            fh.write(f"{x:.6f},{r:.6f}\n")
