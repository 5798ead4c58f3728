"""Disorder distributions, reproducible coupling fields and concentration
quantities.

A coupling field assigns a positive capacity to every edge of Z^(d+1).  It is
realized statelessly: the capacity of an edge is a pure function of
(seed, canonical edge coordinates, distributions, accumulated shift), obtained
by hashing the shifted coordinates with BLAKE2b and pushing the resulting
uniform variate through the distribution's quantile function.  Shifting the
field is therefore a coordinate remap and costs nothing.

Widths follow the declared representation: interval length for a uniform law,
zero for a point mass, and the Lipschitz constant s for the law of
s*max(N(0,1),0)+C.  These are upper bounds for the best-representation width.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

from .errors import CapacityOverflow, ZeroSupport
from .shifts import Shift

CAP_SCALE = 2**32  # fixed-point denominator for exact capacities
_CAP_LIMIT = 2**20  # sampled values must stay below this (fits 64-bit sums)


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("uniform interval needs a < b")

    def quantile(self, u):
        return self.a + (self.b - self.a) * u

    @property
    def width(self):
        return self.b - self.a

    @property
    def min_support(self):
        return self.a

    def mean(self):
        return 0.5 * (self.a + self.b)

    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def spec(self):
        return f"uniform:{self.a:g},{self.b:g}"


@dataclass(frozen=True)
class PointMass:
    c: float

    def quantile(self, u):
        return self.c

    @property
    def width(self):
        return 0.0

    @property
    def min_support(self):
        return self.c

    def mean(self):
        return self.c

    def variance(self):
        return 0.0

    def spec(self):
        return f"point:{self.c:g}"


@dataclass(frozen=True)
class ReluGauss:
    """Law of scale*max(G,0)+offset for a standard Gaussian G."""

    scale: float
    offset: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def quantile(self, u):
        return self.offset + self.scale * max(inverse_normal_cdf(u), 0.0)

    @property
    def width(self):
        return self.scale  # Lipschitz constant of x -> scale*max(x,0)+offset

    @property
    def min_support(self):
        return self.offset

    def mean(self):
        return self.offset + self.scale / math.sqrt(2.0 * math.pi)

    def variance(self):
        return self.scale**2 * (0.5 - 1.0 / (2.0 * math.pi))

    def spec(self):
        return f"relugauss:{self.scale:g},{self.offset:g}"


def parse_distribution(text):
    """Parse `uniform:a,b`, `point:c` or `relugauss:s,C`."""
    try:
        kind, _, args = text.partition(":")
        parts = [float(x) for x in args.split(",")] if args else []
        if kind == "uniform" and len(parts) == 2:
            return Uniform(*parts)
        if kind == "point" and len(parts) == 1:
            return PointMass(parts[0])
        if kind == "relugauss" and len(parts) == 2:
            return ReluGauss(*parts)
    except ValueError as e:
        raise ValueError(f"bad distribution spec {text!r}: {e}") from None
    raise ValueError(f"bad distribution spec {text!r}")


def width(dist):
    return dist.width


def min_support(dist):
    return dist.min_support


# Rational approximation of the standard normal quantile (Acklam's algorithm,
# absolute error < 1.2e-9; part of the bit-exact field contract).
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


def inverse_normal_cdf(p):
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0,1)")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (
            ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        ) / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(
            ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        ) / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (
        (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5])
        * q
        / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    )


def kappa(nu_par, nu_perp, d):
    """Concentration quantity combining widths and minimal supports."""
    ap = nu_par.min_support
    aq = nu_perp.min_support
    if ap <= 0 or aq <= 0:
        raise ZeroSupport("both distributions need min support > 0")
    wp = nu_par.width
    wq = nu_perp.width
    return (1.0 / (ap * aq) + 1.0 / (d * aq * aq)) * wp * wp + (wq / aq) ** 2


@dataclass(frozen=True)
class ConcentrationReport:
    kappa: float
    lhs: float
    rhs: float
    satisfied: bool
    c0: float


def check_condition(nu_par, nu_perp, d, c0):
    """Anisotropic concentration condition at base dimension d (D = d+1):
    kappa * (1 + alpha_perp/alpha_par) <= c0 * D / (log D)^2."""
    k = kappa(nu_par, nu_perp, d)
    ap = nu_par.min_support
    aq = nu_perp.min_support
    lhs = k * (1.0 + aq / ap)
    big_d = d + 1
    rhs = c0 * big_d / math.log(big_d) ** 2
    return ConcentrationReport(k, lhs, rhs, lhs <= rhs, c0)


@dataclass(frozen=True)
class CouplingField:
    """Seed-determined positive capacities on the edges of Z^(d+1).

    Edges are canonical `(base, axis)` pairs with 1-based axis; axis == d+1 is
    the column (parallel) direction.  `shift` is the accumulated base-lattice
    shift applied to column lookups.
    """

    seed: int
    nu_par: object
    nu_perp: object
    d: int
    shift: Shift = None

    def __post_init__(self):
        if self.shift is None:
            object.__setattr__(self, "shift", Shift.zero(self.d))
        if self.shift.d != self.d:
            raise ValueError("shift dimension mismatch")

    def _lookup(self, edge):
        base, axis = edge
        if len(base) != self.d + 1 or not 1 <= axis <= self.d + 1:
            raise ValueError(f"bad edge {edge} for d={self.d}")
        # both edge classes shift by the value at the base projection: a
        # parallel edge sits above that site, and for a perpendicular edge the
        # canonical base is the lexicographically smaller endpoint
        t = self.shift(base[: self.d])
        return base[: self.d] + (base[self.d] + t,), axis

    def sample(self, edge):
        """Capacity of an edge (positive float; pure in all arguments)."""
        coords, axis = self._lookup(edge)
        dist = self.nu_par if axis == self.d + 1 else self.nu_perp
        payload = struct.pack(f"<qq{len(coords)}q", self.seed, axis, *coords)
        h = int.from_bytes(
            hashlib.blake2b(payload, digest_size=8).digest(), "big"
        )
        u = (h + 0.5) / 2.0**64
        return dist.quantile(u)

    def sample_int(self, edge):
        """Capacity in fixed point (rounded to the nearest 1/CAP_SCALE)."""
        value = self.sample(edge)
        if value >= _CAP_LIMIT:
            raise CapacityOverflow(f"capacity {value} out of fixed-point range")
        return int(value * CAP_SCALE + 0.5)

    def shift_by(self, tau):
        return CouplingField(self.seed, self.nu_par, self.nu_perp, self.d, self.shift + tau)


def shift_field(field, tau):
    """The field with the column above u looked up at height k + tau(u)."""
    return field.shift_by(tau)


def alphas(field):
    """Min supports (alpha_par, alpha_perp) of the field's distributions."""
    return field.nu_par.min_support, field.nu_perp.min_support
