"""Hyperbolic upper half plane and SL(2,R) primitives.

Points live in H = {z : Im z > 0} carrying the hyperbolic metric, whose
isometries are the Moebius actions z -> (az+b)/(cz+d) of real determinant-one
matrices.  Polar coordinates (r, u) place z = k_u(e^{-r} i) with k_u the
rotation fixing i; they cover the plane twice (u and u + pi label the same
point), so canonical angles are reduced to [0, pi).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-9
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HPoint:
    """A point of the open upper half plane."""

    re: float
    im: float

    def __post_init__(self):
        if not (self.im > 0.0):
            raise ValueError(f"HPoint requires Im > 0, got {self.im}")

    @property
    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(float(z.real), float(z.imag))


@dataclass(frozen=True)
class HPolar:
    """Hyperbolic polar coordinates (r, u) of z = k_u(e^{-r} i).

    r is the hyperbolic distance from i; u is the hyperbolic angle, stored in
    [0, 2*pi).  The canonical form produced by `to_polar` uses u in [0, pi)
    for r > 0 and u = 0 at the pole.
    """

    r: float
    u: float

    def __post_init__(self):
        if not (self.r >= 0.0):
            raise ValueError(f"HPolar requires r >= 0, got {self.r}")
        object.__setattr__(self, "u", float(self.u) % _TWO_PI)


@dataclass(frozen=True)
class SL2Element:
    """A real 2x2 matrix of determinant one."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > DET_TOL:
            raise ValueError(f"determinant {det} departs from 1 beyond {DET_TOL}")

    @classmethod
    def identity(cls) -> "SL2Element":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, u: float) -> "SL2Element":
        """k_u = [[cos u, sin u], [-sin u, cos u]], the stabiliser of i."""
        cu, su = math.cos(u), math.sin(u)
        return cls(cu, su, -su, cu)

    @classmethod
    def scaling(cls, r: float) -> "SL2Element":
        """R_r = diag(e^{-r/2}, e^{r/2}); acts on H as z -> e^{-r} z."""
        e = math.exp(-0.5 * r)
        return cls(e, 0.0, 0.0, 1.0 / e)

    @classmethod
    def from_array(cls, m) -> "SL2Element":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def compose(self, other: "SL2Element") -> "SL2Element":
        """Matrix product, renormalised by sqrt(det) against drift."""
        m = self.as_array() @ other.as_array()
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        m /= math.sqrt(det)
        return SL2Element.from_array(m)

    def inverse(self) -> "SL2Element":
        return SL2Element(self.d, -self.b, -self.c, self.a)


@dataclass(frozen=True)
class SL2Polar:
    """Polar decomposition g = k_u R_r k_{u2} of an SL(2,R) element."""

    u: float
    r: float
    u2: float

    def __post_init__(self):
        if not (self.r >= 0.0):
            raise ValueError(f"SL2Polar requires r >= 0, got {self.r}")
        object.__setattr__(self, "u", float(self.u) % _TWO_PI)
        object.__setattr__(self, "u2", float(self.u2) % _TWO_PI)


def mobius_apply(g: SL2Element, z: HPoint) -> HPoint:
    """Apply the Moebius transformation of g to a point of H."""
    w = mobius_transform(g.as_array(), z.as_complex)
    return HPoint.from_complex(w)


def mobius_transform(mats, z):
    """Vectorised Moebius action: `mats` is (2,2) or (n,2,2), `z` complex scalar/array."""
    m = np.asarray(mats, dtype=float)
    z = np.asarray(z, dtype=complex)
    if m.ndim == 2:
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    else:
        a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    out = (a * z + b) / (c * z + d)
    if out.ndim == 0:
        return complex(out)
    return out


def rotate_point(u, z):
    """Action of k_u on complex points (vectorised in either argument)."""
    cu, su = np.cos(u), np.sin(u)
    return (cu * z + su) / (-su * z + cu)


def hyperbolic_distance(z: HPoint | complex, z2: HPoint | complex) -> float:
    """Hyperbolic distance via cosh d = 1 + |z - z'|^2 / (2 Im z Im z').

    Evaluated in log1p form, which stays accurate for nearly coincident
    points where the cross-ratio expression cancels catastrophically.
    """
    return float(hyperbolic_distance_array(_as_complex(z), _as_complex(z2)))


def hyperbolic_distance_array(z, z2):
    z = np.asarray(z, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    q = np.abs(z - z2) ** 2 / (2.0 * z.imag * z2.imag)
    return np.log1p(q + np.sqrt(q * (q + 2.0)))


def cross_ratio_distance(z: HPoint | complex, z2: HPoint | complex) -> float:
    """Distance through the invariant cross ratio; kept as a cross-check only."""
    w, w2 = _as_complex(z), _as_complex(z2)
    c = abs(w - w2) / abs(w - w2.conjugate())
    return math.log((1.0 + c) / (1.0 - c))


def to_polar(z: HPoint | complex) -> HPolar:
    """Canonical polar coordinates: r = d(z, i), u in [0, pi), u = 0 at the pole."""
    w = _as_complex(z)
    x, y = w.real, w.imag
    r = hyperbolic_distance(w, 1j)
    if r < 1e-12:
        return HPolar(0.0, 0.0)
    cosh_r = (1.0 + x * x + y * y) / (2.0 * y)
    # z = (sin(2u) sinh r + i) / (cos(2u) sinh r + cosh r)
    sin_psi = x / y
    cos_psi = 1.0 / y - cosh_r
    u = 0.5 * math.atan2(sin_psi, cos_psi) % math.pi
    if u >= math.pi - 1e-12:
        # rounding across the half-turn: u = pi labels the same ray as u = 0
        u = 0.0
    return HPolar(r, u)


def from_polar(p: HPolar | tuple) -> HPoint:
    """The point k_u(e^{-r} i), in closed form."""
    if isinstance(p, tuple):
        p = HPolar(*p)
    psi = 2.0 * p.u
    sh, ch = math.sinh(p.r), math.cosh(p.r)
    denom = math.cos(psi) * sh + ch
    return HPoint(math.sin(psi) * sh / denom, 1.0 / denom)


def polar_points(r, u):
    """Vectorised from_polar on arrays of radii/angles, as complex numbers."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    psi = 2.0 * u
    sh, ch = np.sinh(r), np.cosh(r)
    denom = np.cos(psi) * sh + ch
    return (np.sin(psi) * sh + 1j) / denom


def sl2_from_polar(p: SL2Polar) -> SL2Element:
    k1 = SL2Element.rotation(p.u)
    k2 = SL2Element.rotation(p.u2)
    return k1.compose(SL2Element.scaling(p.r)).compose(k2)


def sl2_to_polar(g: SL2Element) -> SL2Polar:
    """Decompose g = k_u R_r k_{u2} with r >= 0 unique and u reduced to [0, pi).

    Built on the singular value decomposition: the singular values of g are
    e^{r/2} and e^{-r/2}.
    """
    m = g.as_array()
    u_mat, s, vt = np.linalg.svd(m)
    if np.linalg.det(u_mat) < 0.0:
        u_mat[:, 1] = -u_mat[:, 1]
        vt[1, :] = -vt[1, :]
    r = math.log(s[0] / s[1])
    if r < 1e-12:
        # g is a rotation: angle from the matrix itself, second angle zero.
        return SL2Polar(math.atan2(m[0, 1], m[0, 0]) % _TWO_PI, 0.0, 0.0)
    # Conjugating by the quarter rotation swaps the singular values into
    # diag(e^{-r/2}, e^{r/2}) while keeping both factors rotations.
    j = np.array([[0.0, -1.0], [1.0, 0.0]])
    k1 = u_mat @ j
    k2 = j.T @ vt
    u = math.atan2(k1[0, 1], k1[0, 0]) % _TWO_PI
    u2 = math.atan2(k2[0, 1], k2[0, 0]) % _TWO_PI
    if u >= math.pi:
        # (u, u2) and (u - pi, u2 + pi) label the same decomposition
        u -= math.pi
        u2 = (u2 + math.pi) % _TWO_PI
    return SL2Polar(u, r, u2)


def geodesic_radius(r, s, phi):
    """Radial coordinate of e^s k_{-phi}(e^{-r} i).

    Closed form cosh R = cosh r cosh s - cos(2 phi) sinh r sinh s, rearranged
    as cosh(r-s) + 2 sin^2(phi) sinh r sinh s so both terms are nonnegative,
    and inverted with log1p.  Satisfies |r-s| <= R <= r+s.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    xm1 = 2.0 * np.square(np.sinh(0.5 * (r - s))) \
        + 2.0 * np.square(np.sin(phi)) * np.sinh(r) * np.sinh(s)
    out = np.log1p(xm1 + np.sqrt(xm1 * (xm1 + 2.0)))
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Cayley-type maps between the upper half plane, unit disk and right half plane
# ---------------------------------------------------------------------------

def cayley(z) -> complex:
    """Upper half plane -> unit disk, w = (z - i)/(z + i)."""
    w = _as_complex(z)
    if not w.imag > 0:
        raise ValueError("cayley requires Im z > 0")
    return (w - 1j) / (w + 1j)


def inverse_cayley(w) -> complex:
    """Unit disk -> upper half plane, z = i (1 + w)/(1 - w)."""
    w = complex(w)
    if not abs(w) < 1.0:
        raise ValueError("inverse_cayley requires |w| < 1")
    return 1j * (1.0 + w) / (1.0 - w)


def halfplane_to_righthalf(z) -> complex:
    """Upper half plane -> right half plane, zeta = -i z."""
    w = _as_complex(z)
    if not w.imag > 0:
        raise ValueError("halfplane_to_righthalf requires Im z > 0")
    return -1j * w


def righthalf_to_halfplane(zeta) -> complex:
    """Right half plane -> upper half plane, z = i zeta."""
    zeta = complex(zeta)
    if not zeta.real > 0:
        raise ValueError("righthalf_to_halfplane requires Re zeta > 0")
    return 1j * zeta


def righthalf_to_disk(zeta) -> complex:
    """Right half plane -> unit disk, w = (zeta - 1)/(zeta + 1)."""
    zeta = complex(zeta)
    if not zeta.real > 0:
        raise ValueError("righthalf_to_disk requires Re zeta > 0")
    return (zeta - 1.0) / (zeta + 1.0)


def disk_to_righthalf(w) -> complex:
    """Unit disk -> right half plane, zeta = (1 + w)/(1 - w)."""
    w = complex(w)
    if not abs(w) < 1.0:
        raise ValueError("disk_to_righthalf requires |w| < 1")
    return (1.0 + w) / (1.0 - w)


def _as_complex(z) -> complex:
    if isinstance(z, HPoint):
        return z.as_complex
    return complex(z)
