"""Helgason-Fourier transform layer for SO(2)-invariant functions on H.

Conventions: for a rotation-invariant f the transform pair is

    F(t) = 2 pi int_0^inf f(e^{-r} i) P_{-1/2+it}(cosh r) sinh r dr,
    f(e^{-r} i) = (1/4 pi) int F(t) P_{-1/2+it}(cosh r) t tanh(pi t) dt,

with the Plancherel weight t tanh(pi t) dt du / (8 pi^2) on the critical
line s = 1/2 + it.  Probability densities integrate to one against
2 pi sinh(r) dr.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .geometry import rotate_point
from .quadrature import gauss_legendre_cells, gauss_legendre_panels
from .specfun import ConicalEvalConfig, conical_p_table

_FMT = "%.17g"


class TailMassWarning(UserWarning):
    """A truncated integral left more than the tolerated mass outside the grid."""


class ConjugateSymmetryError(ValueError):
    """Tabulated spectral values violate value(-t) = conj(value(t))."""


@dataclass(frozen=True)
class SpectralFunction:
    """Tabulated values of t -> F(1/2 + it) on a symmetric ascending grid."""

    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or t.size == 0 or v.shape != t.shape:
            raise ValueError("t_grid and values must be matching 1-d arrays")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly ascending")
        scale = max(1.0, float(np.max(np.abs(t))))
        if np.max(np.abs(t + t[::-1])) > 1e-9 * scale:
            raise ValueError("t_grid must be symmetric about 0")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)

    def conjugate_symmetry_residual(self) -> float:
        """max |value(-t) - conj(value(t))| over the grid."""
        return float(np.max(np.abs(self.values[::-1] - np.conj(self.values))))

    def interpolator(self):
        """Cubic interpolant of the tabulated values (complex, zero outside)."""
        re = CubicSpline(self.t_grid, self.values.real)
        im = CubicSpline(self.t_grid, self.values.imag)
        lo, hi = self.t_grid[0], self.t_grid[-1]

        def fn(t):
            t = np.asarray(t, dtype=float)
            inside = (t >= lo) & (t <= hi)
            out = np.zeros(t.shape, dtype=complex)
            out[inside] = re(t[inside]) + 1j * im(t[inside])
            return out

        return fn

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, v in zip(self.t_grid, self.values):
                w.writerow([_FMT % t, _FMT % v.real, _FMT % v.imag])

    @classmethod
    def from_csv(cls, path) -> "SpectralFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2])


@dataclass(frozen=True)
class RadialDensity:
    """Tabulated rotation-invariant function r -> f(e^{-r} i).

    With measure_weighted=True the stored values are instead the weighted
    profile 2 pi sinh(r) f(e^{-r} i), the form in which probability densities
    integrate to one over dr.
    """

    r_grid: np.ndarray
    values: np.ndarray
    measure_weighted: bool = False

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.size < 2 or v.shape != r.shape:
            raise ValueError("r_grid and values must be matching 1-d arrays")
        if r[0] < 0.0 or np.any(np.diff(r) <= 0):
            raise ValueError("r_grid must be ascending and start at r >= 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "values", v)

    def interpolator(self):
        """Monotone cubic interpolant; zero outside the tabulated range."""
        pchip = PchipInterpolator(self.r_grid, self.values, extrapolate=False)
        lo, hi = self.r_grid[0], self.r_grid[-1]

        def fn(r):
            r = np.asarray(r, dtype=float)
            out = pchip(np.clip(r, lo, hi))
            out = np.where((r < lo) | (r > hi), 0.0, out)
            return out

        return fn

    def weighted(self) -> "RadialDensity":
        """The measure-weighted profile 2 pi sinh(r) f."""
        if self.measure_weighted:
            return self
        return RadialDensity(self.r_grid, 2.0 * math.pi * np.sinh(self.r_grid) * self.values,
                             measure_weighted=True)

    def total_mass(self, order: int = 8) -> float:
        nodes, wts = gauss_legendre_cells(self.r_grid, order)
        vals = self.interpolator()(nodes)
        if self.measure_weighted:
            return float(np.sum(wts * vals))
        return float(2.0 * math.pi * np.sum(wts * vals * np.sinh(nodes)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "value"])
            for r, v in zip(self.r_grid, self.values):
                w.writerow([_FMT % r, _FMT % v])

    @classmethod
    def from_csv(cls, path, measure_weighted: bool = False) -> "RadialDensity":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], measure_weighted=measure_weighted)


@dataclass(frozen=True)
class Sample:
    """Observed points of the upper half plane, stored as complex numbers."""

    points: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if z.size == 0:
            raise ValueError("sample must be nonempty")
        if np.any(~(z.imag > 0.0)):
            raise ValueError("all sample points must satisfy Im z > 0")
        object.__setattr__(self, "points", z)

    def __len__(self) -> int:
        return int(self.points.size)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im"])
            for z in self.points:
                w.writerow([_FMT % z.real, _FMT % z.imag])

    @classmethod
    def from_csv(cls, path) -> "Sample":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0] + 1j * data[:, 1])


# ---------------------------------------------------------------------------
# forward / inverse transforms
# ---------------------------------------------------------------------------

def forward_radial(f: RadialDensity, t_grid, cfg: ConicalEvalConfig | None = None,
                   order: int = 8, tail_tol: float = 1e-8) -> SpectralFunction:
    """Forward transform of a tabulated radial function onto a symmetric t grid.

    Uses the factorisation of the radial transform into an Abel transform,

        W(u) = int_u^inf f(r) sinh(r) (cosh r - cosh u)^{-1/2} dr,

    followed by the cosine transform sqrt(8) int W(u) cos(tu) du, which
    follows from the cosine representation of the conical function and scales
    far better than a per-(t, r) conical table.
    """
    if f.measure_weighted:
        raise ValueError("forward_radial expects an unweighted radial profile")
    t = np.asarray(t_grid, dtype=float)
    r_max = float(f.r_grid[-1])
    fn = f.interpolator()
    t_top = float(np.max(np.abs(t))) if t.size else 0.0
    n_panels = max(16, math.ceil(4.0 * r_max), math.ceil(t_top * r_max / 3.0))
    u, wu = gauss_legendre_panels(0.0, r_max, n_panels, order)
    w_abel = _abel_of_radial(fn, u, r_max)
    values = (np.cos(t[:, None] * u[None, :]) @ (wu * w_abel)).astype(complex)
    values *= math.sqrt(8.0)
    # tail monitor: P is at most 1, so the last-cell mass bounds its contribution
    lo = float(f.r_grid[-2])
    rt, wt = gauss_legendre_panels(lo, r_max, 4, order)
    tail = 2.0 * math.pi * float(np.sum(wt * np.abs(fn(rt)) * np.sinh(rt)))
    scale = max(float(np.max(np.abs(values))), 1e-300)
    if tail > tail_tol * scale:
        warnings.warn(
            f"integrand tail beyond r={lo:g} carries {tail/scale:.2e} "
            "of the transform; extend the r grid", TailMassWarning)
    return SpectralFunction(t, values)


def _abel_of_radial(fn, u_nodes, r_max, n_panels: int = 24, order: int = 8):
    """int_u^{r_max} fn(r) sinh(r) (cosh r - cosh u)^{-1/2} dr via r = u + v^2."""
    out = np.empty(u_nodes.size, dtype=float)
    for i, u in enumerate(u_nodes):
        span = r_max - u
        if span <= 0.0:
            out[i] = 0.0
            continue
        v, wv = gauss_legendre_panels(0.0, math.sqrt(span), n_panels, order)
        v2 = v * v
        r = u + v2
        denom = np.sqrt(2.0 * np.sinh(0.5 * v2) * np.sinh(u + 0.5 * v2))
        out[i] = float(np.sum(wv * 2.0 * v * fn(r) * np.sinh(r) / denom))
    return out


def inverse_radial(F: SpectralFunction, r_grid, cfg: ConicalEvalConfig | None = None,
                   order: int = 8, imag_tol: float = 1e-6,
                   symmetry_tol: float = 1e-6) -> RadialDensity:
    """Inverse transform of tabulated spectral values, truncated at the grid ends."""
    scale = max(float(np.max(np.abs(F.values))), 1e-300)
    if F.conjugate_symmetry_residual() > symmetry_tol * scale:
        raise ConjugateSymmetryError(
            "spectral values are not conjugate-symmetric; refine the t grid")
    nodes, wts = gauss_legendre_cells(F.t_grid, order)
    fn = F.interpolator()
    return _inverse_from_nodes(fn(nodes), nodes, wts, r_grid, cfg, imag_tol)


def inverse_radial_callable(F_fn, t_max: float, r_grid, n_panels: int = 64,
                            cfg: ConicalEvalConfig | None = None, order: int = 8,
                            imag_tol: float = 1e-6) -> RadialDensity:
    """Inverse transform with F evaluated exactly at the quadrature nodes."""
    nodes, wts = gauss_legendre_panels(-t_max, t_max, n_panels, order)
    return _inverse_from_nodes(np.asarray(F_fn(nodes), dtype=complex),
                               nodes, wts, r_grid, cfg, imag_tol)


def _inverse_from_nodes(fvals, nodes, wts, r_grid, cfg, imag_tol):
    r = np.asarray(r_grid, dtype=float)
    table = conical_p_table(nodes, r, cfg)
    weight = wts * nodes * np.tanh(math.pi * nodes) / (4.0 * math.pi)
    out = (fvals * weight) @ table
    scale = max(float(np.max(np.abs(out))), 1e-300)
    resid = float(np.max(np.abs(out.imag)))
    if resid > imag_tol * scale:
        raise ConjugateSymmetryError(
            f"inverse transform has imaginary residual {resid:.3e}")
    return RadialDensity(r, out.real)


# ---------------------------------------------------------------------------
# empirical transforms
# ---------------------------------------------------------------------------

def empirical_transform(sample: Sample, t: float, k_angle: float = 0.0) -> complex:
    """(1/n) sum_j Im(k(Y_j))^(1/2 - it), the raw spectral estimate at one node."""
    return complex(empirical_transform_grid(sample, [t], k_angle)[0])


def empirical_transform_invariant(sample: Sample, t: float) -> complex:
    """The rotation-invariant estimate, k fixed to the identity."""
    return empirical_transform(sample, t, 0.0)


def empirical_transform_grid(sample: Sample, t_grid, k_angle: float = 0.0,
                             chunk: int = 65536) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    z = sample.points if k_angle == 0.0 else rotate_point(k_angle, sample.points)
    y = z.imag
    amp = np.sqrt(y)
    ly = np.log(y)
    acc = np.zeros(t.size, dtype=complex)
    for lo in range(0, y.size, chunk):
        phase = t[:, None] * ly[None, lo:lo + chunk]
        a = amp[lo:lo + chunk]
        acc += (np.cos(phase) @ a) - 1j * (np.sin(phase) @ a)
    return acc / y.size


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def plancherel_norm(F: SpectralFunction, order: int = 8) -> float:
    """L2(dz) norm computed in the spectral domain.

    For rotation-invariant f the angular integral contributes 2 pi, leaving
    (1/4 pi) int |F|^2 t tanh(pi t) dt.
    """
    nodes, wts = gauss_legendre_cells(F.t_grid, order)
    vals = np.abs(F.interpolator()(nodes)) ** 2
    integral = np.sum(wts * vals * nodes * np.tanh(math.pi * nodes)) / (4.0 * math.pi)
    return math.sqrt(max(integral, 0.0))


def l2_norm_radial(f: RadialDensity, order: int = 8) -> float:
    """L2(dz) norm of a radial profile: sqrt(2 pi int f^2 sinh r dr)."""
    if f.measure_weighted:
        raise ValueError("l2_norm_radial expects an unweighted radial profile")
    nodes, wts = gauss_legendre_cells(f.r_grid, order)
    vals = f.interpolator()(nodes)
    return math.sqrt(2.0 * math.pi * float(np.sum(wts * vals * vals * np.sinh(nodes))))


# ---------------------------------------------------------------------------
# direct convolution oracle
# ---------------------------------------------------------------------------

_CONVOLUTION_CONSTANT: float | None = None


def calibrate_convolution_constant(force: bool = False) -> float:
    """One-time calibration of the convolution oracle's overall constant.

    The polar-coordinate convolution formula leaves a constant open because
    the angle parametrisations cover the group twice; the constant is pinned
    against the heat semigroup (two Gaussians convolve to the Gaussian of
    summed dispersions) and comes out at 1/(2 pi).
    """
    global _CONVOLUTION_CONSTANT
    if _CONVOLUTION_CONSTANT is not None and not force:
        return _CONVOLUTION_CONSTANT
    from .distributions import gaussian_radial_density

    rho1, rho2 = 0.08, 0.12
    r_eval = np.linspace(0.0, 1.2, 25)
    f_err = gaussian_radial_density(rho1)
    h = gaussian_radial_density(rho2)
    raw = _convolve_raw(f_err, h, r_eval)
    target = gaussian_radial_density(rho1 + rho2, r_max=float(f_err.r_grid[-1]
                                                              + h.r_grid[-1]))
    tvals = target.interpolator()(r_eval)
    _CONVOLUTION_CONSTANT = float(np.sum(raw * tvals) / np.sum(raw * raw))
    return _CONVOLUTION_CONSTANT


def convolve_radial_oracle(f_err: RadialDensity, h: RadialDensity, r_grid,
                           constant: float | None = None, n_phi: int = 128,
                           s_order: int = 8, mass_tol: float = 1e-3) -> RadialDensity:
    """Direct polar-coordinate convolution of a bi-invariant error profile with
    a rotation-invariant density, used as an oracle for the spectral product.

    (f*h)(e^{-r} i) = c * 2 pi int_0^{2pi} int_0^inf f(e^{-s} i)
                        h(e^{-R(r,s,phi)} i) sinh s ds dphi,

    where R is the geodesic radius of e^s k_{-phi}(e^{-r} i) and c is the
    calibrated constant (see calibrate_convolution_constant).
    """
    if constant is None:
        constant = calibrate_convolution_constant()
    r = np.asarray(r_grid, dtype=float)
    out = constant * _convolve_raw(f_err, h, r, n_phi=n_phi, s_order=s_order)
    result = RadialDensity(r, out)
    expected = f_err.total_mass() * h.total_mass()
    got = result.total_mass()
    if abs(got - expected) > mass_tol * abs(expected):
        warnings.warn(
            f"convolution dropped {abs(got - expected)/abs(expected):.2e} of the "
            "mass; extend the output r grid", TailMassWarning)
    return result


def _convolve_raw(f_err: RadialDensity, h: RadialDensity, r, n_phi: int = 128,
                  s_order: int = 8) -> np.ndarray:
    if f_err.measure_weighted or h.measure_weighted:
        raise ValueError("convolve_radial_oracle expects unweighted profiles")
    s_nodes, s_wts = gauss_legendre_cells(f_err.r_grid, s_order)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    w_phi = 2.0 * math.pi / n_phi
    f_vals = f_err.interpolator()(s_nodes)
    h_fn = h.interpolator()
    sinh_s = np.sinh(s_nodes)
    # cosh R = cosh(r-s) + 2 sin^2(phi) sinh r sinh s, assembled without cancellation
    sin2 = 2.0 * np.square(np.sin(phi))
    out = np.empty(r.size, dtype=float)
    for i, ri in enumerate(r):
        xm1 = 2.0 * np.square(np.sinh(0.5 * (ri - s_nodes)))[:, None] \
            + sin2[None, :] * (math.sinh(ri) * sinh_s)[:, None]
        radius = np.log1p(xm1 + np.sqrt(xm1 * (xm1 + 2.0)))
        hvals = h_fn(radius.ravel()).reshape(radius.shape)
        inner = hvals @ np.full(n_phi, w_phi)
        out[i] = 2.0 * math.pi * np.sum(s_wts * f_vals * sinh_s * inner)
    return out
