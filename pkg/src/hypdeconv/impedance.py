"""Impedance-domain application: two-port chain actions, upper-half-plane
mappings, measurement ingestion, and the resistor-through-capacitor
deconvolution workflow.

An impedance Z with positive resistance sits in the right half plane; its
i-fold iZ lies in H.  Lossless two-ports act on i-folded impedances as real
determinant-one Moebius transformations, so randomly dispersed reactive
elements corrupt an observed load exactly in the deconvolution model handled
by this package.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .deconv import (DeconvConfig, PointwiseEstimator, cv_cutoff, default_cv_grid,
                     rate_cutoff_gaussian)
from .distributions import GaussianError, sample_gaussian_sl2
from .geometry import SL2Element, hyperbolic_distance_array, polar_points
from .hft import RadialDensity, Sample

_FMT = "%.17g"
_LOSSLESS_TOL = 1e-12


@dataclass(frozen=True)
class Impedance:
    """A complex impedance in ohms; physical elements have Re >= 0."""

    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if v.real < -_LOSSLESS_TOL * abs(v):
            raise ValueError(f"impedance {v} has negative resistance")
        object.__setattr__(self, "value", v)

    @property
    def is_lossless(self) -> bool:
        """Purely reactive (boundary) impedance."""
        return abs(self.value.real) <= _LOSSLESS_TOL * abs(self.value)


@dataclass(frozen=True)
class ChainMatrix:
    """2x2 chain matrix of a two-port, acting on load impedances as a
    Moebius transformation."""

    cha11: complex
    cha12: complex
    cha21: complex
    cha22: complex

    @property
    def det(self) -> complex:
        return self.cha11 * self.cha22 - self.cha12 * self.cha21

    @property
    def is_lossless(self) -> bool:
        """Real diagonal and purely imaginary off-diagonal entries."""
        scale = max(abs(self.cha11), abs(self.cha12), abs(self.cha21),
                    abs(self.cha22), 1e-300)
        return (abs(self.cha11.imag) <= _LOSSLESS_TOL * scale
                and abs(self.cha22.imag) <= _LOSSLESS_TOL * scale
                and abs(self.cha12.real) <= _LOSSLESS_TOL * scale
                and abs(self.cha21.real) <= _LOSSLESS_TOL * scale)

    def compose(self, other: "ChainMatrix") -> "ChainMatrix":
        """Cascading two-ports multiplies their chain matrices."""
        a = np.array([[self.cha11, self.cha12], [self.cha21, self.cha22]])
        b = np.array([[other.cha11, other.cha12], [other.cha21, other.cha22]])
        m = a @ b
        return ChainMatrix(m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def chain_apply(cha: ChainMatrix, z_load) -> Impedance:
    """Input impedance of the two-port terminated by z_load."""
    z = _as_value(z_load)
    denom = cha.cha21 * z + cha.cha22
    if denom == 0:
        raise ZeroDivisionError("singular chain denominator")
    return Impedance((cha.cha11 * z + cha.cha12) / denom)


def sl2_from_chain(cha: ChainMatrix, tol: float = 1e-9) -> SL2Element:
    """The real determinant-one element acting on i-folded impedances.

    Conjugating the chain action by z -> iz sends [[a,b],[c,d]] to
    [[a, ib],[-ic, d]], which is real exactly for lossless two-ports.
    """
    m = np.array([[cha.cha11, 1j * cha.cha12], [-1j * cha.cha21, cha.cha22]])
    if np.max(np.abs(m.imag)) > tol * max(np.max(np.abs(m)), 1e-300):
        raise ValueError("chain matrix is not lossless")
    real = m.real
    det = real[0, 0] * real[1, 1] - real[0, 1] * real[1, 0]
    if det <= 0:
        raise ValueError("conjugated chain matrix has nonpositive determinant")
    real = real / math.sqrt(det)
    return SL2Element(real[0, 0], real[0, 1], real[1, 0], real[1, 1])


def reflection_coefficient(z_load, z_c) -> complex:
    """(Z_L - Z_c)/(Z_L + Z_c), the unit-disk image of the normalised load."""
    z = _as_value(z_load)
    zc = _as_value(z_c)
    if z + zc == 0:
        raise ZeroDivisionError("Z_L + Z_c vanishes")
    return (z - zc) / (z + zc)


def impedance_to_h(z, z_c):
    """Normalised i-folded impedance i Z/Z_c as a point of H."""
    w = 1j * _as_value(z) / _as_value(z_c)
    if not w.imag > 0:
        raise ValueError(f"normalised impedance {w} leaves the upper half plane")
    return w


def h_to_impedance(w, z_c) -> complex:
    """Inverse of impedance_to_h: Z = -i w Z_c."""
    return -1j * complex(w) * _as_value(z_c)


def parallel(z1, z2) -> Impedance:
    """Parallel combination Z1 Z2 / (Z1 + Z2)."""
    a, b = _as_value(z1), _as_value(z2)
    if a + b == 0:
        raise ZeroDivisionError("parallel impedances cancel")
    return Impedance(a * b / (a + b))


def capacitor_impedance(capacitance_f: float, freq_hz: float) -> complex:
    """Ideal capacitor impedance 1/(i omega C)."""
    return 1.0 / (1j * 2.0 * math.pi * freq_hz * capacitance_f)


# ---------------------------------------------------------------------------
# measurements
# ---------------------------------------------------------------------------

@dataclass
class MeasurementSet:
    """Single-frequency impedance measurements with ingestion metadata."""

    freq_hz: np.ndarray
    z: np.ndarray
    source: str = ""
    characteristic_impedance: complex | str = "euclidean-mean"

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.freq_hz, dtype=float))
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        if f.size == 0 or f.shape != z.shape:
            raise ValueError("need matching nonempty frequency and impedance arrays")
        if np.any(f <= 0.0):
            raise ValueError("frequencies must be positive")
        self.freq_hz = f
        self.z = z

    def __len__(self) -> int:
        return int(self.z.size)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["freq_hz", "re_ohm", "im_ohm"])
            for f, z in zip(self.freq_hz, self.z):
                w.writerow([_FMT % f, _FMT % z.real, _FMT % z.imag])

    @classmethod
    def from_csv(cls, path, source: str | None = None):
        """Parse measurements; rows with Re <= 0 or malformed fields are
        rejected and reported as (line_number, reason) pairs."""
        freqs, zs, rejected = [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValueError("empty measurement file")
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    f, re_ohm, im_ohm = (float(c) for c in row[:3])
                except (ValueError, IndexError):
                    rejected.append((lineno, "malformed row"))
                    continue
                if f <= 0.0:
                    rejected.append((lineno, "nonpositive frequency"))
                    continue
                if re_ohm <= 0.0:
                    rejected.append((lineno, "nonpositive resistance"))
                    continue
                freqs.append(f)
                zs.append(complex(re_ohm, im_ohm))
        if not freqs:
            raise ValueError("no valid measurement rows")
        ms = cls(np.array(freqs), np.array(zs), source=source or str(path))
        return ms, rejected


def characteristic_impedance(ms: MeasurementSet, method="euclidean-mean") -> complex:
    """Normalisation impedance: the Euclidean (arithmetic) mean, or a fixed value."""
    if isinstance(method, str):
        if method.replace("_", "-") != "euclidean-mean":
            raise ValueError(f"unknown method {method!r}")
        return complex(np.mean(ms.z))
    return complex(method)


def estimate_dispersion(points) -> float:
    """Dispersion of a Gaussian corruption from normalised points near i.

    cosh of the distance to i is an eigenfunction of the hyperbolic
    Laplacian with eigenvalue 2, so its mean under the Gaussian law is
    exactly e^{2 rho}; inverting the moment equation gives rho directly.
    """
    z = np.asarray(points, dtype=complex)
    mean_cosh = float(np.mean(np.cosh(hyperbolic_distance_array(z, 1j))))
    return 0.5 * math.log(max(mean_cosh, 1.0))


# ---------------------------------------------------------------------------
# synthetic resistor-through-capacitor study
# ---------------------------------------------------------------------------

@dataclass
class SimulatedImpedances:
    measurements: MeasurementSet
    resistors: np.ndarray
    capacitors: np.ndarray
    mean_capacitor: complex
    rho_eps: float


def simulate_resistor_capacitor(n: int, rho_eps: float, seed: int,
                                r_range=(13.5, 17.7), capacitance_f: float = 22e-6,
                                freq_hz: float = 1000.0) -> SimulatedImpedances:
    """Random resistors observed in parallel with randomly dispersed capacitors.

    Resistors are uniform on r_range; each capacitor's i-folded impedance is
    the nominal one pushed by a bi-invariant Gaussian(rho_eps) group element,
    Z i = Z_nom M_eps(i).  Observations are W = R Z / (R + Z) at freq_hz.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    ss = np.random.SeedSequence(seed)
    child_r, child_eps = ss.spawn(2)
    rng = np.random.default_rng(child_r)
    resistors = rng.uniform(r_range[0], r_range[1], size=n)
    z_nom = capacitor_impedance(capacitance_f, freq_hz)
    eps = sample_gaussian_sl2(rho_eps, n, child_eps)
    a, b, c, d = eps[:, 0, 0], eps[:, 0, 1], eps[:, 1, 0], eps[:, 1, 1]
    eps_i = (a * 1j + b) / (c * 1j + d)
    capacitors = -1j * z_nom * eps_i
    w = resistors * capacitors / (resistors + capacitors)
    ms = MeasurementSet(np.full(n, freq_hz), w, source="simulated")
    return SimulatedImpedances(ms, resistors, capacitors,
                               complex(np.mean(capacitors)), rho_eps)


# ---------------------------------------------------------------------------
# mesh deconvolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarMesh:
    """Hyperbolic polar evaluation mesh: angles x radii around i."""

    angles: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        r = np.asarray(self.radii, dtype=float)
        if a.size == 0 or r.size == 0:
            raise ValueError("mesh needs at least one angle and one radius")
        if np.any(r <= 0.0) or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be positive and ascending")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "radii", r)

    def describe(self) -> dict:
        return {"n_angles": int(self.angles.size), "n_radii": int(self.radii.size),
                "r_min": float(self.radii[0]), "r_max": float(self.radii[-1])}


def default_polar_mesh(n_angles: int = 16, n_radii: int = 24,
                       r_min: float = 0.01, r_max: float = 1.5) -> PolarMesh:
    angles = 2.0 * math.pi * np.arange(n_angles) / n_angles
    radii = np.geomspace(r_min, r_max, n_radii)
    return PolarMesh(angles, radii)


@dataclass
class ImpedanceDeconvResult:
    """Per-angle radial slices of the deconvolved density.

    estimates[a, j] is the raw density estimate at mesh point
    (angles[a], radii[j]); slices carry the radial measure factor sinh r,
    matching the density-times-measure presentation along fixed angles.
    """

    mesh: PolarMesh
    estimates: np.ndarray
    z_c: complex
    rho_eps: float
    cutoff_used: float
    n_used: int
    rejected: int

    def slices(self) -> list[RadialDensity]:
        weight = np.sinh(self.mesh.radii)
        return [RadialDensity(self.mesh.radii, row * weight, measure_weighted=True)
                for row in self.estimates]

    def mass_weights(self) -> np.ndarray:
        """Positive-part probability mass per mesh cell (density x measure)."""
        dr = np.gradient(self.mesh.radii)
        du = 2.0 * math.pi / self.mesh.angles.size
        w = np.maximum(self.estimates, 0.0) * np.sinh(self.mesh.radii)[None, :]
        return w * dr[None, :] * du

    def write_csvs(self, out_dir) -> list[str]:
        """One `r,density` file per mesh angle; returns the file names."""
        import os

        names = []
        for idx, sl in enumerate(self.slices()):
            name = f"angle_{idx:02d}.csv"
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["r", "density"])
                for r, v in zip(sl.r_grid, sl.values):
                    w.writerow([_FMT % r, _FMT % v])
            names.append(name)
        return names


def deconvolve_impedances(ms: MeasurementSet, rho_eps: float, mesh: PolarMesh | None = None,
                          zc="euclidean-mean", cutoff="rate", t_nodes: int = 256,
                          k_nodes: int = 64) -> ImpedanceDeconvResult:
    """Deconvolve normalised impedance observations on a polar mesh.

    Measurements are normalised by the characteristic impedance, i-folded
    into H, and fed to the full (angle-dependent) pointwise estimator with a
    Gaussian(rho_eps) error law; cutoff is 'rate', 'cv', or a fixed number.
    """
    if not rho_eps > 0.0:
        raise ValueError("rho_eps must be positive")
    mesh = mesh or default_polar_mesh()
    z_c = characteristic_impedance(ms, zc)
    points = 1j * ms.z / z_c
    inside = points.imag > 0.0
    rejected = int(np.sum(~inside))
    if not np.any(inside):
        raise ValueError("no normalised measurement lies in the upper half plane")
    sample = Sample(points[inside])
    n = len(sample)
    error = GaussianError(rho_eps)
    if cutoff == "rate":
        T = rate_cutoff_gaussian(n, rho_eps)
    elif cutoff == "cv":
        T = cv_cutoff(sample, error, default_cv_grid(n, rho_eps))
    else:
        T = float(cutoff)
    cfg = DeconvConfig(cutoff_T=T, error=error, t_nodes=t_nodes)
    estimator = PointwiseEstimator(sample, cfg, k_nodes=k_nodes, transform="full")
    estimates = np.empty((mesh.angles.size, mesh.radii.size))
    for ai, angle in enumerate(mesh.angles):
        zs = polar_points(mesh.radii, np.full(mesh.radii.size, angle))
        estimates[ai] = estimator.evaluate_many(zs)
    return ImpedanceDeconvResult(mesh, estimates, z_c, rho_eps, T, n, rejected)


def _as_value(z) -> complex:
    if isinstance(z, Impedance):
        return z.value
    return complex(z)
