"""Density deconvolution on the hyperbolic upper half plane.

Observations Y = M_eps(X) of points X in H, corrupted by random
determinant-one Moebius transformations eps with a known bi-invariant law,
are deconvolved by dividing empirical spectral transforms by the error's
transform and truncating at a cutoff.  The package provides the geometry,
the special functions and transform pair, samplers, cutoff selection,
validation oracles, and an impedance-measurement application.
"""

__version__ = "0.1.0"

from .deconv import (AmplificationError, DeconvConfig, DeconvResult,
                     PointwiseEstimator, cv_criterion_bruteforce, cv_cutoff,
                     default_cv_grid, estimate_pointwise, estimate_radial, mise,
                     nonnegative_projection, rate_cutoff, rate_cutoff_gaussian,
                     rate_cutoff_laplace)
from .distributions import (CustomError, ErrorModel, GaussianError, LaplaceError,
                            NegativityError, apply_error, f0_radial,
                            f0_radial_density, gaussian_radial,
                            gaussian_radial_density, gaussian_spectral,
                            laplace_radial, laplace_spectral, sample_gaussian_h,
                            sample_gaussian_sl2, sample_laplace, sobolev_norm)
from .geometry import (HPoint, HPolar, SL2Element, SL2Polar, cayley, from_polar,
                       geodesic_radius, hyperbolic_distance, inverse_cayley,
                       mobius_apply, sl2_from_polar, sl2_to_polar, to_polar)
from .hft import (RadialDensity, Sample, SpectralFunction, convolve_radial_oracle,
                  empirical_transform, empirical_transform_invariant,
                  forward_radial, inverse_radial, l2_norm_radial, plancherel_norm)
from .impedance import (ChainMatrix, Impedance, MeasurementSet, PolarMesh,
                        chain_apply, characteristic_impedance, deconvolve_impedances,
                        impedance_to_h, parallel, reflection_coefficient,
                        simulate_resistor_capacitor)
from .specfun import ConicalEvalConfig, conical_p, elliptic_k
