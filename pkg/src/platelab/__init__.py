"""Numerical laboratory for the semilinear biharmonic Steklov problem.

Δ²u = |u|^{p-1}u in a disc or limaçon, u = 0 and Δu = (1-σ)κ u_n on the
boundary.  Radial solutions come from shooting, general ground states from a
Fourier-Bessel Galerkin descent.
"""
from .errors import (DivergenceError, InvalidInputError, NoDataError, NoSolutionError,
                     NoZeroError, NumericalError, OutOfPositivityWindowError, OutOfRangeError,
                     PlatelabError, RangeError)
from .radial import (RadialGrid, RadialProfile, check_monotonicity, green_log_reconstruct,
                     laplacian_to_gradient, radial_laplacian)
from .shooting import (ShootOptions, ShootingResult, SteklovParams, count_roots,
                       deficiency_profile, integrate_ivp, rescale, solve_radial,
                       steklov_residual)
from .spectral import (DescentOptions, GroundStateReport, SpectralBasis, SpectralField,
                       assemble_hsigma_form, bessel_zero, energy, evaluate, ground_state,
                       hessian_identity_check, linear_steklov_solve, nehari_scale,
                       normal_derivative_trace, poisson_solve, radial_fraction,
                       steklov_eigenvalue)
from .rearrange import (MeasuredSamples, PolarCells, RadialDecreasingProfile,
                        boundary_chain_check, schwarz_rearrange, talenti_compare)
from .limacon import (LimaconDomain, boundary_point, curvature, dist_to_boundary, green_bound,
                      is_convex, limacon_ground_state, pullback_energy, steklov_threshold)

__version__ = "0.1.0"
