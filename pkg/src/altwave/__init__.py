"""Spectral homogenization of a planar waveguide with frequently alternating
Dirichlet and Neumann boundary conditions: analytic asymptotics, the boundary
corrector and a finite-element oracle for the Floquet cell problem."""

from .params import ModelParams, classify_regime, eta_from, mu_from, zeta_odd
from .homogenized import Lambda_n, eigenfunction, green_kernel
from .layers import X_closed, Y_closed, Z_series, theta, theta_taylor
from .bottom import expand_Lambda_series, solve_Lambda, approx_eigenfunction
from .corrector import CorrectorParams, verify_corrector
from .fem import CellConfig, build_mesh, assemble, solve_eigs, converge_eigs

__version__ = "0.1.0"
