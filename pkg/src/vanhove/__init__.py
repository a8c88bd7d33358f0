"""Weak-coupling (van Hove) limit of finite system-bath models: Dyson kernels,
their diagram expansion, the Davies generator and the bounds behind the limit."""

from .bounds import ClusteringData, Kernel, c_n, d_m, simplex_moment, verify_kn_bound, xi_eps
from .davies import ConvergenceReport, DaviesGenerator, cptp_check, davies_K, gkls_semigroup, spectral_average, time_average, vanhove_convergence
from .diagram import NoncrossingPartition, diagram_integrand, enumerate_nc, g_n, k_n_combinatorial, render_diagram
from .dyson import CapabilityError, dyson_integrand, k_lambda, k_n_bruteforce, reduced_dynamics, u_lambda
from .model import AssumptionError, ConfigError, SystemBathModel, bohr_decomposition, make_preset, validate
from .nz import ProjectionPair, build_projections
from .opcore import DimensionError, NumericError, superop_norm_estimate

__version__ = "0.1.0"
