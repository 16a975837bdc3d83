"""Laplacian learning from GMRF signals under spectral-similarity constraints
taken from a reference graph's motif census."""
from .graph import Graph, laplacian, materialize, adjoint
from .motifs import motif_census, census_distance, rooted_ball
from .spectral import TEST_FUNCTIONS, SpectralTarget, c_g, eig_sym
from .generators import GraphModel, generate, sample_gmrf, empirical_covariance
from .solver import SolverConfig, SolverState, solve
from .baselines import run_baseline

__version__ = "0.1.0"
