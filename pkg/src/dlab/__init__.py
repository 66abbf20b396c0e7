"""Exact experiments on inhomogeneous Diophantine approximation by irrational rotations."""

from .cf_core import ContinuedFraction, estimate_type, from_quotients, load_alpha, named
from .errors import DlabError
from .experiment import ExperimentConfig, preset, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ContinuedFraction",
    "DlabError",
    "ExperimentConfig",
    "estimate_type",
    "from_quotients",
    "load_alpha",
    "named",
    "preset",
    "run_experiment",
]
