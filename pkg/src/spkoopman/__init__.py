"""Sparse identification of informative Koopman-invariant subspaces.

EDMD and kernel DMD (discrete and continuous time), a-posteriori mode
pruning, multi-task ElasticNet mode selection, DMD-family baselines and
cross-validated kernel hyperparameter search.
"""

from .edmd import fit_edmd_continuous, fit_edmd_discrete
from .features import HermiteDictionary, KernelSpec
from .kdmd import fit_kdmd_continuous, fit_kdmd_discrete
from .model import KoopmanModel
from .prune import PruneReport, prune, select_top
from .sparsify import SparsePath, alpha_sweep, multitask_elasticnet

__version__ = "0.1.0"

__all__ = [
    "HermiteDictionary",
    "KernelSpec",
    "KoopmanModel",
    "PruneReport",
    "SparsePath",
    "alpha_sweep",
    "fit_edmd_continuous",
    "fit_edmd_discrete",
    "fit_kdmd_continuous",
    "fit_kdmd_discrete",
    "multitask_elasticnet",
    "prune",
    "select_top",
]
