"""Data generation, preprocessing, prediction and serialization."""

from .io import (
    export_model,
    ingest,
    load_model,
    model_from_dict,
    model_to_dict,
    read_snapshots,
    write_snapshots,
    write_table,
)
from .pod import PodBasis, pod_reduce
from .predict import Prediction, predict
from .snapshots import (
    Normalization,
    SnapshotSet,
    fit_normalization,
    interleave,
    normalize,
    stride_split,
)
from .systems import (
    fixed_point_eigenfunctions,
    fixed_point_rhs,
    fixed_point_solution,
    generate_fixed_point,
    generate_hopf,
    hopf_rhs,
    lhs_box,
)

__all__ = [
    "Normalization",
    "PodBasis",
    "Prediction",
    "SnapshotSet",
    "export_model",
    "fit_normalization",
    "fixed_point_eigenfunctions",
    "fixed_point_rhs",
    "fixed_point_solution",
    "generate_fixed_point",
    "generate_hopf",
    "hopf_rhs",
    "ingest",
    "interleave",
    "lhs_box",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "normalize",
    "pod_reduce",
    "predict",
    "read_snapshots",
    "stride_split",
    "write_snapshots",
    "write_table",
]
