"""Covariate-adjusted differential analysis of high-dimensional networks."""

from .basis import BasisKind, BasisSpec, basis_by_name, cubic_basis, custom_basis, expand, linear_basis
from .config import EstimatorConfig
from .data import Dataset, Group, Schema, load_dataset, write_dataset_csv
from .design import DesignBundle, build_design, scale_columns, unscale_coefficients

__version__ = "0.1.0"

__all__ = [
    "BasisKind",
    "BasisSpec",
    "Dataset",
    "DesignBundle",
    "EstimatorConfig",
    "Group",
    "Schema",
    "basis_by_name",
    "build_design",
    "cubic_basis",
    "custom_basis",
    "expand",
    "linear_basis",
    "load_dataset",
    "scale_columns",
    "unscale_coefficients",
    "write_dataset_csv",
]
