"""Estimator tuning configuration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning knobs shared by the regularized estimators.

    ``lambda_grid`` must be strictly positive and sorted descending; ``None``
    selects the default 50-point log grid from lambda_max down to
    0.001 * lambda_max. ``omega`` is the nodewise penalty; ``None`` selects
    the rate default 0.5 * sqrt(log((p-1) d) / n).
    """

    lambda_grid: tuple[float, ...] | None = None
    cv_folds: int = 10
    bcd_tol: float = 1e-7
    bcd_max_iter: int = 10000
    omega: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if len(grid) == 0:
                raise InvalidInput("lambda_grid must be nonempty")
            arr = np.asarray(grid)
            if not (arr > 0).all():
                raise InvalidInput("lambda_grid must be strictly positive")
            if not (np.diff(arr) < 0).all() and len(grid) > 1:
                raise InvalidInput("lambda_grid must be sorted descending")
            object.__setattr__(self, "lambda_grid", grid)
        if self.cv_folds < 2:
            raise InvalidInput("cv_folds must be at least 2")
        if self.bcd_tol <= 0 or self.bcd_max_iter < 1:
            raise InvalidInput("bcd_tol must be positive and bcd_max_iter >= 1")
        if self.omega is not None and self.omega <= 0:
            raise InvalidInput("omega must be positive when given")
