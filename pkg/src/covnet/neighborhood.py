"""Neighborhood regressions: low-dimensional OLS and the group lasso.

Each node j is regressed on the remaining nodes. The unadjusted path uses
the plain linear model on mean-centered columns; the adjusted path regresses
the centered node on the stacked interaction designs V[k], k != j, either by
OLS (when n exceeds the parameter count) or by the group lasso with a whole
d-vector per node as one penalty group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .config import EstimatorConfig
from .data import Dataset
from .design import DesignBundle, column_sds
from .errors import (
    FoldTooSmall,
    InsufficientSamples,
    InvalidInput,
    NegativeLambda,
    ScaleMismatch,
    SingularDesign,
    ZeroVarianceColumn,
)


def stack_indices(p: int, d: int, exclude: int) -> np.ndarray:
    """Column indices of the stacked design with node ``exclude`` removed."""
    keep = [k for k in range(p) if k != exclude]
    return np.concatenate([np.arange(k * d, (k + 1) * d) for k in keep])


def _chol_inverse(G: np.ndarray) -> np.ndarray:
    try:
        c = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise SingularDesign("normal equations are singular") from None
    ident = np.eye(G.shape[0])
    w = np.linalg.solve(c, ident)
    return w.T @ w


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit of one node on the others.

    ``coefficients`` stacks one d-subvector per other node in ``others``
    order (d = 1 on the unadjusted path). ``covariance`` is the full
    homoskedastic sandwich; ``block(k)`` extracts the d-vector and its d x d
    covariance block for partner node k.
    """

    target: int
    coefficients: np.ndarray
    covariance: np.ndarray
    residual_variance: float
    d: int
    others: tuple[int, ...]

    def block(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        pos = self.others.index(k)
        blk = slice(pos * self.d, (pos + 1) * self.d)
        return self.coefficients[blk], self.covariance[blk, blk]


def fit_unadjusted_ols(data: Dataset, j: int) -> OlsFit:
    """OLS for the linear neighborhood model of node j (no covariates).

    Columns are mean-centered before fitting; the residual variance uses
    denominator n - (p - 1).
    """
    n, p = data.n, data.p
    if n <= p:
        raise InsufficientSamples(f"unadjusted OLS needs n > p ({n} <= {p})")
    others = tuple(k for k in range(p) if k != j)
    Z = data.X[:, others]
    Z = Z - Z.mean(axis=0)
    y = data.X[:, j] - data.X[:, j].mean()
    G = Z.T @ Z
    Ginv = _chol_inverse(G)
    beta = Ginv @ (Z.T @ y)
    resid = y - Z @ beta
    tau = float(resid @ resid) / (n - (p - 1))
    cov = tau * Ginv
    cov = 0.5 * (cov + cov.T)
    return OlsFit(j, beta, cov, tau, 1, others)


def fit_adjusted_ols(bundle: DesignBundle, j: int) -> OlsFit:
    """OLS for the varying-coefficient model of node j on the V[k] designs."""
    n, p, d = bundle.n, bundle.p, bundle.d
    m = (p - 1) * d
    if n <= m:
        raise InsufficientSamples(f"adjusted OLS needs n > (p-1)d ({n} <= {m})")
    others = tuple(k for k in range(p) if k != j)
    idx = stack_indices(p, d, j)
    M = bundle.stacked[:, idx]
    y = bundle.Xc[:, j]
    G = M.T @ M
    Ginv = _chol_inverse(G)
    alpha = Ginv @ (M.T @ y)
    resid = y - M @ alpha
    tau = float(resid @ resid) / (n - m)
    cov = tau * Ginv
    cov = 0.5 * (cov + cov.T)
    return OlsFit(j, alpha, cov, tau, d, others)


@dataclass(frozen=True)
class GroupLassoFit:
    """Group lasso fit of one node, in the scaled design's coordinates.

    ``alpha_tilde`` stacks one d-vector per node in ``others`` order.
    ``df_hat`` is the Breheny-Huang degrees-of-freedom estimate and
    ``residual_variance_tilde`` the residual variance with denominator
    n - df_hat.
    """

    target: int
    alpha_tilde: np.ndarray
    lam: float
    active_set: tuple[int, ...]
    df_hat: float
    residual_variance_tilde: float
    iterations: int
    converged: bool
    kkt_residual: float
    objective_trace: np.ndarray
    others: tuple[int, ...]
    d: int
    n: int
    scale_token: int

    def block(self, k: int) -> np.ndarray:
        pos = self.others.index(k)
        return self.alpha_tilde[pos * self.d : (pos + 1) * self.d]


def lambda_max(bundle: DesignBundle, j: int) -> float:
    """Smallest penalty that zeroes every group: max_k ||(1/n) V_k' Xc_j||_2."""
    d = bundle.d
    col = bundle.cross[:, j]
    norms = [
        np.linalg.norm(col[k * d : (k + 1) * d])
        for k in range(bundle.p)
        if k != j
    ]
    return float(max(norms))


def default_lambda_grid(lmax: float, num: int = 50, min_ratio: float = 1e-3) -> np.ndarray:
    """50 log-spaced penalties from lambda_max down to 0.001 * lambda_max."""
    return np.geomspace(lmax, lmax * min_ratio, num)


def _breheny_huang_df(bundle, j, alpha, resid, others):
    """Grouped df estimate: sum over active groups of 1 + (d-1) |a_k| / |z_k|."""
    n, d = bundle.n, bundle.d
    df = 0.0
    for pos, k in enumerate(others):
        ak = alpha[pos * d : (pos + 1) * d]
        nak = np.linalg.norm(ak)
        if nak == 0.0:
            continue
        Vk = bundle.V[k]
        zk = (Vk.T @ (resid + Vk @ ak)) / n
        nzk = np.linalg.norm(zk)
        df += 1.0 + (d - 1) * (nak / nzk if nzk > 0 else 0.0)
    return min(df, float(n))


def fit_group_lasso(bundle: DesignBundle, j: int, lam: float, cfg: EstimatorConfig) -> GroupLassoFit:
    """Group lasso for node j at penalty ``lam`` on a scaled bundle.

    Block coordinate descent on the groups k != j; each block update is the
    groupwise soft-threshold iterated to its fixed point. Non-convergence
    surfaces as converged=False rather than an exception.
    """
    if not bundle.scaled:
        raise ScaleMismatch("fit_group_lasso requires a scaled bundle")
    if lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    p, d, n = bundle.p, bundle.d, bundle.n
    others = tuple(k for k in range(p) if k != j)
    idx = stack_indices(p, d, j)
    G = bundle.gram[np.ix_(idx, idx)]
    b = bundle.cross[idx, j]
    alpha, sweeps, converged, obj = _kernels.bcd_group_lasso(
        G, b, d, lam, tol=cfg.bcd_tol, max_sweeps=cfg.bcd_max_iter
    )
    kkt = _kernels.kkt_residual(G, b, d, lam, alpha)
    resid = bundle.Xc[:, j] - bundle.stacked[:, idx] @ alpha
    df = _breheny_huang_df(bundle, j, alpha, resid, others)
    tau = float(resid @ resid) / max(n - df, 1.0)
    active = tuple(
        k for pos, k in enumerate(others)
        if np.linalg.norm(alpha[pos * d : (pos + 1) * d]) > 0
    )
    return GroupLassoFit(
        target=j,
        alpha_tilde=alpha,
        lam=float(lam),
        active_set=active,
        df_hat=float(df),
        residual_variance_tilde=tau,
        iterations=sweeps,
        converged=converged,
        kkt_residual=kkt,
        objective_trace=obj,
        others=others,
        d=d,
        n=n,
        scale_token=bundle.scale_token(),
    )


class CVResult(NamedTuple):
    lambda_hat: float
    lambdas: np.ndarray
    cv_errors: np.ndarray


def cross_validate(bundle: DesignBundle, j: int, cfg: EstimatorConfig) -> CVResult:
    """K-fold cross-validation of the group lasso penalty for node j.

    Folds are contiguous blocks of a seeded random permutation. Column
    scaling is recomputed on the training rows of every fold; the grid is
    fixed from the full-data scaled design. Ties break toward the larger
    penalty, and the path is warm-started along the descending grid.
    """
    if bundle.scaled:
        raise ScaleMismatch(
            "cross_validate expects the unscaled bundle; fold scales come from training rows"
        )
    n, p, d = bundle.n, bundle.p, bundle.d
    if n < cfg.cv_folds:
        raise FoldTooSmall(f"n={n} is smaller than cv_folds={cfg.cv_folds}")

    idx = stack_indices(p, d, j)
    M = bundle.stacked[:, idx]
    y = bundle.Xc[:, j]

    if cfg.lambda_grid is not None:
        grid = np.asarray(cfg.lambda_grid, dtype=np.float64)
    else:
        full_scales = column_sds(M)
        if (full_scales <= 0).any():
            raise ZeroVarianceColumn("constant interaction column in the design")
        col = (M / full_scales).T @ y / n
        lmax = max(
            np.linalg.norm(col[i * d : (i + 1) * d]) for i in range(p - 1)
        )
        grid = default_lambda_grid(lmax)

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, cfg.cv_folds)
    for f in folds:
        if len(f) < 2:
            raise FoldTooSmall(f"a fold has {len(f)} rows; need at least 2")

    sse = np.zeros(len(grid))
    mask = np.ones(n, dtype=bool)
    for fold in folds:
        mask[:] = True
        mask[fold] = False
        M_tr, y_tr = M[mask], y[mask]
        M_te, y_te = M[fold], y[fold]
        scales = column_sds(M_tr)
        if (scales <= 0).any():
            raise ZeroVarianceColumn("constant interaction column in a training fold")
        S_tr = M_tr / scales
        n_tr = S_tr.shape[0]
        G = S_tr.T @ S_tr / n_tr
        b = S_tr.T @ y_tr / n_tr
        alphas, _, _ = _kernels.bcd_path(
            G, b, d, grid, tol=cfg.bcd_tol, max_sweeps=cfg.bcd_max_iter
        )
        preds = (M_te / scales) @ alphas.T
        sse += ((preds - y_te[:, None]) ** 2).sum(axis=0)

    cv_errors = sse / n
    lambda_hat = float(grid[int(np.argmin(cv_errors))])
    return CVResult(lambda_hat, grid, cv_errors)
