"""Bias correction for the group lasso via nodewise regressions.

For a target pair (j, k) the columns of V[k] are regressed on the remaining
design blocks with a group penalty, giving an approximate inverse of the
Gram matrix one block row at a time. The de-biased coefficient adds the
one-step correction C^{-1} (1/n) R' r to the group lasso estimate, where R
is the nodewise residual matrix and r the primary fit's residual; its
covariance is the plug-in sandwich (1/n^2) tau C^{-1} R'R C^{-T}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import EstimatorConfig
from .design import DesignBundle
from .errors import IllConditionedC, ScaleMismatch
from .neighborhood import GroupLassoFit, stack_indices

_COND_LIMIT = 1e10


class Source(enum.Enum):
    NEIGHBORHOOD = "neighborhood_selection"
    SCORE_MATCHING = "score_matching"


def default_omega(p: int, d: int, n: int) -> float:
    """Rate-matched nodewise penalty 0.5 * sqrt(log((p-1) d) / n)."""
    return 0.5 * math.sqrt(math.log((p - 1) * d) / n)


@dataclass(frozen=True)
class NodewiseInverse:
    """One block row of the approximate inverse Gram for pair (j, k)."""

    target: int
    partner: int
    Gamma_tilde: dict[int, np.ndarray]
    C_tilde: np.ndarray
    omega: float
    residual_matrix: np.ndarray
    kkt_residual: float
    scale_token: int


@dataclass(frozen=True)
class DebiasedCoefficient:
    """De-biased coefficient and covariance for pair (j, k), original scale."""

    target: int
    partner: int
    alpha_check: np.ndarray
    Omega_check: np.ndarray
    source: Source

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "partner": self.partner,
            "alpha": self.alpha_check.tolist(),
            "omega": self.Omega_check.tolist(),
            "source": self.source.value,
        }


def fit_nodewise(
    bundle: DesignBundle, j: int, k: int, omega: float, cfg: EstimatorConfig
) -> NodewiseInverse:
    """Group-penalized multi-response regression of V[k] on the other blocks.

    The trace-form objective is column separable, so each of the d columns
    is an independent vector group lasso at penalty ``omega`` over the blocks
    l not in {j, k}.
    """
    if not bundle.scaled:
        raise ScaleMismatch("fit_nodewise requires a scaled bundle")
    if omega <= 0:
        raise IllConditionedC(f"omega must be positive, got {omega}")
    p, d, n = bundle.p, bundle.d, bundle.n
    others = tuple(l for l in range(p) if l not in (j, k))

    Vk = bundle.V[k]
    if others:
        idx = np.concatenate([np.arange(l * d, (l + 1) * d) for l in others])
        G = bundle.gram[np.ix_(idx, idx)]
        kcols = np.arange(k * d, (k + 1) * d)
        B = bundle.gram[np.ix_(idx, kcols)]
        coefs = np.empty((len(idx), d))
        kkt = 0.0
        for c in range(d):
            gamma, _, _, _ = _kernels.bcd_group_lasso(
                G, B[:, c], d, omega, tol=cfg.bcd_tol, max_sweeps=cfg.bcd_max_iter
            )
            kkt = max(kkt, _kernels.kkt_residual(G, B[:, c], d, omega, gamma))
            coefs[:, c] = gamma
        R = Vk - bundle.stacked[:, idx] @ coefs
        Gamma = {
            l: coefs[pos * d : (pos + 1) * d, :].copy() for pos, l in enumerate(others)
        }
    else:
        R = Vk.copy()
        Gamma = {}
        kkt = 0.0

    C = (R.T @ Vk) / n
    if np.linalg.cond(C) >= _COND_LIMIT:
        raise IllConditionedC(
            f"C for pair ({j}, {k}) has condition number >= {_COND_LIMIT:.0e}; "
            "omega may be too small"
        )
    return NodewiseInverse(
        target=j,
        partner=k,
        Gamma_tilde=Gamma,
        C_tilde=C,
        omega=float(omega),
        residual_matrix=R,
        kkt_residual=float(kkt),
        scale_token=bundle.scale_token(),
    )


def debias(
    fit: GroupLassoFit, nodewise: NodewiseInverse, bundle: DesignBundle
) -> DebiasedCoefficient:
    """De-biased coefficient for pair (j, k) in original (unscaled) coordinates."""
    if not bundle.scaled:
        raise ScaleMismatch("debias requires the scaled bundle the fits were computed on")
    token = bundle.scale_token()
    if fit.scale_token != token or nodewise.scale_token != token:
        raise ScaleMismatch("fit, nodewise inverse, and bundle use different scalings")
    if fit.target != nodewise.target:
        raise ScaleMismatch(
            f"fit targets node {fit.target} but nodewise inverse targets {nodewise.target}"
        )
    j, k = fit.target, nodewise.partner
    d, n = bundle.d, bundle.n

    idx = stack_indices(bundle.p, d, j)
    resid = bundle.Xc[:, j] - bundle.stacked[:, idx] @ fit.alpha_tilde

    C = nodewise.C_tilde
    if np.linalg.cond(C) >= _COND_LIMIT:
        raise IllConditionedC(f"C for pair ({j}, {k}) is too ill-conditioned to invert")
    Cinv = np.linalg.inv(C)
    R = nodewise.residual_matrix

    alpha_scaled = fit.block(k) + Cinv @ (R.T @ resid) / n
    omega_scaled = (
        fit.residual_variance_tilde / n**2 * (Cinv @ (R.T @ R) @ Cinv.T)
    )

    s = bundle.column_scales[k]
    alpha = alpha_scaled / s
    omega = omega_scaled / np.outer(s, s)
    omega = 0.5 * (omega + omega.T)
    return DebiasedCoefficient(j, k, alpha, omega, Source.NEIGHBORHOOD)


def debias_all(
    bundle: DesignBundle,
    fit: GroupLassoFit,
    cfg: EstimatorConfig,
    nodes=None,
) -> dict[int, DebiasedCoefficient]:
    """De-biased coefficients for every requested partner of fit.target."""
    j = fit.target
    omega = cfg.omega if cfg.omega is not None else default_omega(bundle.p, bundle.d, bundle.n)
    if nodes is None:
        nodes = [k for k in range(bundle.p) if k != j]
    out = {}
    for k in nodes:
        nw = fit_nodewise(bundle, j, k, omega, cfg)
        out[k] = debias(fit, nw, bundle)
    return out
