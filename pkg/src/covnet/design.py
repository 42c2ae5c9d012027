"""Interaction design matrices and node centering.

For each node k the design V[k] is the n x d matrix whose i-th row is
X[i, k] * phi(W[i]). Nodes are centered about their conditional mean given W
by a ridge-stabilized regression on phi(W); the centered columns Xc serve as
responses in every neighborhood regression while the V[k] are built from the
raw node values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .basis import BasisSpec, expand_matrix
from .data import Dataset
from .errors import DimensionMismatch, RankDeficientBasis, ZeroVarianceColumn


def column_sds(M: np.ndarray) -> np.ndarray:
    """Population (1/n) standard deviations of the columns of M."""
    return np.std(M, axis=0, ddof=0)


@dataclass(frozen=True)
class DesignBundle:
    """Basis matrix, interaction designs, centered nodes, and column scales.

    ``column_scales[k, c]`` is the standard deviation of the raw (unscaled)
    column c of V[k]; on a scaled bundle these are the factors that map
    coefficients back to the original scale.
    """

    Phi: np.ndarray
    V: tuple[np.ndarray, ...]
    Xc: np.ndarray
    column_scales: np.ndarray
    node_names: tuple[str, ...]
    basis: BasisSpec
    scaled: bool = False

    @property
    def n(self) -> int:
        return self.Phi.shape[0]

    @property
    def p(self) -> int:
        return len(self.V)

    @property
    def d(self) -> int:
        return self.Phi.shape[1]

    def block(self, k: int) -> slice:
        """Column slice of node k inside the stacked design."""
        return slice(k * self.d, (k + 1) * self.d)

    @cached_property
    def stacked(self) -> np.ndarray:
        """All V[k] side by side: n x (p d)."""
        return np.hstack(self.V)

    @cached_property
    def gram(self) -> np.ndarray:
        """(1/n) stacked^T stacked, shared by every nodewise regression."""
        S = self.stacked
        return (S.T @ S) / self.n

    @cached_property
    def cross(self) -> np.ndarray:
        """(1/n) stacked^T Xc, one response column per node."""
        return (self.stacked.T @ self.Xc) / self.n

    def scale_token(self) -> int:
        return hash(self.column_scales.tobytes())


def build_design(data: Dataset, spec: BasisSpec) -> DesignBundle:
    """Assemble Phi, the V[k] interaction designs, and centered nodes.

    Centering regresses each node on phi(W) with ridge 1e-10 * trace to
    survive collinear bases; the residuals are checked to be orthogonal to
    the basis columns and RankDeficientBasis is raised when they are not.
    """
    if spec.q != data.q:
        raise DimensionMismatch(f"basis expects q={spec.q}, data has q={data.q}")
    Phi = expand_matrix(data.W, spec)
    n, d = Phi.shape

    G = Phi.T @ Phi
    ridge = 1e-10 * np.trace(G)
    coef = np.linalg.solve(G + ridge * np.eye(d), Phi.T @ data.X)
    Xc = data.X - Phi @ coef

    scale = max(1.0, float(np.abs(data.X).max())) * max(1.0, float(np.abs(Phi).max()))
    resid_corr = np.abs(Xc.T @ Phi).max()
    if resid_corr > 1e-8 * n * scale:
        raise RankDeficientBasis(
            f"centering residuals not orthogonal to basis (|Xc'Phi| = {resid_corr:.3e}); "
            "basis Gram is singular beyond the ridge tolerance"
        )

    V = tuple(data.X[:, k : k + 1] * Phi for k in range(data.p))
    scales = np.vstack([column_sds(Vk) for Vk in V])
    return DesignBundle(
        Phi=Phi,
        V=V,
        Xc=Xc,
        column_scales=scales,
        node_names=data.node_names,
        basis=spec,
        scaled=False,
    )


def scale_columns(bundle: DesignBundle) -> DesignBundle:
    """Return a bundle whose V[k] columns all have unit standard deviation.

    The original standard deviations stay recorded in ``column_scales`` so
    coefficients can be mapped back (alpha_raw = alpha_scaled / scale).
    Idempotent: a scaled bundle is returned unchanged.
    """
    if bundle.scaled:
        return bundle
    scales = bundle.column_scales
    if (scales <= 0).any():
        k, c = np.argwhere(scales <= 0)[0]
        raise ZeroVarianceColumn(
            f"V[{bundle.node_names[k]}] column {c} is constant; drop the node or basis column"
        )
    V = tuple(Vk / scales[k] for k, Vk in enumerate(bundle.V))
    return replace(bundle, V=V, scaled=True)


def unscale_coefficients(alpha: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Map coefficients fit on a scaled design back to the raw scale."""
    return alpha / scales
