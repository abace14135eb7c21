"""Weighted closed-loop map and its operator-norm certificates.

The weighted map stacks the square-root-weighted state response over the
square-root-weighted input response, so the rollout loss of a disturbance w
is exactly ``norm(M(theta) @ w)``. All three controller-dependent
certificates are operator norms of this one affine matrix family:

* Lipschitz constant of the loss in w:      ``opnorm(M(theta))``
* sub-Gaussian proxy, Gaussian disturbance: ``opnorm(M(theta) @ sqrt(cov))``
* sub-Gaussian proxy, norm-bounded by R:    ``(R/2) * opnorm(M(theta))``
"""

from dataclasses import dataclass

import numpy as np

from .linalg import psd_sqrt, unvec
from .lti import CostWeights
from .sls import SlsBasis

# Singular-value gap below which the top pair is treated as degenerate and
# the gradient is only a subgradient.
DEGENERATE_GAP = 1e-10


@dataclass(frozen=True)
class WeightedMapBasis:
    """Affine family ``M(theta) = m0 + sum_i theta_i * mi[i]``."""

    m0: np.ndarray  # rows x nw
    mi: np.ndarray  # dim x rows x nw

    @property
    def dim(self) -> int:
        return self.mi.shape[0]

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.dim:
            raise ValueError(f"theta must have length {self.dim}, got {theta.size}")
        return self.m0 + np.tensordot(theta, self.mi, axes=1)


@dataclass(frozen=True)
class DisturbanceModel:
    """Training disturbance model: Gaussian or almost-surely norm-bounded."""

    kind: str                      # "gaussian" | "bounded"
    dim: int
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None
    sqrt_cov: np.ndarray | None = None
    radius: float | None = None

    @classmethod
    def gaussian(cls, mean: np.ndarray, cov: np.ndarray) -> "DisturbanceModel":
        mean = np.asarray(mean, dtype=float).reshape(-1)
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov must be {mean.size} x {mean.size}, got {cov.shape}")
        sqrt_cov = psd_sqrt(cov, name="disturbance covariance")
        return cls(kind="gaussian", dim=mean.size, mean=mean, cov=cov,
                   sqrt_cov=sqrt_cov)

    @classmethod
    def bounded(cls, radius: float, dim: int) -> "DisturbanceModel":
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        return cls(kind="bounded", dim=dim, radius=float(radius))


@dataclass(frozen=True)
class CertificateValues:
    """Both certificates at one theta plus the top singular triplet of the
    proxy-defining matrix (kept for gradient computations)."""

    lipschitz: float
    sigma: float
    top_singular_triplet: tuple[float, np.ndarray, np.ndarray]


def build_weighted_basis(basis: SlsBasis, weights: CostWeights) -> WeightedMapBasis:
    """Stack the weighted responses of the baseline and every basis column."""
    if weights.T != basis.T:
        raise ValueError(
            f"weights built for horizon {weights.T}, basis for {basis.T}")
    qs = weights.q_lifted_sqrt
    rs = weights.r_lifted_sqrt
    nw = basis.n_w
    n_state = nw * nw
    rows_u = basis.T * basis.n_u

    m0 = np.vstack([qs @ basis.phi_x_base, rs @ basis.phi_u_base])
    mi = np.empty((basis.dim, m0.shape[0], nw))
    for i in range(basis.dim):
        column = basis.basis[:, i]
        dx = unvec(column[:n_state], nw, nw)
        du = unvec(column[n_state:], rows_u, nw)
        mi[i] = np.vstack([qs @ dx, rs @ du])
    return WeightedMapBasis(m0=m0, mi=mi)


def operator_norm(mat: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Largest singular value with its unit singular vector pair.

    Always decomposes with vectors: the value-only LAPACK path can differ
    from the with-vectors path in the last bit, and certificate values must
    recompute identically wherever they are evaluated.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        raise ValueError("operator norm of an empty matrix is undefined")
    u, s, vt = np.linalg.svd(mat)
    return float(s[0]), u[:, 0], vt[0]


def lipschitz_certificate(wmap: WeightedMapBasis, theta: np.ndarray) -> float:
    """Lipschitz constant of w -> norm(M(theta) w)."""
    return operator_norm(wmap(theta))[0]


def subgaussian_proxy(wmap: WeightedMapBasis, theta: np.ndarray,
                      model: DisturbanceModel) -> float:
    """Variance proxy of the centered loss under the disturbance model."""
    m = wmap(theta)
    if model.kind == "gaussian":
        return operator_norm(m @ model.sqrt_cov)[0]
    if model.kind == "bounded":
        return 0.5 * model.radius * operator_norm(m)[0]
    raise ValueError(f"unknown disturbance model kind {model.kind!r}")


def certificate_values(wmap: WeightedMapBasis, theta: np.ndarray,
                       model: DisturbanceModel) -> CertificateValues:
    m = wmap(theta)
    lip = operator_norm(m)[0]
    if model.kind == "gaussian":
        value, u1, v1 = operator_norm(m @ model.sqrt_cov)
        return CertificateValues(lip, value, (value, u1, v1))
    if model.kind == "bounded":
        value, u1, v1 = operator_norm(0.5 * model.radius * m)
        return CertificateValues(lip, value, (value, u1, v1))
    raise ValueError(f"unknown disturbance model kind {model.kind!r}")


def certificate_gradient(wmap: WeightedMapBasis, theta: np.ndarray, which: str,
                         model: DisturbanceModel | None = None,
                         ) -> tuple[np.ndarray, bool]:
    """Gradient of a certificate with respect to theta.

    Component i is ``u1' @ mi[i] @ (S @ v1)`` where (u1, v1) is the top
    singular pair of the certificate-defining matrix and S is the scaling
    the certificate applies to M. Returns (gradient, degenerate): when the
    top singular gap is at most DEGENERATE_GAP the result is a subgradient
    from the first singular pair and the flag is set.
    """
    m = wmap(theta)
    if which == "lipschitz":
        target, scale = m, None
    elif which == "sigma":
        if model is None:
            raise ValueError("sigma certificate gradient needs a model")
        if model.kind == "gaussian":
            target, scale = m @ model.sqrt_cov, model.sqrt_cov
        elif model.kind == "bounded":
            target, scale = 0.5 * model.radius * m, 0.5 * model.radius
        else:
            raise ValueError(f"unknown disturbance model kind {model.kind!r}")
    else:
        raise ValueError(f"which must be 'lipschitz' or 'sigma', got {which!r}")

    u, s, vt = np.linalg.svd(target)
    degenerate = s.size > 1 and (s[0] - s[1]) <= DEGENERATE_GAP
    u1, v1 = u[:, 0], vt[0]
    if scale is None:
        sv1 = v1
    elif np.isscalar(scale):
        sv1 = scale * v1
    else:
        sv1 = scale @ v1
    grad = np.tensordot(wmap.mi, np.outer(u1, sv1), axes=([1, 2], [0, 1]))
    return grad, degenerate
