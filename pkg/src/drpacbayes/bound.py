"""Robust PAC-Bayes certificate: every term of the bound and its gradient.

The certified quantity for a Gaussian posterior Q = N(mu, sigma_q^2 I) over
controller coordinates theta is

    E_Q[ empirical risk(theta) + rho * lipschitz(theta) ] + complexity

with complexity = sqrt(2 * E_Q[sigma(theta)^2] * (KL(Q||P) + log(n/delta))
/ (n - 1)). Expectations over Q are estimated by Monte Carlo through the
reparameterization ``theta = mu + sigma_q * eps`` with an epsilon set that
is drawn once and frozen, so the whole objective is a deterministic,
almost-everywhere smooth function of (mu, log sigma_q).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import DEGENERATE_GAP, DisturbanceModel, WeightedMapBasis


@dataclass(frozen=True)
class GaussianPosterior:
    """Isotropic Gaussian over controller coordinates, N(mu, sigma_q^2 I)."""

    mu: np.ndarray
    log_sigma: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        if not np.all(np.isfinite(mu)):
            raise ValueError("posterior mean must be finite")
        if math.isnan(self.log_sigma) or self.log_sigma == math.inf:
            raise ValueError(f"log_sigma must be finite, got {self.log_sigma}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "log_sigma", float(self.log_sigma))

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def sigma(self) -> float:
        return math.exp(self.log_sigma)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.mu, [self.log_sigma]])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "GaussianPosterior":
        x = np.asarray(x, dtype=float).reshape(-1)
        return cls(mu=x[:-1], log_sigma=float(x[-1]))


@dataclass(frozen=True)
class GaussianPrior:
    """Zero-mean isotropic Gaussian prior, N(0, sigma_prior^2 I)."""

    sigma_prior: float

    def __post_init__(self):
        if not self.sigma_prior > 0:
            raise ValueError(f"sigma_prior must be positive, got {self.sigma_prior}")


@dataclass(frozen=True)
class TrainingSample:
    """n >= 2 stacked disturbance vectors drawn i.i.d. from the training
    distribution."""

    disturbances: np.ndarray  # n x nw

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.disturbances, dtype=float))
        if arr.shape[0] < 2:
            raise ValueError(
                f"a training sample needs at least 2 trajectories, got {arr.shape[0]}")
        arr.setflags(write=False)
        object.__setattr__(self, "disturbances", arr)

    @property
    def n(self) -> int:
        return self.disturbances.shape[0]


@dataclass(frozen=True)
class MonteCarloPlan:
    """Frozen epsilon set for reparameterized posterior expectations."""

    m: int
    dim: int
    seed: object = 0
    epsilon: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"Monte Carlo sample count must be >= 1, got {self.m}")
        eps = self.epsilon
        if eps is None:
            eps = np.random.default_rng(self.seed).standard_normal((self.m, self.dim))
        else:
            eps = np.asarray(eps, dtype=float)
            if eps.shape != (self.m, self.dim):
                raise ValueError(
                    f"epsilon must have shape ({self.m}, {self.dim}), got {eps.shape}")
        eps.setflags(write=False)
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class CertificateBreakdown:
    """The three bound terms and their sum, with the run constants."""

    gibbs_empirical_risk: float
    wasserstein_penalty: float
    complexity: float
    total_bound: float
    rho: float
    delta: float
    n: int

    @classmethod
    def compose(cls, gibbs: float, penalty: float, complexity: float,
                rho: float, delta: float, n: int) -> "CertificateBreakdown":
        return cls(gibbs_empirical_risk=gibbs, wasserstein_penalty=penalty,
                   complexity=complexity, total_bound=gibbs + penalty + complexity,
                   rho=rho, delta=delta, n=n)

    def as_dict(self) -> dict:
        return {
            "gibbs_risk": self.gibbs_empirical_risk,
            "w1_penalty": self.wasserstein_penalty,
            "complexity": self.complexity,
            "total_bound": self.total_bound,
            "rho": self.rho,
            "delta": self.delta,
            "n": self.n,
        }


@dataclass(frozen=True)
class ObjectiveValue:
    """One evaluation of the robust objective."""

    value: float
    breakdown: CertificateBreakdown | None
    gradient: np.ndarray | None  # d+1, (mu, log sigma_q)
    degenerate_count: int = 0


def _as_disturbance_array(sample) -> np.ndarray:
    if isinstance(sample, TrainingSample):
        return sample.disturbances
    return np.atleast_2d(np.asarray(sample, dtype=float))


def _risk_and_grad(m: np.ndarray, mi: np.ndarray | None, w: np.ndarray,
                   ) -> tuple[float, np.ndarray | None]:
    """Mean loss over rows of w, optionally with its theta gradient.

    The gradient of ``norm(M w)`` is contracted against each basis map; it
    is taken as zero for trajectories with exactly zero loss.
    """
    y = m @ w.T                      # rows x n
    norms = np.linalg.norm(y, axis=0)
    risk = float(norms.mean())
    if mi is None:
        return risk, None
    safe = np.where(norms > 0.0, norms, 1.0)
    y_hat = np.where(norms > 0.0, y / safe, 0.0)
    g = (y_hat @ w) / w.shape[0]     # rows x nw
    grad = np.tensordot(mi, g, axes=([1, 2], [0, 1]))
    return risk, grad


def empirical_risk(wmap: WeightedMapBasis, theta: np.ndarray, sample) -> float:
    """Mean rollout loss of theta over a set of disturbance trajectories."""
    w = _as_disturbance_array(sample)
    if w.shape[1] != wmap.m0.shape[1]:
        raise ValueError(
            f"disturbances must have {wmap.m0.shape[1]} columns, got {w.shape[1]}")
    return _risk_and_grad(wmap(theta), None, w)[0]


def empirical_risk_gradient(wmap: WeightedMapBasis, theta: np.ndarray,
                            sample) -> np.ndarray:
    """Gradient of the mean rollout loss with respect to theta."""
    w = _as_disturbance_array(sample)
    return _risk_and_grad(wmap(theta), wmap.mi, w)[1]


def kl_gaussians(q: GaussianPosterior, p: GaussianPrior) -> float:
    """Closed-form KL divergence of the isotropic posterior from the prior."""
    d = q.dim
    sq2 = q.sigma ** 2
    if sq2 == 0.0:
        raise ValueError("KL divergence undefined for a zero-width posterior")
    sp2 = p.sigma_prior ** 2
    mean_sq = float(q.mu @ q.mu)
    return 0.5 * (d * sq2 / sp2 + mean_sq / sp2 - d + d * math.log(sp2 / sq2))


def complexity_term(expected_sigma_sq: float, kl: float, n: int,
                    delta: float) -> float:
    """sqrt(2 * E[sigma^2] * (KL + log(n / delta)) / (n - 1))."""
    if n < 2:
        raise ValueError(f"the bound requires n >= 2 samples, got n={n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if expected_sigma_sq < 0:
        raise ValueError(
            f"expected_sigma_sq must be nonnegative, got {expected_sigma_sq}")
    return math.sqrt(2.0 * expected_sigma_sq * (kl + math.log(n / delta)) / (n - 1))


def _certificate_terms(m: np.ndarray, mi: np.ndarray | None,
                       model: DisturbanceModel,
                       ) -> tuple[float, float, np.ndarray | None,
                                  np.ndarray | None, int]:
    """Lipschitz value, proxy value, and their theta gradients at one theta.

    One SVD per distinct certificate-defining matrix; for bounded models the
    two certificates share it. Vectors are always computed so the values are
    bit-identical between gradient and value-only evaluations.
    """
    flags = 0

    def top_pair(mat, check_gap):
        nonlocal flags
        u, s, vt = np.linalg.svd(mat)
        if check_gap and s.size > 1 and (s[0] - s[1]) <= DEGENERATE_GAP:
            flags += 1
        return float(s[0]), u[:, 0], vt[0]

    with_grad = mi is not None
    lip, lu, lv = top_pair(m, with_grad)
    lip_grad = None
    if with_grad:
        lip_grad = np.tensordot(mi, np.outer(lu, lv), axes=([1, 2], [0, 1]))

    if model.kind == "bounded":
        sig = 0.5 * model.radius * lip
        sig_grad = 0.5 * model.radius * lip_grad if with_grad else None
        return lip, sig, lip_grad, sig_grad, flags

    sig, su, sv = top_pair(m @ model.sqrt_cov, with_grad)
    sig_grad = None
    if with_grad:
        sig_grad = np.tensordot(mi, np.outer(su, model.sqrt_cov @ sv),
                                axes=([1, 2], [0, 1]))
    return lip, sig, lip_grad, sig_grad, flags


def evaluate_objective(wmap: WeightedMapBasis, posterior: GaussianPosterior,
                       prior: GaussianPrior, sample: TrainingSample,
                       model: DisturbanceModel, rho: float, delta: float,
                       plan: MonteCarloPlan, with_grad: bool = True,
                       ) -> ObjectiveValue:
    """Evaluate the robust bound (and optionally its gradient) at a posterior.

    All posterior expectations use the plan's frozen epsilon set; gradients
    chain through theta = mu + sigma_q * eps, so d theta / d mu = I and
    d theta / d log sigma_q = sigma_q * eps.
    """
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    if plan.dim != posterior.dim:
        raise ValueError(
            f"plan drawn for dimension {plan.dim}, posterior has {posterior.dim}")
    w = sample.disturbances
    mu, sigma_q = posterior.mu, posterior.sigma
    if not math.isfinite(sigma_q):
        return ObjectiveValue(value=math.inf, breakdown=None, gradient=None)

    m_count = plan.m
    d = posterior.dim
    mi = wmap.mi if with_grad else None

    risk_sum = 0.0
    lip_sum = 0.0
    sig_sq_sum = 0.0
    flags = 0
    risk_grad_mu = np.zeros(d) if with_grad else None
    risk_grad_ls = 0.0
    s2_grad_mu = np.zeros(d) if with_grad else None
    s2_grad_ls = 0.0
    for eps in plan.epsilon:
        theta = mu + sigma_q * eps
        m = wmap(theta)
        risk, risk_grad = _risk_and_grad(m, mi, w)
        lip, sig, lip_grad, sig_grad, f = _certificate_terms(m, mi, model)
        risk_sum += risk
        lip_sum += lip
        sig_sq_sum += sig * sig
        flags += f
        if with_grad:
            g = risk_grad + rho * lip_grad
            risk_grad_mu += g
            risk_grad_ls += float(g @ eps) * sigma_q
            s2_grad_mu += 2.0 * sig * sig_grad
            s2_grad_ls += 2.0 * sig * float(sig_grad @ eps) * sigma_q

    gibbs = risk_sum / m_count
    mean_lip = lip_sum / m_count
    penalty = rho * mean_lip
    exp_sig_sq = sig_sq_sum / m_count
    kl = kl_gaussians(posterior, prior)
    comp = complexity_term(exp_sig_sq, kl, sample.n, delta)
    breakdown = CertificateBreakdown.compose(
        gibbs=gibbs, penalty=penalty, complexity=comp,
        rho=rho, delta=delta, n=sample.n)

    if not with_grad:
        return ObjectiveValue(value=breakdown.total_bound, breakdown=breakdown,
                              gradient=None, degenerate_count=flags)

    grad_mu = risk_grad_mu / m_count
    grad_ls = risk_grad_ls / m_count
    # complexity term: C^2 = 2 * s2 * (kl + log(n/delta)) / (n - 1)
    if comp > 0.0:
        log_term = kl + math.log(sample.n / delta)
        kl_grad_mu = posterior.mu / prior.sigma_prior ** 2
        kl_grad_ls = d * (sigma_q ** 2 / prior.sigma_prior ** 2 - 1.0)
        denom = (sample.n - 1) * comp
        grad_mu = grad_mu + (log_term * (s2_grad_mu / m_count)
                             + exp_sig_sq * kl_grad_mu) / denom
        grad_ls = grad_ls + (log_term * (s2_grad_ls / m_count)
                             + exp_sig_sq * kl_grad_ls) / denom
    gradient = np.concatenate([grad_mu, [grad_ls]])
    return ObjectiveValue(value=breakdown.total_bound, breakdown=breakdown,
                          gradient=gradient, degenerate_count=flags)


def robust_objective(wmap: WeightedMapBasis, posterior: GaussianPosterior,
                     prior: GaussianPrior, sample: TrainingSample,
                     model: DisturbanceModel, rho: float, delta: float,
                     plan: MonteCarloPlan,
                     ) -> tuple[CertificateBreakdown, np.ndarray]:
    """Certificate breakdown and gradient with respect to (mu, log sigma_q)."""
    result = evaluate_objective(wmap, posterior, prior, sample, model,
                                rho, delta, plan, with_grad=True)
    return result.breakdown, result.gradient


class RobustObjectiveHandle:
    """Deterministic objective over the packed vector (mu..., log sigma_q)."""

    def __init__(self, wmap, prior, sample, model, rho, delta, plan):
        self.wmap = wmap
        self.prior = prior
        self.sample = sample
        self.model = model
        self.rho = rho
        self.delta = delta
        self.plan = plan
        self.dim = plan.dim + 1

    def _eval(self, x: np.ndarray, with_grad: bool) -> ObjectiveValue:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x[-1] > 700.0 or not np.all(np.isfinite(x)):
            # exp would overflow or inputs are already bad; report an
            # infinite value so a line search backs off
            return ObjectiveValue(value=math.inf, breakdown=None, gradient=None)
        posterior = GaussianPosterior(mu=x[:-1], log_sigma=float(x[-1]))
        return evaluate_objective(self.wmap, posterior, self.prior, self.sample,
                                  self.model, self.rho, self.delta, self.plan,
                                  with_grad=with_grad)

    def value(self, x: np.ndarray) -> float:
        return self._eval(x, with_grad=False).value

    def value_and_grad(self, x: np.ndarray) -> ObjectiveValue:
        return self._eval(x, with_grad=True)


def make_objective(wmap: WeightedMapBasis, prior: GaussianPrior,
                   sample: TrainingSample, model: DisturbanceModel,
                   rho: float, delta: float, plan: MonteCarloPlan,
                   ) -> RobustObjectiveHandle:
    return RobustObjectiveHandle(wmap, prior, sample, model, rho, delta, plan)
