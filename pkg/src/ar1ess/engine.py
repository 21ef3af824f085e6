"""Interweaving Gibbs sampler for state space models with an AR(1) state.

One sweep updates, in order: the latent states in the sufficient
augmentation (s_0 from its exact Gaussian conditional, then contiguous
blocks by elliptical slice sampling against the recentred AR(1) bridge
prior); the AR(1) parameters in the sufficient augmentation (a two block
regression Metropolis-Hastings move); any observation-model statics; and,
when interweaving is on, the AR(1) parameters again in the ancillary
augmentation via adaptive random walk Metropolis-Hastings before mapping
the states back.

The ancillary augmentation rewrites the state equation in terms of the
standardized innovations s~_t = (s_t - mu - phi (s_{t-1} - mu)) / sigma,
making the states ancillary for (mu, phi, sigma); alternating the two
parameterizations breaks the posterior dependence that stalls plain Gibbs
samplers here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import betaln, gammaln

from ar1ess.ar1 import (
    Ar1Params,
    Block,
    block_conditional_mean,
    initial_state_conditional,
    sample_block_recursive,
    stationary_moments,
)
from ar1ess.dists import norm_logpdf
from ar1ess.ess import EssTarget, ess_step

WHOLE = "whole"  # blocksize sentinel: one block spanning the full series


@dataclass(frozen=True)
class SamplerSpec:
    """Block size (positive int, or WHOLE for a single full-length block) and interweaving flag."""

    blocksize: int | str = 5
    interweave: bool = True

    def label(self) -> str:
        b = "T" if self.blocksize == WHOLE else str(self.blocksize)
        return f"({b},{'I' if self.interweave else 'NI'})"


@dataclass(frozen=True)
class PriorHyper:
    """Hyperparameters of the standard priors.

    mu ~ N(0, sigma_mu^2), (phi+1)/2 ~ Beta(a_phi, b_phi),
    sigma^2 ~ Gamma(1/2, rate 1/(2 B_sigma)).
    """

    sigma_mu: float = 100.0
    a_phi: float = 5.0
    b_phi: float = 1.5
    B_sigma: float = 1.0

    def log_prior_mu(self, mu: float) -> float:
        return float(norm_logpdf(mu, 0.0, self.sigma_mu))

    def log_prior_phi(self, phi: float) -> float:
        if not (-1.0 < phi < 1.0):
            return -np.inf
        a, b = self.a_phi, self.b_phi
        # density of phi where (phi+1)/2 is Beta(a, b)
        return float(
            (a - 1.0) * np.log((1.0 + phi) / 2.0)
            + (b - 1.0) * np.log((1.0 - phi) / 2.0)
            - betaln(a, b)
            - np.log(2.0)
        )

    def log_prior_sigma2(self, s2: float) -> float:
        if s2 <= 0:
            return -np.inf
        rate = 1.0 / (2.0 * self.B_sigma)
        return float(0.5 * np.log(rate) - gammaln(0.5) - 0.5 * np.log(s2) - rate * s2)

    def log_prior_xi(self, xi: float) -> float:
        phi = np.tanh(xi)
        return self.log_prior_phi(phi) + float(np.log1p(-phi * phi))

    def log_prior_psi(self, psi: float) -> float:
        if psi > 350.0:  # sigma^2 overflows; the Gamma prior has no mass out here
            return -np.inf
        return self.log_prior_sigma2(float(np.exp(2.0 * psi))) + np.log(2.0) + 2.0 * psi


# ---------------------------------------------------------------------------
# adaptive random walk scales (Robbins-Monro, adaptation only during burn-in)


@dataclass
class ScalarAdapt:
    """Log proposal scale driven toward a target acceptance probability."""

    log_scale: float = 0.0
    step_constant: float = 4.058
    target: float = 0.44

    @property
    def scale(self) -> float:
        return float(np.exp(self.log_scale))

    def update(self, r: int, accept_prob: float) -> None:
        if r >= 2:
            self.log_scale += self.step_constant * (accept_prob - self.target) / (r - 1)


@dataclass
class BivariateAdapt:
    """Scaled running-covariance proposal for a two dimensional block."""

    log_scale: float = 0.0
    step_constant: float = 6.534
    target: float = 0.234
    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cov: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    count: int = 0

    def proposal_cov(self) -> np.ndarray:
        if self.count < 100:
            return np.eye(2)
        s2 = float(np.exp(2.0 * self.log_scale))
        return s2 * (self.cov + (s2 / self.count) * np.eye(2))

    def absorb(self, x: np.ndarray) -> None:
        """Recursive update of the running mean and sample covariance (denominator count-1)."""
        x = np.asarray(x, dtype=float)
        r = self.count + 1
        if r == 1:
            self.mean = x.copy()
        else:
            dev = x - self.mean
            self.cov = ((r - 2) / (r - 1)) * self.cov + np.outer(dev, dev) / r
            self.mean = ((r - 1) * self.mean + x) / r
        self.count = r

    def update_scale(self, r: int, accept_prob: float) -> None:
        if r >= 2:
            self.log_scale += self.step_constant * (accept_prob - self.target) / (r - 1)


def accept_prob(log_ratio: float) -> float:
    """min(1, exp(log_ratio)); the clamped probability also feeds the adaptation.

    NaN (both sides at -inf) rejects: the proposal has no support.
    """
    if np.isnan(log_ratio):
        return 0.0
    if not np.isfinite(log_ratio):
        return 0.0 if log_ratio < 0 else 1.0
    return float(min(1.0, np.exp(min(log_ratio, 0.0))))


def try_cholesky(cov: np.ndarray) -> np.ndarray | None:
    """Cholesky factor, or None when the matrix has degenerated numerically."""
    if not np.all(np.isfinite(cov)):
        return None
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return None


# ---------------------------------------------------------------------------
# blocks and parameterization moves


def partition(T: int, blocksize: int | str) -> list[Block]:
    """Contiguous disjoint blocks covering {1..T}; the last may be shorter."""
    if blocksize == WHOLE:
        return [Block(1, T)]
    b = int(blocksize)
    if b < 1:
        raise ValueError(f"blocksize must be >= 1, got {blocksize}")
    if b > T:
        b = T
    return [Block(a, min(a + b - 1, T)) for a in range(1, T + 1, b)]


class ChainState:
    """Mutable sampler state: AR(1) parameters and the latent path s_{0:T}."""

    __slots__ = ("mu", "phi", "sigma", "s")

    def __init__(self, mu: float, phi: float, sigma: float, s: np.ndarray):
        self.mu = float(mu)
        self.phi = float(phi)
        self.sigma = float(sigma)
        self.s = np.asarray(s, dtype=float)

    def params(self) -> Ar1Params:
        return Ar1Params(self.mu, self.phi, self.sigma)


def update_latent_states(state: ChainState, model, blocks: list[Block], rng: np.random.Generator) -> None:
    """Step a: redraw s_0 exactly, then each block once by elliptical slice sampling."""
    p = state.params()
    s = state.s
    T = s.size - 1
    m0, v0 = initial_state_conditional(p, s[1])
    s[0] = m0 + np.sqrt(v0) * rng.standard_normal()
    for blk in blocks:
        s_left = s[blk.a - 1]
        s_right = s[blk.b + 1] if blk.b < T else None
        mean = block_conditional_mean(p, blk, s_left, s_right)

        def loglik(theta, _mean=mean, _a=blk.a, _b=blk.b):
            return float(np.sum(model.loglik_block(theta + _mean, _a, _b)))

        def prior(r, _blk=blk, _sl=s_left, _sr=s_right, _mean=mean):
            return sample_block_recursive(p, _blk, _sl, _sr, r) - _mean

        theta0 = s[blk.a : blk.b + 1] - mean
        theta1, _ = ess_step(theta0, EssTarget(prior, loglik), rng)
        s[blk.a : blk.b + 1] = theta1 + mean


def update_ar_params_sa(state: ChainState, priors: PriorHyper, rng: np.random.Generator) -> None:
    """Step b: two block move for (mu, phi, sigma) given the path, in (SA).

    Block one proposes (gamma, phi), gamma = mu (1 - phi), from the Gaussian
    least-squares conditional of the regression s_t = gamma + phi s_{t-1} +
    sigma eta_t under a flat auxiliary prior; the Metropolis-Hastings
    correction then only involves the true priors, the stationary s_0 term
    and the d(mu)/d(gamma) Jacobian.  Block two proposes sigma^2 from its
    inverse-gamma conditional under the auxiliary prior 1/sigma^2 and
    corrects for the Gamma(1/2, 1/(2 B_sigma)) prior.
    """
    s = state.s
    T = s.size - 1
    x, y = s[:-1], s[1:]
    sx, sxx = float(x.sum()), float(x @ x)
    sy, sxy = float(y.sum()), float(x @ y)
    xtx = np.array([[T, sx], [sx, sxx]])
    det = T * sxx - sx * sx
    if det <= 0:
        return  # degenerate path; keep current values
    zhat = np.array([sxx * sy - sx * sxy, T * sxy - sx * sy]) / det
    sig2 = state.sigma**2
    # proposal covariance sigma^2 (X'X)^{-1} via 2x2 Cholesky of the inverse
    cov = sig2 * np.array([[sxx, -sx], [-sx, T]]) / det
    chol = try_cholesky(cov)
    if chol is None:
        return
    gamma_p, phi_p = zhat + chol @ rng.standard_normal(2)

    def gamma_phi_logtarget(gamma, phi):
        if not (-1.0 < phi < 1.0):
            return -np.inf
        mu = gamma / (1.0 - phi)
        lp0 = norm_logpdf(s[0], mu, np.sqrt(sig2 / (1.0 - phi * phi)))
        return float(lp0) + priors.log_prior_mu(mu) + priors.log_prior_phi(phi) - np.log1p(-phi)

    gamma_c = state.mu * (1.0 - state.phi)
    log_r = gamma_phi_logtarget(gamma_p, phi_p) - gamma_phi_logtarget(gamma_c, state.phi)
    if rng.uniform() < accept_prob(log_r):
        state.phi = float(phi_p)
        state.mu = float(gamma_p / (1.0 - phi_p))

    # sigma^2 block, conditional on the (possibly updated) (mu, phi)
    resid = y - state.mu * (1.0 - state.phi) - state.phi * x
    ssr = float(resid @ resid) + (1.0 - state.phi**2) * (s[0] - state.mu) ** 2
    sig2_p = ssr / (2.0 * rng.gamma(0.5 * (T + 1)))
    log_r = 0.5 * (np.log(sig2_p) - np.log(sig2)) - (sig2_p - sig2) / (2.0 * priors.B_sigma)
    if rng.uniform() < accept_prob(log_r):
        state.sigma = float(np.sqrt(sig2_p))


def to_ancillary(s: np.ndarray, mu: float, phi: float, sigma: float) -> np.ndarray:
    """Step c: standardized innovations s~_{1:T} of the path under (mu, phi, sigma)."""
    return (s[1:] - mu - phi * (s[:-1] - mu)) / sigma


def from_ancillary(stilde: np.ndarray, s0: float, mu: float, phi: float, sigma: float) -> np.ndarray:
    """Step e: rebuild s_{0:T} from the innovations by the AR(1) recursion."""
    drive = mu * (1.0 - phi) + sigma * stilde
    out, _ = lfilter([1.0], [1.0, -phi], drive, zi=np.array([phi * s0]))
    return np.concatenate(([s0], out))


def aa_log_posterior(
    stilde: np.ndarray,
    s0: float,
    mu: float,
    xi: float,
    psi: float,
    model,
    priors: PriorHyper,
    **static_overrides,
) -> float:
    """Log posterior of (mu, xi, psi) in the ancillary augmentation.

    xi = F_Z(phi), psi = log sigma.  The innovation term -0.5 sum s~^2 is
    constant in the parameters and omitted.  Static overrides are forwarded
    to the observation model (used when statics are interweaved).
    """
    if abs(psi) > 300.0:  # exp(psi) would over/underflow
        return -np.inf
    phi = float(np.tanh(xi))
    sigma = float(np.exp(psi))
    # tanh rounds to +-1.0 beyond |xi| ~ 19; such proposals have no support
    if abs(phi) >= 1.0 or sigma <= 0.0:
        return -np.inf
    s = from_ancillary(stilde, s0, mu, phi, sigma)
    ll = model.loglik_sum(s[1:], **static_overrides)
    if not np.isfinite(ll):
        return -np.inf
    var0 = sigma * sigma / (1.0 - phi * phi)
    if var0 <= 0.0:  # underflow at extreme psi
        return -np.inf
    lp0 = float(norm_logpdf(s0, mu, np.sqrt(var0)))
    return ll + lp0 + priors.log_prior_mu(mu) + priors.log_prior_xi(xi) + priors.log_prior_psi(psi)


def update_ar_params_aa(
    state: ChainState,
    model,
    adapts: dict,
    priors: PriorHyper,
    r: int,
    adapting: bool,
    rng: np.random.Generator,
) -> None:
    """Steps c-e for models without interweaved statics.

    mu moves by a scalar adaptive random walk; (xi, psi) jointly by a
    bivariate adaptive random walk.  Afterwards the path is rebuilt from the
    innovations under the new parameters.
    """
    stilde = to_ancillary(state.s, state.mu, state.phi, state.sigma)
    s0 = state.s[0]
    mu, xi, psi = state.mu, float(np.arctanh(state.phi)), float(np.log(state.sigma))

    ad_mu = adapts.setdefault("aa_mu", ScalarAdapt())
    ad_xp = adapts.setdefault("aa_xipsi", BivariateAdapt())

    cur = aa_log_posterior(stilde, s0, mu, xi, psi, model, priors)

    mu_p = mu + ad_mu.scale * rng.standard_normal()
    lp_p = aa_log_posterior(stilde, s0, mu_p, xi, psi, model, priors)
    pr = accept_prob(lp_p - cur)
    if rng.uniform() < pr:
        mu, cur = mu_p, lp_p
    if adapting:
        ad_mu.update(r, pr)

    chol = try_cholesky(ad_xp.proposal_cov())
    if chol is not None:
        prop = np.array([xi, psi]) + chol @ rng.standard_normal(2)
        lp_p = aa_log_posterior(stilde, s0, mu, prop[0], prop[1], model, priors)
        pr = accept_prob(lp_p - cur)
        if rng.uniform() < pr:
            xi, psi = float(prop[0]), float(prop[1])
        if adapting:
            ad_xp.update_scale(r, pr)
            ad_xp.absorb(np.array([xi, psi]))

    state.mu, state.phi, state.sigma = mu, float(np.tanh(xi)), float(np.exp(psi))
    state.s = from_ancillary(stilde, s0, state.mu, state.phi, state.sigma)


# ---------------------------------------------------------------------------
# chain driver and draw storage


@dataclass
class DrawsStore:
    """Posterior draws (iterations x parameters) with names and run metadata."""

    names: list[str]
    draws: np.ndarray
    burn_in: int
    runtime_seconds: float
    meta: dict

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.names.index(name)]

    def post_burn(self, name: str) -> np.ndarray:
        return self.column(name)[self.burn_in :]

    def post_burn_matrix(self, prefix: str) -> np.ndarray:
        idx = [i for i, n in enumerate(self.names) if n.startswith(prefix)]
        return self.draws[self.burn_in :, idx]

    @property
    def runtime_minutes(self) -> float:
        return self.runtime_seconds / 60.0

    def state_names(self) -> list[str]:
        return [n for n in self.names if n.startswith("s_")]


def run_chain(
    model,
    spec: SamplerSpec,
    n_iter: int,
    burn_in: int,
    seed,
    priors: PriorHyper = PriorHyper(),
    init: dict | None = None,
    latent_only: bool = False,
    store_states: bool = True,
) -> DrawsStore:
    """Run one chain of the interweaving sampler against an observation model.

    ``init`` may carry starting values (mu, phi, sigma, s); by default the
    path starts flat at the model's initial level with (phi, sigma) =
    (0.9, 0.1).  ``latent_only`` freezes all parameters and repeats step a
    only (used by rolling forecasts).  Draws for every iteration, burn-in
    included, are stored; ``burn_in`` is recorded so summaries can discard
    them.  Identical seed and configuration reproduce the run bit for bit.
    """
    if n_iter <= burn_in:
        raise ValueError("n_iter must exceed burn_in")
    T = model.T
    rng = np.random.default_rng(seed)
    level = float(model.initial_level())
    init = dict(init or {})
    state = ChainState(
        mu=init.get("mu", level),
        phi=init.get("phi", 0.9),
        sigma=init.get("sigma", 0.1),
        s=np.asarray(init.get("s", np.full(T + 1, level)), dtype=float).copy(),
    )
    if not np.all(np.isfinite(model.loglik_terms(state.s[1:], np.arange(1, T + 1)))):
        raise FloatingPointError("non-finite likelihood at initialization")
    blocks = partition(T, spec.blocksize)
    adapts: dict = {}
    static_names = list(model.static_items().keys())
    names = ["mu", "phi", "sigma"]
    if store_states:
        names += [f"s_{t}" for t in range(T + 1)]
    names += static_names
    draws = np.empty((n_iter, len(names)))
    n_aa_updates = 0

    t0 = time.perf_counter()
    for r in range(1, n_iter + 1):
        adapting = r <= burn_in
        update_latent_states(state, model, blocks, rng)
        if not latent_only:
            update_ar_params_sa(state, priors, rng)
            model.update_statics_sa(state, adapts, priors, r, adapting, rng)
            if spec.interweave:
                aa = getattr(model, "aa_update", None)
                if aa is not None:
                    aa(state, adapts, priors, r, adapting, rng)
                else:
                    update_ar_params_aa(state, model, adapts, priors, r, adapting, rng)
                n_aa_updates += 1
        row = [state.mu, state.phi, state.sigma]
        if store_states:
            row.extend(state.s)
        if static_names:
            row.extend(model.static_items().values())
        draws[r - 1] = row
    runtime = time.perf_counter() - t0

    meta = {
        "seed": seed,
        "spec": {"blocksize": spec.blocksize, "interweave": spec.interweave},
        "priors": {
            "sigma_mu": priors.sigma_mu,
            "a_phi": priors.a_phi,
            "b_phi": priors.b_phi,
            "B_sigma": priors.B_sigma,
        },
        "iterations": n_iter,
        "burn_in": burn_in,
        "latent_only": latent_only,
        "n_aa_updates": n_aa_updates,
        "model": type(model).__name__,
    }
    return DrawsStore(names=names, draws=draws, burn_in=burn_in, runtime_seconds=runtime, meta=meta)
