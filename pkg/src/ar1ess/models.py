"""Observation models plugged into the interweaving sampler.

Three families: dynamic bivariate copulas (the latent state is Fisher's Z
of Kendall's tau), stochastic volatility with standardized skew Student-t
errors (the latent state is the log variance; the slant and degrees of
freedom join the interweaving strategy), and the dynamic mixture copula
(Student t + extended Gumbel sharing tau, with weight p and degrees of
freedom nu updated by fixed-scale random walks).  A constant-copula
reference sampler is included for the restricted benchmark models.
"""

from __future__ import annotations

import numpy as np

from ar1ess import copulas as cop
from ar1ess.dists import StdSkewTParams, norm_logpdf, std_skew_t_logpdf, trunc_normal_logpdf
from ar1ess.engine import (
    BivariateAdapt,
    DrawsStore,
    PriorHyper,
    ScalarAdapt,
    aa_log_posterior,
    accept_prob,
    from_ancillary,
    to_ancillary,
    try_cholesky,
)

# tanh(s) rounds to +-1.0 in floats for |s| > 18; keep tau strictly inside
_TAU_CAP = 1.0 - 1e-12

# priors of the skew-t SV statics: alpha ~ N(0, 100), df ~ N_{>2}(5, 25),
# both read as (mean, variance)
_ALPHA_PRIOR_SD = 10.0
_DF_PRIOR_MEAN, _DF_PRIOR_SD = 5.0, 5.0
# mixture-copula nu prior: mean 5, standard deviation 20, truncated to (2, inf)
_NU_PRIOR_MEAN, _NU_PRIOR_SD = 5.0, 20.0
# fixed random walk standard deviation for logit(p) and log(nu - 2)
_MIX_STATIC_STEP = 0.3


def state_to_tau(s):
    """Kendall's tau implied by the latent state, clipped off +-1."""
    return np.clip(np.tanh(s), -_TAU_CAP, _TAU_CAP)


class ObservationModel:
    """Contract used by the engine: per-time log-likelihood plus static hooks."""

    T: int = 0

    def loglik_terms(self, s_states: np.ndarray, times: np.ndarray) -> np.ndarray:
        """log f(y_t | s_t) for the 1-based ``times``, ``s_states`` aligned with them."""
        raise NotImplementedError

    def loglik_block(self, s_states: np.ndarray, a: int, b: int) -> np.ndarray:
        """Contiguous-block shortcut for the latent-state sweep (times a..b)."""
        return self.loglik_terms(s_states, np.arange(a, b + 1))

    def loglik_sum(self, s_1t: np.ndarray, **overrides) -> float:
        return float(np.sum(self.loglik_terms(s_1t, self._all_times)))

    def initial_level(self) -> float:
        return 0.0

    def static_items(self) -> dict[str, float]:
        return {}

    def update_statics_sa(self, state, adapts, priors, r, adapting, rng) -> None:
        pass

    @property
    def _all_times(self) -> np.ndarray:
        return np.arange(1, self.T + 1)


class DynamicCopulaModel(ObservationModel):
    """Bivariate copula with tau_t = tanh(s_t); optional static (nu, p) updates.

    ``family`` is one of the copulas module tags.  For the Student t copula
    set ``estimate_nu``; for the mixture set both ``estimate_nu`` and
    ``estimate_p``.  Static updates are univariate random walks on
    log(nu - 2) and logit(p) with proposal standard deviation 0.3.
    """

    def __init__(self, family: str, u: np.ndarray, nu: float | None = None,
                 p: float | None = None, estimate_nu: bool = False, estimate_p: bool = False):
        u = np.asarray(u, dtype=float)
        if u.ndim != 2 or u.shape[1] != 2:
            raise ValueError("u must be a (T, 2) matrix of pseudo-observations")
        if np.any(~np.isfinite(u)) or np.any(u <= 0) or np.any(u >= 1):
            raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
        self.family = family
        self.u = cop.clip_u(u)
        self.T = u.shape[0]
        self.nu = nu
        self.p = p
        self.estimate_nu = estimate_nu
        self.estimate_p = estimate_p
        self._mix = family in (cop.MIXTURE, cop.MIXTURE_SG)
        self._rebuild_fast()

    def _rebuild_fast(self):
        # the precompiled evaluator caches nu-dependent transforms; rebuilt on
        # every accepted nu move
        self._fast = cop.make_tau_logpdf(self.family, self.u[:, 0], self.u[:, 1],
                                         nu=self.nu, p=self.p)

    def _eval_fast(self, tau, sl=slice(None)):
        if self._mix:
            return self._fast(tau, sl, p=self.p)
        return self._fast(tau, sl)

    def loglik_terms(self, s_states, times):
        tau = state_to_tau(s_states)
        rows = self.u[np.asarray(times) - 1]
        return cop.logpdf(self.family, rows[:, 0], rows[:, 1], tau, nu=self.nu, p=self.p)

    def loglik_block(self, s_states, a, b):
        return self._eval_fast(state_to_tau(s_states), slice(a - 1, b))

    def loglik_sum(self, s_1t, nu=None, p=None):
        tau = state_to_tau(s_1t)
        if nu is None:
            if p is None:
                return float(np.sum(self._eval_fast(tau)))
            if self._mix:
                return float(np.sum(self._fast(tau, slice(None), p=p)))
        val = cop.logpdf(
            self.family, self.u[:, 0], self.u[:, 1], tau,
            nu=self.nu if nu is None else nu,
            p=self.p if p is None else p,
        )
        return float(np.sum(val))

    def static_items(self):
        out = {}
        if self.nu is not None:
            out["nu"] = self.nu
        if self.p is not None:
            out["p"] = self.p
        return out

    def update_statics_sa(self, state, adapts, priors, r, adapting, rng):
        s_1t = state.s[1:]
        if self.estimate_p:
            ell = float(np.log(self.p) - np.log1p(-self.p))
            ell_p = ell + _MIX_STATIC_STEP * rng.standard_normal()
            p_prop = 1.0 / (1.0 + np.exp(-ell_p))
            # uniform prior on p; the logit transform contributes log p(1-p)
            log_r = (
                self.loglik_sum(s_1t, p=p_prop)
                + np.log(p_prop) + np.log1p(-p_prop)
                - self.loglik_sum(s_1t)
                - np.log(self.p) - np.log1p(-self.p)
            )
            if rng.uniform() < accept_prob(log_r):
                self.p = float(p_prop)
        if self.estimate_nu:
            zeta = float(np.log(self.nu - 2.0))
            zeta_p = zeta + _MIX_STATIC_STEP * rng.standard_normal()
            nu_prop = float(np.exp(zeta_p) + 2.0)
            log_r = (
                self.loglik_sum(s_1t, nu=nu_prop)
                + float(trunc_normal_logpdf(nu_prop, _NU_PRIOR_MEAN, _NU_PRIOR_SD, 2.0)) + zeta_p
                - self.loglik_sum(s_1t)
                - float(trunc_normal_logpdf(self.nu, _NU_PRIOR_MEAN, _NU_PRIOR_SD, 2.0)) - zeta
            )
            if rng.uniform() < accept_prob(log_r):
                self.nu = nu_prop


def dynamic_mixture_model(u: np.ndarray, nu: float = 5.0, p: float = 0.5,
                          survival: bool = False) -> DynamicCopulaModel:
    """Dynamic Gumbel/Student-t mixture; ``survival`` flips the Gumbel orientation."""
    family = cop.MIXTURE_SG if survival else cop.MIXTURE
    return DynamicCopulaModel(family, u, nu=nu, p=p, estimate_nu=True, estimate_p=True)


class SkewTSvModel(ObservationModel):
    """Stochastic volatility with standardized skew Student-t returns.

    y_t = exp(s_t / 2) eps_t with eps_t ~ sst(alpha, df); s_t is the log
    variance.  alpha and df are updated by adaptive scalar random walks in
    (SA) and join the interweaving move in (AA) with the blocking
    (mu, df), (phi, sigma), alpha; df moves on the log(df - 2) scale.
    """

    def __init__(self, y: np.ndarray, alpha: float = 0.0, df: float = 10.0):
        y = np.asarray(y, dtype=float)
        if y.ndim != 1:
            raise ValueError("y must be a 1-d return series")
        if np.any(~np.isfinite(y)):
            raise ValueError("returns must be finite")
        if not (df > 2.0):
            raise ValueError(f"df > 2 required, got {df}")
        if not np.isfinite(alpha):
            raise ValueError("alpha must be finite")
        self.y = y
        self.T = y.size
        self.alpha = float(alpha)
        self.df = float(df)

    @staticmethod
    def _scaled(y, s_states):
        # exp(0.6 k) overflows past k ~ 1200; such states carry no posterior
        # mass but must stay NaN-free for the slice sampler
        s = np.maximum(s_states, -1200.0)
        return y * np.exp(-0.5 * s), s

    def loglik_terms(self, s_states, times):
        x, s = self._scaled(self.y[np.asarray(times) - 1], s_states)
        with np.errstate(over="ignore"):
            return std_skew_t_logpdf(x, StdSkewTParams(self.alpha, self.df)) - 0.5 * s

    def loglik_block(self, s_states, a, b):
        x, s = self._scaled(self.y[a - 1 : b], s_states)
        with np.errstate(over="ignore"):
            return std_skew_t_logpdf(x, StdSkewTParams(self.alpha, self.df)) - 0.5 * s

    def loglik_sum(self, s_1t, alpha=None, df=None):
        a = self.alpha if alpha is None else alpha
        d = self.df if df is None else df
        if d <= 2.0:
            return -np.inf
        x, s = self._scaled(self.y, s_1t)
        with np.errstate(over="ignore"):
            return float(np.sum(std_skew_t_logpdf(x, StdSkewTParams(a, d)) - 0.5 * s))

    def initial_level(self) -> float:
        return float(np.log(np.var(self.y)))

    def static_items(self):
        return {"alpha": self.alpha, "df": self.df}

    @staticmethod
    def _static_log_prior(alpha: float, zeta: float) -> float:
        df = float(np.exp(zeta) + 2.0)
        return (
            float(norm_logpdf(alpha, 0.0, _ALPHA_PRIOR_SD))
            + float(trunc_normal_logpdf(df, _DF_PRIOR_MEAN, _DF_PRIOR_SD, 2.0))
            + zeta  # Jacobian of df = exp(zeta) + 2
        )

    def update_statics_sa(self, state, adapts, priors, r, adapting, rng):
        s_1t = state.s[1:]
        zeta = float(np.log(self.df - 2.0))
        cur = self.loglik_sum(s_1t) + self._static_log_prior(self.alpha, zeta)

        ad_a = adapts.setdefault("sv_alpha_sa", ScalarAdapt())
        a_prop = self.alpha + ad_a.scale * rng.standard_normal()
        prop = self.loglik_sum(s_1t, alpha=a_prop) + self._static_log_prior(a_prop, zeta)
        pr = accept_prob(prop - cur)
        if rng.uniform() < pr:
            self.alpha, cur = float(a_prop), prop
        if adapting:
            ad_a.update(r, pr)

        ad_z = adapts.setdefault("sv_zeta_sa", ScalarAdapt())
        z_prop = zeta + ad_z.scale * rng.standard_normal()
        df_prop = float(np.exp(z_prop) + 2.0)
        prop = self.loglik_sum(s_1t, df=df_prop) + self._static_log_prior(self.alpha, z_prop)
        pr = accept_prob(prop - cur)
        if rng.uniform() < pr:
            self.df = df_prop
        if adapting:
            ad_z.update(r, pr)

    def aa_update(self, state, adapts, priors: PriorHyper, r, adapting, rng):
        """Interweaved (AA) move over three blocks: (mu, df), (phi, sigma), alpha."""
        stilde = to_ancillary(state.s, state.mu, state.phi, state.sigma)
        s0 = state.s[0]
        mu, xi, psi = state.mu, float(np.arctanh(state.phi)), float(np.log(state.sigma))
        alpha, zeta = self.alpha, float(np.log(self.df - 2.0))

        def lp(mu_, xi_, psi_, alpha_, zeta_):
            base = aa_log_posterior(
                stilde, s0, mu_, xi_, psi_, self, priors,
                alpha=alpha_, df=float(np.exp(zeta_) + 2.0),
            )
            return base + self._static_log_prior(alpha_, zeta_)

        cur = lp(mu, xi, psi, alpha, zeta)

        ad_md = adapts.setdefault("sv_mudf_aa", BivariateAdapt())
        chol = try_cholesky(ad_md.proposal_cov())
        if chol is not None:
            prop = np.array([mu, zeta]) + chol @ rng.standard_normal(2)
            cand = lp(prop[0], xi, psi, alpha, prop[1])
            pr = accept_prob(cand - cur)
            if rng.uniform() < pr:
                mu, zeta, cur = float(prop[0]), float(prop[1]), cand
            if adapting:
                ad_md.update_scale(r, pr)
                ad_md.absorb(np.array([mu, zeta]))

        ad_xp = adapts.setdefault("sv_xipsi_aa", BivariateAdapt())
        chol = try_cholesky(ad_xp.proposal_cov())
        if chol is not None:
            prop = np.array([xi, psi]) + chol @ rng.standard_normal(2)
            cand = lp(mu, prop[0], prop[1], alpha, zeta)
            pr = accept_prob(cand - cur)
            if rng.uniform() < pr:
                xi, psi, cur = float(prop[0]), float(prop[1]), cand
            if adapting:
                ad_xp.update_scale(r, pr)
                ad_xp.absorb(np.array([xi, psi]))

        ad_a = adapts.setdefault("sv_alpha_aa", ScalarAdapt())
        a_prop = alpha + ad_a.scale * rng.standard_normal()
        cand = lp(mu, xi, psi, a_prop, zeta)
        pr = accept_prob(cand - cur)
        if rng.uniform() < pr:
            alpha = float(a_prop)
        if adapting:
            ad_a.update(r, pr)

        self.alpha, self.df = alpha, float(np.exp(zeta) + 2.0)
        state.mu, state.phi, state.sigma = mu, float(np.tanh(xi)), float(np.exp(psi))
        state.s = from_ancillary(stilde, s0, state.mu, state.phi, state.sigma)


def simulate_sv_data(T: int, mu: float, phi: float, sigma: float, alpha: float, df: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Simulate (y, s_{0:T}) from the skew-t SV model."""
    from ar1ess.ar1 import Ar1Params, simulate_path
    from ar1ess.dists import std_skew_t_rvs

    s = simulate_path(Ar1Params(mu, phi, sigma), T, rng)
    eps = std_skew_t_rvs(StdSkewTParams(alpha, df), T, rng)
    return np.exp(0.5 * s[1:]) * eps, s


def constant_copula_fit(
    u: np.ndarray,
    family: str,
    n_iter: int,
    burn_in: int,
    seed,
    nu: float = 5.0,
    p: float = 0.5,
) -> DrawsStore:
    """Posterior sampler for a constant copula: adaptive random walk on F_Z(tau).

    tau carries a uniform prior on (-1, 1); for the Student t and mixture
    families nu (and p) are updated exactly as in the dynamic models.
    """
    import time

    u = cop.clip_u(np.asarray(u, dtype=float))
    if u.ndim != 2 or u.shape[1] != 2:
        raise ValueError("u must be a (T, 2) matrix")
    rng = np.random.default_rng(seed)
    needs_nu = family in (cop.STUDENT_T, cop.MIXTURE, cop.MIXTURE_SG)
    needs_p = family in (cop.MIXTURE, cop.MIXTURE_SG)

    def loglik(tau, nu_, p_):
        return float(np.sum(cop.logpdf(family, u[:, 0], u[:, 1], tau,
                                       nu=nu_ if needs_nu else None,
                                       p=p_ if needs_p else None)))

    z = 0.0
    tau = 0.0
    ad = ScalarAdapt()
    names = ["tau"] + (["nu"] if needs_nu else []) + (["p"] if needs_p else [])
    draws = np.empty((n_iter, len(names)))
    cur = loglik(tau, nu, p) + float(np.log1p(-tau * tau))

    t0 = time.perf_counter()
    for r in range(1, n_iter + 1):
        adapting = r <= burn_in
        z_prop = z + ad.scale * rng.standard_normal()
        tau_prop = float(np.tanh(z_prop))
        # uniform tau prior, transformed to z: density (1 - tau^2)
        cand = loglik(tau_prop, nu, p) + float(np.log1p(-tau_prop * tau_prop))
        pr = accept_prob(cand - cur)
        if rng.uniform() < pr:
            z, tau, cur = float(z_prop), tau_prop, cand
        if adapting:
            ad.update(r, pr)

        if needs_p:
            ell = float(np.log(p) - np.log1p(-p))
            ell_p = ell + _MIX_STATIC_STEP * rng.standard_normal()
            p_prop = 1.0 / (1.0 + np.exp(-ell_p))
            log_r = (
                loglik(tau, nu, p_prop) + np.log(p_prop) + np.log1p(-p_prop)
                - loglik(tau, nu, p) - np.log(p) - np.log1p(-p)
            )
            if rng.uniform() < accept_prob(log_r):
                p = float(p_prop)
        if needs_nu:
            zeta = float(np.log(nu - 2.0))
            zeta_p = zeta + _MIX_STATIC_STEP * rng.standard_normal()
            nu_prop = float(np.exp(zeta_p) + 2.0)
            log_r = (
                loglik(tau, nu_prop, p)
                + float(trunc_normal_logpdf(nu_prop, _NU_PRIOR_MEAN, _NU_PRIOR_SD, 2.0)) + zeta_p
                - loglik(tau, nu, p)
                - float(trunc_normal_logpdf(nu, _NU_PRIOR_MEAN, _NU_PRIOR_SD, 2.0)) - zeta
            )
            if rng.uniform() < accept_prob(log_r):
                nu = nu_prop
        row = [tau] + ([nu] if needs_nu else []) + ([p] if needs_p else [])
        draws[r - 1] = row
        if needs_p or needs_nu:
            cur = loglik(tau, nu, p) + float(np.log1p(-tau * tau))
    runtime = time.perf_counter() - t0

    meta = {"seed": seed, "iterations": n_iter, "burn_in": burn_in,
            "model": "ConstantCopula", "family": family}
    return DrawsStore(names=names, draws=draws, burn_in=burn_in,
                      runtime_seconds=runtime, meta=meta)
