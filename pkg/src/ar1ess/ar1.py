"""Gaussian machinery implied by a stationary AR(1) state equation.

The latent process is

    s_t = mu + phi * (s_{t-1} - mu) + sigma * eps_t,   eps_t ~ N(0, 1) iid,

with the stationary initial condition s_0 ~ N(mu, sigma^2 / (1 - phi^2)).
This module provides the stationary and joint moments of ``s_{0:T}``, the
exact conditional law of a contiguous block of states given its boundary
states, and an O(block length) recursive sampler for that conditional law.
All functions are pure; randomness enters only through an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |phi| is clamped to this bound inside variance formulas only, to avoid
# division blow-up near the unit root.  Proposals with |phi| >= 1 must be
# rejected by the caller, never clamped.
_PHI_CAP = 1.0 - 1e-12


@dataclass(frozen=True)
class Ar1Params:
    """Parameters (mu, phi, sigma) of the latent AR(1) process."""

    mu: float
    phi: float
    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not (abs(self.phi) < 1.0):
            raise ValueError(f"|phi| < 1 required for stationarity, got {self.phi}")
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma > 0 required, got {self.sigma}")


@dataclass(frozen=True)
class Block:
    """Contiguous index range {a, ..., b} inside {1, ..., T}."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 1 or self.b < self.a:
            raise ValueError(f"need 1 <= a <= b, got a={self.a}, b={self.b}")

    def __len__(self):
        return self.b - self.a + 1


@dataclass(frozen=True)
class GaussianMoments:
    """Mean vector and covariance matrix of a multivariate normal."""

    mean: np.ndarray
    cov: np.ndarray


def _one_minus_phi_sq(phi: float) -> float:
    capped = min(abs(phi), _PHI_CAP)
    return 1.0 - capped * capped


def stationary_moments(p: Ar1Params) -> tuple[float, float]:
    """Mean and variance of the stationary distribution of the process."""
    return p.mu, p.sigma**2 / _one_minus_phi_sq(p.phi)


def joint_moments(p: Ar1Params, T: int) -> GaussianMoments:
    """Joint law of ``s_{0:T}``: constant mean, covariance (sigma^2/(1-phi^2)) phi^|i-j|."""
    if T < 1:
        raise ValueError("T >= 1 required")
    _, s2 = stationary_moments(p)
    powers = np.empty(T + 1)
    powers[0] = 1.0
    for k in range(1, T + 1):
        powers[k] = powers[k - 1] * p.phi
    idx = np.arange(T + 1)
    cov = s2 * powers[np.abs(idx[:, None] - idx[None, :])]
    mean = np.full(T + 1, p.mu)
    return GaussianMoments(mean=mean, cov=cov)


def _phi_powers(phi: float, n: int) -> np.ndarray:
    """phi^0 .. phi^n by iterated multiplication."""
    out = np.empty(n + 1)
    out[0] = 1.0
    for k in range(1, n + 1):
        out[k] = out[k - 1] * phi
    return out


def block_conditional(
    p: Ar1Params,
    blk: Block,
    s_left: float,
    s_right: float | None,
) -> GaussianMoments:
    """Conditional law of ``s_{a:b}`` given its boundary states.

    ``s_left`` is the state at index ``a - 1``; ``s_right`` the state at
    ``b + 1`` and must be ``None`` exactly when the block is the last one
    (``b = T``).  Uses the closed-form 2x2-inverse conditioning of the joint
    AR(1) Gaussian; O(len(blk)^2) because the full covariance is formed.
    """
    c = len(blk)
    _, s2 = stationary_moments(p)
    pw = _phi_powers(p.phi, c + 1)
    i = np.arange(c)
    # within-block covariance
    cov_bb = s2 * pw[np.abs(i[:, None] - i[None, :])]
    dl = s_left - p.mu
    if s_right is None:
        # last block: condition on the left boundary only
        cross = s2 * pw[i + 1]  # cov(s_{a+i}, s_{a-1})
        mean = p.mu + pw[i + 1] * dl
        cov = cov_bb - np.outer(cross, cross) / s2
    else:
        dr = s_right - p.mu
        pc1 = pw[c + 1]
        # inverse of the 2x2 boundary covariance, times s2
        denom = (1.0 - pc1 * pc1) * s2
        cross_l = s2 * pw[i + 1]  # cov with s_{a-1}
        cross_r = s2 * pw[c - i]  # cov with s_{b+1}
        # mean = mu + [cross_l, cross_r] @ inv(Sigma_boundary) @ [dl, dr]
        w_l = (cross_l - pc1 * cross_r) / denom
        w_r = (cross_r - pc1 * cross_l) / denom
        mean = p.mu + w_l * dl + w_r * dr
        cov = cov_bb - (np.outer(w_l, cross_l) + np.outer(w_r, cross_r))
    cov = 0.5 * (cov + cov.T)
    return GaussianMoments(mean=mean, cov=cov)


def block_conditional_mean(
    p: Ar1Params,
    blk: Block,
    s_left: float,
    s_right: float | None,
) -> np.ndarray:
    """Conditional mean of ``block_conditional`` in O(len(blk)) without the covariance."""
    c = len(blk)
    pw = _phi_powers(p.phi, c + 1)
    i = np.arange(c)
    dl = s_left - p.mu
    if s_right is None:
        return p.mu + pw[i + 1] * dl
    dr = s_right - p.mu
    pc1 = pw[c + 1]
    denom = 1.0 - pc1 * pc1
    return p.mu + ((pw[i + 1] - pc1 * pw[c - i]) * dl + (pw[c - i] - pc1 * pw[i + 1]) * dr) / denom


def sample_block_recursive(
    p: Ar1Params,
    blk: Block,
    s_left: float,
    s_right: float | None,
    rng: np.random.Generator,
    powers: np.ndarray | None = None,
) -> np.ndarray:
    """One exact draw from the conditional law of ``block_conditional``.

    Samples the block states left to right, each from its univariate normal
    conditional given the previously drawn state and the right boundary, so
    the cost is O(len(blk)) and no block covariance is formed.  ``powers``
    may carry a precomputed table phi^0..phi^{>=len+1} to amortize sweeps.
    """
    c = len(blk)
    phi, mu, sig2 = p.phi, p.mu, p.sigma**2
    pw = _phi_powers(phi, c + 1) if powers is None else powers
    z = rng.standard_normal(c)
    out = np.empty(c)
    prev = s_left - mu
    if s_right is None:
        # forward simulation of the state equation
        for t in range(c):
            prev = phi * prev + p.sigma * z[t]
            out[t] = mu + prev
        return out
    dr = s_right - mu
    phi2 = phi * phi
    for t in range(c):
        e1 = pw[c - t]  # phi^(steps from s_{a+t} to the right boundary)
        e2 = e1 * e1
        denom = 1.0 - phi2 * e2  # 1 - phi^{2(c+1-t)}
        mean_dev = (phi * (1.0 - e2) * prev + e1 * (1.0 - phi2) * dr) / denom
        var = sig2 * (1.0 - e2) / denom
        prev = mean_dev + np.sqrt(var) * z[t]
        out[t] = mu + prev
    return out


def initial_state_conditional(p: Ar1Params, s_1: float) -> tuple[float, float]:
    """Full conditional of s_0 given s_1 (and the parameters): N(mu + phi (s_1 - mu), sigma^2)."""
    return p.mu + p.phi * (s_1 - p.mu), p.sigma**2


def simulate_path(p: Ar1Params, T: int, rng: np.random.Generator) -> np.ndarray:
    """Forward-simulate ``s_{0:T}`` from the stationary start."""
    _, var0 = stationary_moments(p)
    s = np.empty(T + 1)
    s[0] = p.mu + np.sqrt(var0) * rng.standard_normal()
    eps = rng.standard_normal(T)
    for t in range(1, T + 1):
        s[t] = p.mu + p.phi * (s[t - 1] - p.mu) + p.sigma * eps[t - 1]
    return s
