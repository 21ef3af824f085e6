"""Elliptical slice sampling for targets of the form likelihood x N(0, Sigma) prior.

The kernel never evaluates the prior density: a fresh prior draw spans an
ellipse through the current state, an angle is drawn uniformly and the
bracket is shrunk toward zero until the log-likelihood clears a slice
threshold.  Termination is guaranteed because the angle collapses onto the
current state, which lies on the slice by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

# A correct target cannot loop forever; a NaN-poisoned likelihood can.
_MAX_SHRINK = 1000
_WARN_SHRINK = 100


@dataclass(frozen=True)
class EssTarget:
    """Target specification: a fresh-draw sampler for the N(0, Sigma) prior and a log-likelihood."""

    prior_sampler: Callable[[np.random.Generator], np.ndarray]
    loglik: Callable[[np.ndarray], float]


def ess_step(
    theta: np.ndarray,
    target: EssTarget,
    rng: np.random.Generator,
    cur_loglik: float | None = None,
) -> tuple[np.ndarray, float]:
    """One transition of the elliptical slice sampling Markov kernel.

    Parameters
    ----------
    theta : current state, distributed (at stationarity) as prior x likelihood.
    target : prior sampler and log-likelihood.
    rng : random generator.
    cur_loglik : optional cached value of ``target.loglik(theta)``.

    Returns
    -------
    (theta_new, loglik_new)
    """
    ll0 = target.loglik(theta) if cur_loglik is None else cur_loglik
    if np.isnan(ll0):
        raise FloatingPointError("log-likelihood is NaN at the current state")
    v = target.prior_sampler(rng)
    # slice threshold kept in the log domain: ratio form underflows for long series
    logy = ll0 + np.log(rng.uniform())
    w = rng.uniform(0.0, 2.0 * np.pi)
    w_min, w_max = w - 2.0 * np.pi, w
    for it in range(_MAX_SHRINK):
        prop = np.cos(w) * theta + np.sin(w) * v
        ll = target.loglik(prop)
        if np.isnan(ll):
            raise FloatingPointError("log-likelihood returned NaN during slice shrinkage")
        if ll > logy:
            if it >= _WARN_SHRINK:
                logger.warning("elliptical slice step needed %d shrink iterations", it + 1)
            return prop, ll
        if w < 0.0:
            w_min = w
        else:
            w_max = w
        w = rng.uniform(w_min, w_max)
    raise RuntimeError(f"elliptical slice sampling did not accept within {_MAX_SHRINK} shrink steps")
