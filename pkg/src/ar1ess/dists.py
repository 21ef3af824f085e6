"""Scalar distributions used by likelihoods and priors.

Student t building blocks, the skew Student t density (Azzalini form), its
mean-zero / unit-variance standardization with distribution function and
quantile, and the truncated normal log density.  Everything is written
against ``scipy.special`` ufuncs so the log densities stay cheap inside
MCMC loops.

Note on the skew-t standardization: the slant enters through
delta = alpha / sqrt(1 + alpha^2) (Azzalini's definition).  Only this form
gives a mean shift whose sign follows the sign of alpha, which the
moment and skewness-direction tests below pin down.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, log_ndtr, ndtr, stdtr, stdtrit

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class SkewTParams:
    """Location / scale / slant / degrees-of-freedom of a skew Student t."""

    xi: float
    omega: float
    alpha: float
    df: float

    def __post_init__(self):
        if not (self.omega > 0):
            raise ValueError(f"omega > 0 required, got {self.omega}")
        if not (self.df > 0):
            raise ValueError(f"df > 0 required, got {self.df}")


@dataclass(frozen=True)
class StdSkewTParams:
    """Slant and degrees of freedom of the standardized skew Student t (df > 2)."""

    alpha: float
    df: float

    def __post_init__(self):
        if not (self.df > 2):
            raise ValueError(f"df > 2 required for standardization, got {self.df}")


def t_logpdf(x, df):
    """Student t log density (ufunc-based, no scipy.stats wrapper overhead)."""
    x = np.asarray(x, dtype=float)
    return (
        gammaln(0.5 * (df + 1.0))
        - gammaln(0.5 * df)
        - 0.5 * np.log(df * np.pi)
        - 0.5 * (df + 1.0) * np.log1p(x * x / df)
    )


def t_cdf(x, df):
    return stdtr(df, np.asarray(x, dtype=float))


def t_ppf(u, df):
    return stdtrit(df, np.asarray(u, dtype=float))


def t_logcdf(x, df):
    """log T_df(x), switching to the polynomial tail expansion when stdtr underflows."""
    x = np.asarray(x, dtype=float)
    c = stdtr(df, x)
    with np.errstate(divide="ignore"):
        out = np.log(c)
    tiny = c < 1e-290
    if np.any(tiny):
        xt = np.where(tiny, np.minimum(x, -1.0), -2.0)
        # T_df(x) ~ C * df^{(df-1)/2} |x|^{-df} for x -> -inf, C the t-density constant
        log_c0 = gammaln(0.5 * (df + 1.0)) - gammaln(0.5 * df) - 0.5 * np.log(df * np.pi)
        tail = log_c0 + 0.5 * (df - 1.0) * np.log(df) - df * np.log(np.abs(xt))
        out = np.where(tiny, tail, out)
    return out


def skew_t_logpdf(x, p: SkewTParams):
    """Log density of the skew Student t: (2/omega) t(z|df) T(alpha z sqrt((df+1)/(z^2+df)) | df+1)."""
    z = (np.asarray(x, dtype=float) - p.xi) / p.omega
    arg = p.alpha * z * np.sqrt((p.df + 1.0) / (z * z + p.df))
    return np.log(2.0 / p.omega) + t_logpdf(z, p.df) + t_logcdf(arg, p.df + 1.0)


@lru_cache(maxsize=512)
def _std_constants(alpha: float, df: float) -> tuple[float, float]:
    delta = alpha / np.sqrt(1.0 + alpha * alpha)
    b = np.exp(0.5 * np.log(df / np.pi) + gammaln(0.5 * (df - 1.0)) - gammaln(0.5 * df))
    omega = 1.0 / np.sqrt(df / (df - 2.0) - (b * delta) ** 2)
    xi = -omega * b * delta
    return xi, omega


def std_skew_t_constants(p: StdSkewTParams) -> tuple[float, float]:
    """Location xi and scale omega that give the skew t zero mean and unit variance."""
    return _std_constants(p.alpha, p.df)


def _as_skew_t(p: StdSkewTParams) -> SkewTParams:
    xi, omega = _std_constants(p.alpha, p.df)
    return SkewTParams(xi=xi, omega=omega, alpha=p.alpha, df=p.df)


def std_skew_t_logpdf(x, p: StdSkewTParams):
    return skew_t_logpdf(x, _as_skew_t(p))


def std_skew_t_pdf(x, p: StdSkewTParams):
    return np.exp(std_skew_t_logpdf(x, p))


def std_skew_t_cdf(x, p: StdSkewTParams):
    """Distribution function by adaptive quadrature of the density.

    There is no closed form; the standardization constants are memoized and
    the integral is split at the density's location parameter for accuracy
    in both tails.
    """
    sp = _as_skew_t(p)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape)

    def pdf(u):
        return np.exp(skew_t_logpdf(u, sp))

    for i, xi_ in np.ndenumerate(xs):
        if not np.isfinite(xi_):
            out[i] = 1.0 if xi_ > 0 else 0.0
            continue
        if xi_ <= sp.xi:
            val, _ = integrate.quad(pdf, -np.inf, xi_, epsabs=1e-12, epsrel=1e-10, limit=200)
            out[i] = val
        else:
            upper, _ = integrate.quad(pdf, xi_, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200)
            out[i] = 1.0 - upper
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(x) else float(out[0])


def std_skew_t_quantile(u, p: StdSkewTParams):
    """Quantile by bracketed root finding on the quadrature CDF (1e-10 in u)."""
    us = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((us <= 0.0) | (us >= 1.0)):
        raise ValueError("quantile requires u in (0, 1)")
    out = np.empty(us.shape)
    for i, ui in np.ndenumerate(us):
        # start from the symmetric-t quantile and expand the bracket geometrically
        x0 = float(t_ppf(ui, p.df))
        lo, hi = x0 - 1.0, x0 + 1.0
        width = 1.0
        while std_skew_t_cdf(lo, p) > ui:
            width *= 2.0
            lo -= width
        while std_skew_t_cdf(hi, p) < ui:
            width *= 2.0
            hi += width
        out[i] = optimize.brentq(lambda x: std_skew_t_cdf(x, p) - ui, lo, hi, xtol=1e-12, rtol=8.9e-16)
    return out if np.ndim(u) else float(out[0])


def std_skew_t_rvs(p: StdSkewTParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws via the scale-mixture representation (skew normal over sqrt(chi^2_df / df))."""
    delta = p.alpha / np.sqrt(1.0 + p.alpha * p.alpha)
    z0 = np.abs(rng.standard_normal(size))
    z1 = rng.standard_normal(size)
    sn = delta * z0 + np.sqrt(1.0 - delta * delta) * z1
    w = rng.chisquare(p.df, size) / p.df
    xi, omega = _std_constants(p.alpha, p.df)
    return xi + omega * sn / np.sqrt(w)


def trunc_normal_logpdf(x, mean: float, sd: float, lower: float):
    """Log density of N(mean, sd^2) restricted and renormalized to (lower, inf)."""
    if not (sd > 0):
        raise ValueError(f"sd > 0 required, got {sd}")
    x = np.asarray(x, dtype=float)
    z = (x - mean) / sd
    base = -0.5 * z * z - 0.5 * _LOG_2PI - np.log(sd)
    if np.isfinite(lower):
        # log P(X > lower) = log Phi((mean - lower)/sd)
        base = base - log_ndtr((mean - lower) / sd)
        base = np.where(x > lower, base, -np.inf)
    return base if base.ndim else float(base)


def norm_logpdf(x, mean: float, sd: float):
    z = (np.asarray(x, dtype=float) - mean) / sd
    return -0.5 * z * z - 0.5 * _LOG_2PI - np.log(sd)


def norm_cdf(x):
    return ndtr(np.asarray(x, dtype=float))
