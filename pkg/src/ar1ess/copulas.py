"""Bivariate copula families parameterized by Kendall's tau.

Families: Gaussian, Student t, extended Clayton, extended Gumbel, survival
Gumbel and the Gumbel / Student-t mixture.  "Extended" means the single
parameter family is carried to negative Kendall's tau by a 90 degree
rotation of the first coordinate, so for tau < 0 the density is
c(1 - u1, u2) of the positive-tau family.  Densities are evaluated in the
log domain with log-sum-exp'd Archimedean generators, so they stay finite
over the whole open square even for |tau| very close to one.

Also here: h-functions (conditional CDFs) with inverses, copula sampling,
tail-dependence coefficients of the mixture, its Kendall's tau (which
differs from the shared component tau only through a cross term, evaluated
by tensor Gauss-Legendre quadrature), and normalized-margin contour grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtr, ndtri, stdtr, stdtrit

from ar1ess.dists import t_logpdf

GAUSSIAN = "gaussian"
EXT_CLAYTON = "eclayton"
EXT_GUMBEL = "egumbel"
SURVIVAL_GUMBEL = "sgumbel"
STUDENT_T = "studentt"
MIXTURE = "mixture"
MIXTURE_SG = "mixture_sg"  # mixture with the survival-Gumbel orientation

FAMILIES = (GAUSSIAN, EXT_CLAYTON, EXT_GUMBEL, SURVIVAL_GUMBEL, STUDENT_T, MIXTURE, MIXTURE_SG)

# pseudo-observations from a PIT of extreme returns can hit 0/1 in finite
# precision; clip into the open square before evaluation
U_EPS = 1e-10
# guard for the elliptical correlation as |tau| -> 1
_RHO_CAP = 1.0 - 1e-12


@dataclass(frozen=True)
class MixtureParams:
    """Shared Kendall's tau, Student-t degrees of freedom and Student-t weight."""

    tau: float
    nu: float
    p: float

    def __post_init__(self):
        if not (abs(self.tau) < 1):
            raise ValueError(f"|tau| < 1 required, got {self.tau}")
        if not (self.nu > 2):
            raise ValueError(f"nu > 2 required, got {self.nu}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p in [0, 1] required, got {self.p}")


def fisher_z(x):
    """Fisher's Z transform, 0.5 log((1+x)/(1-x)); maps (-1, 1) onto the reals."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise ValueError("fisher_z requires |x| < 1")
    out = np.arctanh(x)
    return out if out.ndim else float(out)


def fisher_z_inv(z):
    out = np.tanh(np.asarray(z, dtype=float))
    return out if out.ndim else float(out)


def clip_u(u):
    return np.clip(u, U_EPS, 1.0 - U_EPS)


def _check_family(family: str):
    if family not in FAMILIES:
        raise ValueError(f"unknown copula family {family!r}; expected one of {FAMILIES}")


def _check_open_unit(*arrays):
    for a in arrays:
        if np.any(~np.isfinite(a)) or np.any(a <= 0.0) or np.any(a >= 1.0):
            raise ValueError("copula arguments must lie strictly inside (0, 1)")


def _softplus(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 30.0, x, np.log1p(np.exp(np.minimum(x, 30.0))))


def _log_expm1(x):
    """log(exp(x) - 1) for x > 0, overflow safe."""
    x = np.asarray(x, dtype=float)
    small = x < 30.0
    return np.where(small, np.log(np.expm1(np.where(small, x, 1.0))), x + np.log1p(-np.exp(-np.where(small, 1.0, x))))


def tau_to_param(family: str, tau):
    """Copula-native parameter for a given Kendall's tau.

    Gaussian / Student t: rho = sin(pi tau / 2).  Gumbel: theta = 1/(1-|tau|).
    Clayton: theta = 2|tau|/(1-|tau|).  For the extended families the sign of
    tau only selects the rotation; the positive-tau theta is returned.
    """
    _check_family(family)
    tau = np.asarray(tau, dtype=float)
    if np.any(np.abs(tau) >= 1.0):
        raise ValueError("|tau| < 1 required")
    if family in (GAUSSIAN, STUDENT_T, MIXTURE, MIXTURE_SG):
        out = np.sin(0.5 * np.pi * tau)
    elif family in (EXT_GUMBEL, SURVIVAL_GUMBEL):
        out = 1.0 / (1.0 - np.abs(tau))
    else:  # extended Clayton
        out = 2.0 * np.abs(tau) / (1.0 - np.abs(tau))
    return out if out.ndim else float(out)


def _rho_from_tau(tau):
    return np.clip(np.sin(0.5 * np.pi * np.asarray(tau, dtype=float)), -_RHO_CAP, _RHO_CAP)


# ---------------------------------------------------------------------------
# base log densities and CDFs, positive-tau orientation


def _gaussian_logpdf(u1, u2, rho):
    x = ndtri(u1)
    y = ndtri(u2)
    om = 1.0 - rho * rho
    return -0.5 * np.log(om) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * om)


def _t_copula_logpdf(u1, u2, rho, nu):
    x = stdtrit(nu, u1)
    y = stdtrit(nu, u2)
    om = 1.0 - rho * rho
    q = (x * x - 2.0 * rho * x * y + y * y) / om
    log_f2 = (
        gammaln(0.5 * (nu + 2.0))
        - gammaln(0.5 * nu)
        - np.log(nu * np.pi)
        - 0.5 * np.log(om)
        - 0.5 * (nu + 2.0) * np.log1p(q / nu)
    )
    return log_f2 - t_logpdf(x, nu) - t_logpdf(y, nu)


def _clayton_logpdf(u1, u2, theta):
    lu = np.log(u1)
    lv = np.log(u2)
    # A = u^-theta + v^-theta - 1 >= 1, via shifted exponentials
    a1 = -theta * lu
    a2 = -theta * lv
    m = np.maximum(a1, a2)
    log_a = m + np.log(np.exp(a1 - m) + np.exp(a2 - m) - np.exp(-m))
    return np.log1p(theta) - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * log_a


def _gumbel_logw(u1, u2, theta):
    """log w with w = ((-log u1)^theta + (-log u2)^theta)^(1/theta)."""
    lx = np.log(-np.log(u1))
    ly = np.log(-np.log(u2))
    m = np.maximum(lx, ly)
    return m + np.log(np.exp(theta * (lx - m)) + np.exp(theta * (ly - m))) / theta


def _gumbel_logpdf(u1, u2, theta):
    lx = np.log(-np.log(u1))
    ly = np.log(-np.log(u2))
    logw = _gumbel_logw(u1, u2, theta)
    w = np.exp(logw)
    return (
        -w
        + (1.0 - 2.0 * theta) * logw
        + (theta - 1.0) * (lx + ly)
        + np.log(w + theta - 1.0)
        - np.log(u1)
        - np.log(u2)
    )


def _gumbel_cdf(u1, u2, theta):
    return np.exp(-np.exp(_gumbel_logw(u1, u2, theta)))


def _clayton_cdf(u1, u2, theta):
    a1 = -theta * np.log(u1)
    a2 = -theta * np.log(u2)
    m = np.maximum(a1, a2)
    log_a = m + np.log(np.exp(a1 - m) + np.exp(a2 - m) - np.exp(-m))
    return np.exp(-log_a / theta)


# ---------------------------------------------------------------------------
# h-functions (conditional CDF of U2 given U1 = u1), positive-tau orientation


def _gaussian_h(u2, u1, rho):
    return ndtr((ndtri(u2) - rho * ndtri(u1)) / np.sqrt(1.0 - rho * rho))


def _gaussian_h_inv(q, u1, rho):
    return ndtr(ndtri(q) * np.sqrt(1.0 - rho * rho) + rho * ndtri(u1))


def _t_h(u2, u1, rho, nu):
    x = stdtrit(nu, u1)
    y = stdtrit(nu, u2)
    scale = np.sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0))
    return stdtr(nu + 1.0, (y - rho * x) / scale)


def _t_h_inv(q, u1, rho, nu):
    x = stdtrit(nu, u1)
    scale = np.sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0))
    y = stdtrit(nu + 1.0, q) * scale + rho * x
    return stdtr(nu, y)


def _clayton_h(u2, u1, theta):
    # h = (1 + u1^theta (u2^-theta - 1))^(-(theta+1)/theta), all in log space
    log_inner = theta * np.log(u1) + _log_expm1(-theta * np.log(u2))
    return np.exp(-(theta + 1.0) / theta * _softplus(log_inner))


def _clayton_h_inv(q, u1, theta):
    # v = ((q^(-theta/(theta+1)) - 1) u1^-theta + 1)^(-1/theta)
    log_inner = _log_expm1(-theta / (theta + 1.0) * np.log(q)) - theta * np.log(u1)
    return np.exp(-_softplus(log_inner) / theta)


def _gumbel_h(u2, u1, theta):
    lx = np.log(-np.log(u1))
    logw = _gumbel_logw(u1, u2, theta)
    w = np.exp(logw)
    return np.exp(-w + (1.0 - theta) * logw + (theta - 1.0) * lx - np.log(u1))


def _gumbel_h_inv(q, u1, theta):
    """Invert the Gumbel h-function in u2 by bisection (monotone, ~2^-52 in u)."""
    q = np.asarray(q, dtype=float)
    u1 = np.broadcast_to(np.asarray(u1, dtype=float), q.shape)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), q.shape)
    lo = np.full(q.shape, U_EPS)
    hi = np.full(q.shape, 1.0 - U_EPS)
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        too_low = _gumbel_h(mid, u1, theta) < q
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# public dispatch: rotation handling + mixture


def _require(cond: bool, what: str):
    if not cond:
        raise ValueError(what)


def logpdf(family: str, u1, u2, tau, nu: float | None = None, p: float | None = None):
    """Log copula density at (u1, u2); vectorized over the inputs and tau."""
    _check_family(family)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    _check_open_unit(u1, u2)
    u1 = clip_u(u1)
    u2 = clip_u(u2)
    tau = np.asarray(tau, dtype=float)
    if family == GAUSSIAN:
        out = _gaussian_logpdf(u1, u2, _rho_from_tau(tau))
    elif family == STUDENT_T:
        _require(nu is not None and nu > 2, "Student t copula requires nu > 2")
        out = _t_copula_logpdf(u1, u2, _rho_from_tau(tau), nu)
    elif family in (MIXTURE, MIXTURE_SG):
        _require(nu is not None and nu > 2, "mixture copula requires nu > 2")
        _require(p is not None and 0.0 <= p <= 1.0, "mixture copula requires p in [0, 1]")
        gumbel = EXT_GUMBEL if family == MIXTURE else SURVIVAL_GUMBEL
        if p >= 1.0:
            out = _t_copula_logpdf(u1, u2, _rho_from_tau(tau), nu)
        elif p <= 0.0:
            out = logpdf(gumbel, u1, u2, tau)
        else:
            lt = _t_copula_logpdf(u1, u2, _rho_from_tau(tau), nu)
            lg = logpdf(gumbel, u1, u2, tau)
            out = np.logaddexp(np.log(p) + lt, np.log1p(-p) + lg)
    elif family == EXT_CLAYTON:
        b1 = np.where(tau < 0, 1.0 - u1, u1)
        theta = np.maximum(tau_to_param(family, tau), 1e-10)
        out = _clayton_logpdf(b1, u2, theta)
    elif family == EXT_GUMBEL:
        b1 = np.where(tau < 0, 1.0 - u1, u1)
        out = _gumbel_logpdf(b1, u2, tau_to_param(family, tau))
    else:  # survival Gumbel; rotation flips the first coordinate back
        b1 = np.where(tau < 0, u1, 1.0 - u1)
        out = _gumbel_logpdf(b1, 1.0 - u2, tau_to_param(family, tau))
    return out if np.ndim(out) else float(out)


def _t_copula_cdf_scalar(u1, u2, rho, nu):
    if u1 <= 0.0 or u2 <= 0.0:
        return 0.0
    if u1 >= 1.0:
        return float(min(u2, 1.0))
    if u2 >= 1.0:
        return float(u1)
    val, _ = integrate.quad(
        lambda w: _t_h(u2, w, rho, nu), 0.0, u1, epsabs=1e-11, epsrel=1e-9, limit=200
    )
    return float(min(max(val, 0.0), min(u1, u2)))


def _gaussian_cdf_scalar(u1, u2, rho):
    if u1 <= 0.0 or u2 <= 0.0:
        return 0.0
    if u1 >= 1.0:
        return float(min(u2, 1.0))
    if u2 >= 1.0:
        return float(u1)
    val, _ = integrate.quad(
        lambda w: _gaussian_h(u2, w, rho), 0.0, u1, epsabs=1e-11, epsrel=1e-9, limit=200
    )
    return float(min(max(val, 0.0), min(u1, u2)))


def cdf(family: str, u1, u2, tau, nu: float | None = None, p: float | None = None):
    """Copula CDF; exact on the boundary (C(u, 1) = u, C(0, v) = 0).

    Elliptical families use deterministic adaptive quadrature of the
    h-function (tolerance ~1e-9); Archimedean families are closed form.
    """
    _check_family(family)
    u1a = np.atleast_1d(np.asarray(u1, dtype=float))
    u2a = np.atleast_1d(np.asarray(u2, dtype=float))
    u1a, u2a = np.broadcast_arrays(u1a, u2a)
    taus = np.broadcast_to(np.asarray(tau, dtype=float), u1a.shape)

    def archimedean(a, b, tv, fam):
        if a <= 0.0 or b <= 0.0:
            return 0.0
        if a >= 1.0:
            return float(min(b, 1.0))
        if b >= 1.0:
            return float(a)
        aa, bb = min(a, 1.0), min(b, 1.0)
        th = float(tau_to_param(fam, tv))
        if fam == EXT_CLAYTON:
            th = max(th, 1e-10)
            base = _clayton_cdf
        else:
            base = _gumbel_cdf
        if fam in (EXT_GUMBEL, EXT_CLAYTON):
            if tv >= 0:
                return float(base(clip_u(aa), clip_u(bb), th))
            return float(bb - base(clip_u(1.0 - aa), clip_u(bb), th))
        # survival Gumbel at tau >= 0: C(u,v) = u + v - 1 + C0(1-u, 1-v)
        if tv >= 0:
            return float(max(aa + bb - 1.0 + _gumbel_cdf(clip_u(1.0 - aa), clip_u(1.0 - bb), th), 0.0))
        # rotated survival Gumbel (first coordinate flipped)
        return float(bb - max((1.0 - aa) + bb - 1.0 + _gumbel_cdf(clip_u(aa), clip_u(1.0 - bb), th), 0.0))

    def one(a, b, tv):
        if family == GAUSSIAN:
            return _gaussian_cdf_scalar(a, b, float(_rho_from_tau(tv)))
        if family == STUDENT_T:
            _require(nu is not None and nu > 2, "Student t copula requires nu > 2")
            return _t_copula_cdf_scalar(a, b, float(_rho_from_tau(tv)), nu)
        if family in (MIXTURE, MIXTURE_SG):
            _require(nu is not None and nu > 2, "mixture copula requires nu > 2")
            _require(p is not None and 0.0 <= p <= 1.0, "mixture copula requires p in [0, 1]")
            ct = _t_copula_cdf_scalar(a, b, float(_rho_from_tau(tv)), nu)
            cg = archimedean(a, b, tv, EXT_GUMBEL if family == MIXTURE else SURVIVAL_GUMBEL)
            return p * ct + (1.0 - p) * cg
        return archimedean(a, b, tv, family)

    out = np.array([one(a, b, tv) for a, b, tv in zip(u1a.ravel(), u2a.ravel(), taus.ravel())])
    out = out.reshape(u1a.shape)
    return out if np.ndim(u1) or np.ndim(u2) else float(out[0])


def h_function(family: str, u2, u1, tau, nu: float | None = None):
    """Conditional CDF P(U2 <= u2 | U1 = u1) for the single-component families."""
    _check_family(family)
    if family in (MIXTURE, MIXTURE_SG):
        raise ValueError("the mixture is sampled by component, not through one h-function")
    u1 = clip_u(np.asarray(u1, dtype=float))
    u2 = clip_u(np.asarray(u2, dtype=float))
    tau = np.asarray(tau, dtype=float)
    if family == GAUSSIAN:
        return _gaussian_h(u2, u1, _rho_from_tau(tau))
    if family == STUDENT_T:
        return _t_h(u2, u1, _rho_from_tau(tau), nu)
    if family == EXT_CLAYTON:
        b1 = np.where(tau < 0, 1.0 - u1, u1)
        return _clayton_h(u2, b1, np.maximum(tau_to_param(family, tau), 1e-10))
    if family == EXT_GUMBEL:
        b1 = np.where(tau < 0, 1.0 - u1, u1)
        return _gumbel_h(u2, b1, tau_to_param(family, tau))
    # survival Gumbel: P(U2 <= u2 | U1) = 1 - h0(1-u2 | base u1)
    b1 = np.where(tau < 0, u1, 1.0 - u1)
    return 1.0 - _gumbel_h(clip_u(1.0 - u2), b1, tau_to_param(family, tau))


def h_inverse(family: str, q, u1, tau, nu: float | None = None):
    """Inverse of ``h_function`` in its first argument."""
    _check_family(family)
    if family in (MIXTURE, MIXTURE_SG):
        raise ValueError("the mixture is sampled by component, not through one h-function")
    q = np.asarray(q, dtype=float)
    u1 = clip_u(np.asarray(u1, dtype=float))
    tau = np.asarray(tau, dtype=float)
    if family == GAUSSIAN:
        return _gaussian_h_inv(q, u1, _rho_from_tau(tau))
    if family == STUDENT_T:
        return _t_h_inv(q, u1, _rho_from_tau(tau), nu)
    if family == EXT_CLAYTON:
        b1 = np.where(tau < 0, 1.0 - u1, u1)
        return _clayton_h_inv(q, b1, np.maximum(tau_to_param(family, tau), 1e-10))
    if family == EXT_GUMBEL:
        b1 = np.where(tau < 0, 1.0 - u1, u1)
        theta = np.broadcast_to(tau_to_param(family, tau), q.shape)
        return _gumbel_h_inv(q, b1, theta)
    b1 = np.where(tau < 0, u1, 1.0 - u1)
    theta = np.broadcast_to(tau_to_param(family, tau), q.shape)
    return 1.0 - _gumbel_h_inv(1.0 - q, b1, theta)


def sample(family: str, tau, n: int | None = None, rng: np.random.Generator | None = None,
           nu: float | None = None, p: float | None = None) -> np.ndarray:
    """iid pairs from the copula; ``tau`` may be scalar or one value per draw.

    Archimedean and Gaussian pairs come from the conditional-distribution
    (h-function inverse) method; Student t pairs from the latent elliptical
    representation; mixture pairs via a Bernoulli(p) component indicator.
    """
    _check_family(family)
    if rng is None:
        raise ValueError("an explicit numpy Generator is required")
    tau = np.asarray(tau, dtype=float)
    size = int(n) if n is not None else tau.shape[0]
    taus = np.broadcast_to(tau, (size,))
    if family in (MIXTURE, MIXTURE_SG):
        _require(nu is not None and nu > 2, "mixture copula requires nu > 2")
        _require(p is not None and 0.0 <= p <= 1.0, "mixture copula requires p in [0, 1]")
        pick_t = rng.uniform(size=size) < p
        out = np.empty((size, 2))
        if pick_t.any():
            out[pick_t] = sample(STUDENT_T, taus[pick_t], rng=rng, nu=nu)
        if (~pick_t).any():
            gumbel = EXT_GUMBEL if family == MIXTURE else SURVIVAL_GUMBEL
            out[~pick_t] = sample(gumbel, taus[~pick_t], rng=rng)
        return out
    if family == STUDENT_T:
        _require(nu is not None and nu > 2, "Student t copula requires nu > 2")
        rho = _rho_from_tau(taus)
        z1 = rng.standard_normal(size)
        z2 = rho * z1 + np.sqrt(1.0 - rho * rho) * rng.standard_normal(size)
        sw = np.sqrt(rng.chisquare(nu, size) / nu)
        return np.column_stack([stdtr(nu, z1 / sw), stdtr(nu, z2 / sw)])
    u1 = rng.uniform(size=size)
    q = rng.uniform(size=size)
    u2 = h_inverse(family, q, u1, taus, nu=nu)
    return np.column_stack([clip_u(u1), clip_u(u2)])


# ---------------------------------------------------------------------------
# Kendall's tau of the mixture, tail dependence, contour grids


def make_tau_logpdf(family: str, u1, u2, nu: float | None = None, p: float | None = None):
    """Precompiled density evaluator for fixed data: f(tau, sl) = logpdf on a slice.

    Samplers evaluate the same pseudo-observations thousands of times at
    varying tau; this validates and transforms the data once and returns a
    closure that only does the tau-dependent arithmetic.  Results agree with
    ``logpdf`` to floating-point rounding.
    """
    _check_family(family)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    _check_open_unit(u1, u2)
    u1 = clip_u(u1)
    u2 = clip_u(u2)
    full = slice(None)

    if family == GAUSSIAN:
        x, y = ndtri(u1), ndtri(u2)
        xx, yy, xy = x * x, y * y, x * y

        def f(tau, sl=full):
            rho = _rho_from_tau(tau)
            om = 1.0 - rho * rho
            return -0.5 * np.log(om) - (rho * rho * (xx[sl] + yy[sl]) - 2.0 * rho * xy[sl]) / (2.0 * om)

        return f

    if family in (STUDENT_T, MIXTURE, MIXTURE_SG):
        _require(nu is not None and nu > 2, "Student t component requires nu > 2")
        x, y = stdtrit(nu, u1), stdtrit(nu, u2)
        xx, yy, xy = x * x, y * y, x * y
        base = t_logpdf(x, nu) + t_logpdf(y, nu)
        log_norm = gammaln(0.5 * (nu + 2.0)) - gammaln(0.5 * nu) - np.log(nu * np.pi)

        def f_t(tau, sl=full):
            rho = _rho_from_tau(tau)
            om = 1.0 - rho * rho
            q = (xx[sl] - 2.0 * rho * xy[sl] + yy[sl]) / om
            return log_norm - 0.5 * np.log(om) - 0.5 * (nu + 2.0) * np.log1p(q / nu) - base[sl]

        if family == STUDENT_T:
            return f_t
        _require(p is not None and 0.0 <= p <= 1.0, "mixture requires p in [0, 1]")
        gum = EXT_GUMBEL if family == MIXTURE else SURVIVAL_GUMBEL
        f_g = make_tau_logpdf(gum, u1, u2)

        def f_mix(tau, sl=full, p=p, nu_override=None):
            lt = f_t(tau, sl) if nu_override is None else _t_copula_logpdf(
                u1[sl], u2[sl], _rho_from_tau(tau), nu_override)
            if p >= 1.0:
                return lt
            lg = f_g(tau, sl)
            if p <= 0.0:
                return lg
            return np.logaddexp(np.log(p) + lt, np.log1p(-p) + lg)

        return f_mix

    if family == EXT_CLAYTON:
        l1, l1r, l2 = np.log(u1), np.log(1.0 - u1), np.log(u2)

        def f(tau, sl=full):
            theta = np.maximum(2.0 * np.abs(tau) / (1.0 - np.abs(tau)), 1e-10)
            lu = np.where(tau < 0, l1r[sl], l1[sl])
            a1, a2 = -theta * lu, -theta * l2[sl]
            m = np.maximum(a1, a2)
            log_a = m + np.log(np.exp(a1 - m) + np.exp(a2 - m) - np.exp(-m))
            return np.log1p(theta) - (theta + 1.0) * (lu + l2[sl]) - (2.0 + 1.0 / theta) * log_a

        return f

    # extended or survival Gumbel
    if family == EXT_GUMBEL:
        lx, lxr = np.log(-np.log(u1)), np.log(-np.log(1.0 - u1))
        ly = np.log(-np.log(u2))

        def f(tau, sl=full):
            theta = 1.0 / (1.0 - np.abs(tau))
            lxs = np.where(tau < 0, lxr[sl], lx[sl])
            return _gumbel_logpdf_from_logs(lxs, ly[sl], theta)

        return f

    lx, lxr = np.log(-np.log(1.0 - u1)), np.log(-np.log(u1))
    ly = np.log(-np.log(1.0 - u2))

    def f(tau, sl=full):
        theta = 1.0 / (1.0 - np.abs(tau))
        lxs = np.where(tau < 0, lxr[sl], lx[sl])
        return _gumbel_logpdf_from_logs(lxs, ly[sl], theta)

    return f


def _gumbel_logpdf_from_logs(lx, ly, theta):
    """Gumbel log density from lx = log(-log u1), ly = log(-log u2)."""
    m = np.maximum(lx, ly)
    logw = m + np.log(np.exp(theta * (lx - m)) + np.exp(theta * (ly - m))) / theta
    w = np.exp(logw)
    return (
        -w
        + (1.0 - 2.0 * theta) * logw
        + (theta - 1.0) * (lx + ly)
        + np.log(w + theta - 1.0)
        + np.exp(lx) + np.exp(ly)  # -log u1 - log u2
    )


def _t_copula_cdf_grid(u_nodes: np.ndarray, v_nodes: np.ndarray, rho: float, nu: float,
                       n_fine: int = 4001) -> np.ndarray:
    """C_t(u_i, v_j) on a tensor grid via cumulative quadrature of the h-function."""
    w_grid = np.linspace(0.0, 1.0, n_fine)
    wc = clip_u(w_grid)
    hv = _t_h(clip_u(v_nodes)[None, :], wc[:, None], rho, nu)
    cum = integrate.cumulative_simpson(hv, x=w_grid, axis=0, initial=0.0)
    out = np.empty((u_nodes.size, v_nodes.size))
    for j in range(v_nodes.size):
        out[:, j] = np.interp(u_nodes, w_grid, cum[:, j])
    return out


def mixture_tau(params: MixtureParams, n_nodes: int = 200, survival: bool = False) -> float:
    """Kendall's tau of the mixture copula.

    Both components share Kendall's tau (the 90-degree rotation flips its
    sign exactly, and the survival reflection preserves it), so
    4 int C^M dC^M - 1 reduces to (p^2 + (1-p)^2) tau plus a weighted cross
    term int (C^G c^t + C^t c^G), evaluated by tensor Gauss-Legendre
    quadrature in Gaussian-score coordinates (>= n_nodes^2 points) so that
    corner mass is resolved.  At p = 0 or 1 the cross term has zero weight
    and the component tau is returned exactly.
    """
    tau, nu, p = params.tau, params.nu, params.p
    w_cross = p * (1.0 - p)
    if w_cross == 0.0:
        return tau
    gumbel = SURVIVAL_GUMBEL if survival else EXT_GUMBEL
    z, wz = np.polynomial.legendre.leggauss(n_nodes)
    z = 8.0 * z
    wz = 8.0 * wz
    u = ndtr(z)
    phi_w = wz * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    rho = float(_rho_from_tau(tau))
    uu1, uu2 = np.meshgrid(u, u, indexing="ij")
    ct_grid = _t_copula_cdf_grid(u, u, rho, nu)
    cg_grid = cdf(gumbel, uu1.ravel(), uu2.ravel(), tau).reshape(uu1.shape)
    lt = _t_copula_logpdf(clip_u(uu1), clip_u(uu2), rho, nu)
    lg = logpdf(gumbel, uu1, uu2, np.full_like(uu1, tau))
    integrand = cg_grid * np.exp(lt) + ct_grid * np.exp(lg)
    cross = float(phi_w @ integrand @ phi_w)
    return (p * p + (1.0 - p) ** 2) * tau + 4.0 * w_cross * cross - 2.0 * w_cross


def t_tail_dependence(tau: float, nu: float) -> float:
    """Tail coefficient (equal in both tails) of the Student t copula at Kendall's tau."""
    s = np.sin(0.5 * np.pi * tau)
    return float(2.0 * stdtr(nu + 1.0, -np.sqrt((nu + 1.0) * (1.0 - s) / (1.0 + s))))


def gumbel_upper_tail(tau: float) -> float:
    """Upper tail coefficient of the Gumbel copula, 2 - 2^(1-tau)."""
    return float(2.0 - 2.0 ** (1.0 - tau))


def tail_dependence(params: MixtureParams, survival: bool = False) -> tuple[float, float]:
    """(lower, upper) tail-dependence coefficients of the mixture; requires tau >= 0.

    With the survival-Gumbel orientation the Gumbel mass sits in the lower
    tail instead of the upper one.
    """
    if params.tau < 0:
        raise ValueError("tail_dependence requires tau >= 0; use quarter_tail_dependence")
    lam_t = t_tail_dependence(params.tau, params.nu)
    lam_g = (1.0 - params.p) * gumbel_upper_tail(params.tau)
    if survival:
        return params.p * lam_t + lam_g, params.p * lam_t
    return params.p * lam_t, params.p * lam_t + lam_g


def quarter_tail_dependence(params: MixtureParams, survival: bool = False) -> tuple[float, float]:
    """(lower-right, upper-left) coefficients for tau <= 0, via the reflected mixture."""
    if params.tau > 0:
        raise ValueError("quarter_tail_dependence requires tau <= 0")
    return tail_dependence(MixtureParams(-params.tau, params.nu, params.p), survival=survival)


def normalized_contour_grid(family: str, tau: float, nu: float | None = None,
                            p: float | None = None, lim: float = 3.0, n: int = 121):
    """Density against Gaussian-score margins, c(Phi(z1), Phi(z2)) phi(z1) phi(z2).

    Returns (z, grid) ready for contour plotting or CSV export.
    """
    z = np.linspace(-lim, lim, n)
    u = ndtr(z)
    uu1, uu2 = np.meshgrid(u, u, indexing="ij")
    lc = logpdf(family, uu1, uu2, np.full_like(uu1, float(tau)), nu=nu, p=p)
    lphi = -0.5 * z * z - 0.5 * np.log(2.0 * np.pi)
    grid = np.exp(lc + lphi[:, None] + lphi[None, :])
    return z, grid
