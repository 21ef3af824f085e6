"""Two-step estimation and rolling one-day-ahead forecasting.

Step one fits a skew Student-t stochastic volatility model to each margin;
posterior-mode parameters and mode latent paths turn the returns into
pseudo copula data through the probability integral transform.  Step two
fits the chosen dependence model (dynamic or constant, mixture or Student
t) on that data.

Forecasting freezes all constants at their training posterior modes and,
for each test day, refits only the latent paths on a trailing window,
evolves the AR(1) states one step, and evaluates the predictive density
(copula times margins) at the realized observation; the cumulative log
predictive score sums those log densities.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ar1ess import copulas as cop
from ar1ess.dists import StdSkewTParams, std_skew_t_cdf, std_skew_t_logpdf
from ar1ess.diagnostics import mode_path, posterior_mode
from ar1ess.engine import DrawsStore, SamplerSpec, run_chain
from ar1ess.models import DynamicCopulaModel, SkewTSvModel, constant_copula_fit

logger = logging.getLogger(__name__)

MENU = ("dyn_mix", "const_mix", "dyn_t", "const_t")


@dataclass(frozen=True)
class RunSettings:
    """Iteration counts and sampler spec for one estimation stage."""

    n_iter: int = 31000
    burn_in: int = 1000
    blocksize: int | str = 5
    interweave: bool = True

    def spec(self) -> SamplerSpec:
        return SamplerSpec(self.blocksize, self.interweave)


@dataclass(frozen=True)
class ForecastSettings:
    """Window-refit settings: only latent paths are updated in the test period."""

    n_iter: int = 11000
    burn_in: int = 1000
    window: int = 100


@dataclass
class TwoStepFit:
    """Everything the forecast stage needs from training, plus draw stores."""

    entry: str
    marginal_params: list[dict]
    marginal_paths: np.ndarray  # (T, 2) posterior-mode log variances
    pseudo_u: np.ndarray  # (T, 2) PIT copula data
    copula_params: dict
    copula_path: np.ndarray | None  # (T,) mode path of F_Z(tau), dynamic entries only
    marginal_stores: list[DrawsStore] = field(default_factory=list)
    copula_store: DrawsStore | None = None


def _require_entry(entry: str):
    if entry not in MENU:
        raise ValueError(f"unknown model menu entry {entry!r}; expected one of {MENU}")


def pit_pseudo_observations(y: np.ndarray, s_hat: np.ndarray, alpha: float, df: float) -> np.ndarray:
    """Probability integral transform u_t = ssT(y_t exp(-s_t/2) | alpha, df), clipped."""
    x = np.asarray(y, dtype=float) * np.exp(-0.5 * np.asarray(s_hat, dtype=float))
    u = std_skew_t_cdf(x, StdSkewTParams(alpha, df))
    return cop.clip_u(u)


def fit_marginal_sv(y: np.ndarray, settings: RunSettings, seed) -> tuple[dict, np.ndarray, DrawsStore]:
    """Fit one skew-t SV margin; posterior-mode statics and mode latent path."""
    store = run_chain(SkewTSvModel(y), settings.spec(), settings.n_iter, settings.burn_in, seed=seed)
    params = {name: posterior_mode(store.post_burn(name))
              for name in ("mu", "phi", "sigma", "alpha", "df")}
    states = store.post_burn_matrix("s_")[:, 1:]  # drop s_0
    return params, mode_path(states), store


def fit_two_step(y: np.ndarray, entry: str, train: RunSettings = RunSettings(),
                 seed: int = 0, keep_stores: bool = True) -> TwoStepFit:
    """Marginal skew-t SV fits, PIT, then the dependence model of ``entry``."""
    _require_entry(entry)
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError("y must be a (T, 2) return matrix")
    if np.any(~np.isfinite(y)):
        raise ValueError("returns must be finite")
    if y.shape[0] < 200:
        raise ValueError("need at least 200 observations for the two-step fit")
    ss = np.random.SeedSequence(seed)
    seeds = ss.spawn(3)

    marginal_params, paths, stores = [], [], []
    for j in range(2):
        params, path, store = fit_marginal_sv(y[:, j], train, seeds[j])
        marginal_params.append(params)
        paths.append(path)
        stores.append(store)
    paths = np.column_stack(paths)

    u = np.column_stack([
        pit_pseudo_observations(y[:, j], paths[:, j],
                                marginal_params[j]["alpha"], marginal_params[j]["df"])
        for j in range(2)
    ])

    copula_path = None
    if entry in ("dyn_mix", "dyn_t"):
        if entry == "dyn_mix":
            model = DynamicCopulaModel(cop.MIXTURE, u, nu=5.0, p=0.5,
                                       estimate_nu=True, estimate_p=True)
        else:
            model = DynamicCopulaModel(cop.STUDENT_T, u, nu=5.0, estimate_nu=True)
        cop_store = run_chain(model, train.spec(), train.n_iter, train.burn_in, seed=seeds[2])
        copula_params = {name: posterior_mode(cop_store.post_burn(name))
                         for name in ("mu", "phi", "sigma")}
        copula_params["nu"] = posterior_mode(cop_store.post_burn("nu"))
        if entry == "dyn_mix":
            copula_params["p"] = posterior_mode(cop_store.post_burn("p"))
        copula_path = mode_path(cop_store.post_burn_matrix("s_")[:, 1:])
    else:
        family = cop.MIXTURE if entry == "const_mix" else cop.STUDENT_T
        cop_store = constant_copula_fit(u, family, train.n_iter, train.burn_in, seed=seeds[2])
        copula_params = {"tau": posterior_mode(cop_store.post_burn("tau")),
                         "nu": posterior_mode(cop_store.post_burn("nu"))}
        if entry == "const_mix":
            copula_params["p"] = posterior_mode(cop_store.post_burn("p"))

    return TwoStepFit(
        entry=entry,
        marginal_params=marginal_params,
        marginal_paths=paths,
        pseudo_u=u,
        copula_params=copula_params,
        copula_path=copula_path,
        marginal_stores=stores if keep_stores else [],
        copula_store=cop_store if keep_stores else None,
    )


# ---------------------------------------------------------------------------
# tail-dependence trajectories


def _quarter_coeffs(tau, nu, p):
    """Upper-left and lower-right coefficients, zero where tau >= 0 (vectorized)."""
    tau = np.asarray(tau, dtype=float)
    ta = np.minimum(-tau, 1.0 - 1e-12)
    from scipy.special import stdtr

    s = np.sin(0.5 * np.pi * ta)
    lam_t = 2.0 * stdtr(nu + 1.0, -np.sqrt((nu + 1.0) * (1.0 - s) / (1.0 + s)))
    gum = 2.0 - 2.0 ** (1.0 - ta)
    ul = np.where(tau < 0, p * lam_t + (1.0 - p) * gum, 0.0)
    lr = np.where(tau < 0, p * lam_t, 0.0)
    return lr, ul


def tail_trajectories(fit: TwoStepFit, thin: int = 20, window: int = 50) -> dict:
    """Per-time summaries of tau_t and the quarter tail coefficients.

    Works on thinned posterior draws of the dynamic mixture fit: every draw
    of (s_t, nu, p) is pushed through tanh and the tail-dependence formulas,
    then per-time modes and 5/95% bands are taken.  A rolling-window
    empirical Kendall's tau (window observations on each side) is attached
    for comparison.
    """
    if fit.entry != "dyn_mix" or fit.copula_store is None:
        raise ValueError("tail trajectories require a dyn_mix fit with stored draws")
    store = fit.copula_store
    s_draws = store.post_burn_matrix("s_")[::thin, 1:]
    nu_draws = store.post_burn("nu")[::thin, None]
    p_draws = store.post_burn("p")[::thin, None]
    tau = np.tanh(s_draws)
    lr, ul = _quarter_coeffs(tau, nu_draws, p_draws)

    def summarize(mat):
        return (mode_path(mat), np.quantile(mat, 0.05, axis=0), np.quantile(mat, 0.95, axis=0))

    tau_m, tau_lo, tau_hi = summarize(tau)
    ul_m, ul_lo, ul_hi = summarize(ul)
    lr_m, lr_lo, lr_hi = summarize(lr)

    from scipy.stats import kendalltau

    T = fit.pseudo_u.shape[0]
    emp = np.full(T, np.nan)
    for t in range(T):
        lo, hi = max(0, t - window), min(T, t + window + 1)
        if hi - lo >= 30:
            emp[t] = kendalltau(fit.pseudo_u[lo:hi, 0], fit.pseudo_u[lo:hi, 1]).statistic
    return {
        "tau": (tau_m, tau_lo, tau_hi),
        "lambda_ul": (ul_m, ul_lo, ul_hi),
        "lambda_lr": (lr_m, lr_lo, lr_hi),
        "empirical_tau": emp,
    }


# ---------------------------------------------------------------------------
# rolling forecast


@dataclass
class ForecastResult:
    entry: str
    log_scores: np.ndarray  # per test day
    log_copula: np.ndarray
    log_margins: np.ndarray
    snapshots: list[dict]

    @property
    def cumulative(self) -> float:
        return float(np.sum(self.log_scores))


def _copula_logdensity_point(entry: str, u1: float, u2: float, tau: float, params: dict) -> float:
    if entry in ("dyn_mix", "const_mix"):
        return float(cop.logpdf(cop.MIXTURE, u1, u2, tau, nu=params["nu"], p=params["p"]))
    return float(cop.logpdf(cop.STUDENT_T, u1, u2, tau, nu=params["nu"]))


def predictive_log_density(entry: str, snapshot: dict, y1, y2):
    """Log predictive density log f = log c + log g at (y1, y2); vectorized.

    ``snapshot`` holds the forecast-day states (s1, s2, s_cop or tau) and the
    frozen constants; exposed so the normalization of f can be checked by
    quadrature.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    s1, s2 = snapshot["s1"], snapshot["s2"]
    m1, m2 = snapshot["margin1"], snapshot["margin2"]
    x1 = y1 * np.exp(-0.5 * s1)
    x2 = y2 * np.exp(-0.5 * s2)
    p1 = StdSkewTParams(m1["alpha"], m1["df"])
    p2 = StdSkewTParams(m2["alpha"], m2["df"])
    u1 = cop.clip_u(std_skew_t_cdf(x1, p1))
    u2 = cop.clip_u(std_skew_t_cdf(x2, p2))
    tau = snapshot["tau"]
    cparams = snapshot["copula"]
    if entry in ("dyn_mix", "const_mix"):
        logc = cop.logpdf(cop.MIXTURE, u1, u2, np.full(np.shape(u1), tau) if np.ndim(u1) else tau,
                          nu=cparams["nu"], p=cparams["p"])
    else:
        logc = cop.logpdf(cop.STUDENT_T, u1, u2, np.full(np.shape(u1), tau) if np.ndim(u1) else tau,
                          nu=cparams["nu"])
    logg = (std_skew_t_logpdf(x1, p1) - 0.5 * s1) + (std_skew_t_logpdf(x2, p2) - 0.5 * s2)
    return logc + logg, logc, logg


def rolling_forecast(
    y: np.ndarray,
    entry: str,
    T: int,
    train: RunSettings = RunSettings(),
    test: ForecastSettings = ForecastSettings(),
    seed: int = 0,
    fit: TwoStepFit | None = None,
) -> ForecastResult:
    """Cumulative pseudo log predictive score over the last K = len(y) - T days.

    Constants stay at the training posterior modes.  For each test day the
    latent paths are refitted on the trailing ``test.window`` observations
    (warm-started from the previous day), the AR(1) states are evolved one
    step, and the predictive density is evaluated at the realized pair.
    """
    _require_entry(entry)
    y = np.asarray(y, dtype=float)
    K = y.shape[0] - T
    if K < 0:
        raise ValueError("need len(y) >= T")
    if T < test.window:
        raise ValueError(f"training span T={T} shorter than the refit window {test.window}")
    if fit is None:
        fit = fit_two_step(y[:T], entry, train, seed=seed, keep_stores=False)
    dyn = entry in ("dyn_mix", "dyn_t")
    w = test.window
    ss = np.random.SeedSequence(seed + 1)

    # warm starts from the training mode paths
    warm_margin = [fit.marginal_paths[T - w:, j].copy() for j in range(2)]
    warm_cop = fit.copula_path[T - w:].copy() if dyn else None

    log_scores = np.empty(K)
    log_cop = np.empty(K)
    log_marg = np.empty(K)
    snapshots = []
    for k in range(1, K + 1):
        rows = slice(T + k - 1 - w, T + k - 1)
        seeds = ss.spawn(3)
        s_last = np.empty(2)
        u_window = np.empty((w, 2))
        for j in range(2):
            mp = fit.marginal_params[j]
            model = SkewTSvModel(y[rows, j], alpha=mp["alpha"], df=mp["df"])
            init_s = np.concatenate(([warm_margin[j][0]], warm_margin[j]))
            store = run_chain(model, SamplerSpec(5, False), test.n_iter, test.burn_in,
                              seed=seeds[j], latent_only=True,
                              init={"mu": mp["mu"], "phi": mp["phi"], "sigma": mp["sigma"],
                                    "s": init_s})
            path = mode_path(store.post_burn_matrix("s_")[:, 1:])
            warm_margin[j] = np.append(path[1:], path[-1])
            u_window[:, j] = pit_pseudo_observations(y[rows, j], path, mp["alpha"], mp["df"])
            s_last[j] = path[-1]

        cpar = fit.copula_params
        if dyn:
            if entry == "dyn_mix":
                cmodel = DynamicCopulaModel(cop.MIXTURE, u_window, nu=cpar["nu"], p=cpar["p"])
            else:
                cmodel = DynamicCopulaModel(cop.STUDENT_T, u_window, nu=cpar["nu"])
            init_c = np.concatenate(([warm_cop[0]], warm_cop))
            cstore = run_chain(cmodel, SamplerSpec(5, False), test.n_iter, test.burn_in,
                               seed=seeds[2], latent_only=True,
                               init={"mu": cpar["mu"], "phi": cpar["phi"], "sigma": cpar["sigma"],
                                     "s": init_c})
            cpath = mode_path(cstore.post_burn_matrix("s_")[:, 1:])
            warm_cop = np.append(cpath[1:], cpath[-1])
            s_cop_next = cpar["mu"] + cpar["phi"] * (cpath[-1] - cpar["mu"])
            tau_next = float(np.tanh(s_cop_next))
        else:
            tau_next = float(cpar["tau"])

        s_next = [fit.marginal_params[j]["mu"]
                  + fit.marginal_params[j]["phi"] * (s_last[j] - fit.marginal_params[j]["mu"])
                  for j in range(2)]
        snapshot = {
            "k": k,
            "s1": s_next[0],
            "s2": s_next[1],
            "tau": tau_next,
            "margin1": fit.marginal_params[0],
            "margin2": fit.marginal_params[1],
            "copula": cpar,
        }
        logf, logc, logg = predictive_log_density(entry, snapshot, y[T + k - 1, 0], y[T + k - 1, 1])
        if not np.isfinite(logf):
            raise FloatingPointError(f"non-finite predictive density at test day k={k}")
        log_scores[k - 1] = logf
        log_cop[k - 1] = logc
        log_marg[k - 1] = logg
        snapshots.append(snapshot)

    return ForecastResult(entry=entry, log_scores=log_scores, log_copula=log_cop,
                          log_margins=log_marg, snapshots=snapshots)
