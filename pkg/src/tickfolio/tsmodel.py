"""Rolling ARMA(p,q) mean models with GARCH(1,1)/EGARCH(1,1) variance models.

Estimation is Gaussian maximum likelihood on the conditional (recursive)
innovations: a regression-based least-squares initialization followed by
quasi-Newton refinement. Order selection and the GARCH-vs-EGARCH choice both
use AIC = 2k - 2 loglik.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from tickfolio import _kernels

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
VARIANCE_FLOOR = 1e-12
ADF_CRITICAL_5PCT = -2.86
_ROOT_MARGIN = 1e-4
_PENALTY = 1e10
_RESTART_SEED = 0x7F4A7C15


class FitError(Exception):
    """Model estimation failed (no converged candidate, degenerate input)."""


# ---------------------------------------------------------------------------
# stationarity check
# ---------------------------------------------------------------------------

def adf_stationarity(series, critical_value: float = ADF_CRITICAL_5PCT) -> dict:
    """Augmented Dickey-Fuller test with intercept.

    Lag order follows the fixed rule floor(12 * (n/100)^(1/4)); the unit root
    is rejected when the t-statistic on the lagged level falls below the 5%
    critical value.
    """
    y = np.asarray(series, dtype=np.float64)
    n = y.size
    if n < 30:
        raise ValueError(f"ADF needs at least 30 observations, got {n}")
    if np.ptp(y) == 0.0:
        raise ValueError("ADF undefined for a constant series")

    k = int(12.0 * (n / 100.0) ** 0.25)
    dy = np.diff(y)
    rows = dy.size - k
    if rows <= k + 2:
        raise ValueError(f"series too short for lag order {k}")

    X = np.empty((rows, k + 2))
    X[:, 0] = 1.0
    X[:, 1] = y[k : n - 1]
    for i in range(1, k + 1):
        X[:, 1 + i] = dy[k - i : k - i + rows]
    target = dy[k:]

    beta, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < X.shape[1]:
        raise ValueError("ADF regression is rank deficient")
    resid = target - X @ beta
    dof = rows - (k + 2)
    sigma2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(sigma2 * xtx_inv[1, 1])
    stat = float(beta[1] / se)
    return {"statistic": stat, "lags": k, "reject_unit_root": stat < critical_value}


# ---------------------------------------------------------------------------
# ARMA mean model
# ---------------------------------------------------------------------------

@dataclass
class ArmaFit:
    p: int
    q: int
    delta: float
    phi: np.ndarray
    theta: np.ndarray  # moving-average terms enter the mean equation negated
    sigma2: float
    loglik: float
    aic: float
    resid: np.ndarray
    presample: float
    converged: bool = True

    @property
    def n_params(self) -> int:
        # delta, phi, theta plus the innovation variance
        return self.p + self.q + 2


def _poly_stationary(coeffs) -> bool:
    """Schur-Cohn test: roots of 1 - c1 z - ... - ck z^k outside the unit circle
    iff every reflection coefficient of the recursion lies inside (-1, 1)."""
    a = [float(c) for c in coeffs]
    for k in range(len(a), 0, -1):
        r = a[k - 1]
        if abs(r) >= 1.0 - _ROOT_MARGIN:
            return False
        if k > 1:
            denom = 1.0 - r * r
            head = a[: k - 1]
            a[: k - 1] = [(head[i] + r * head[k - 2 - i]) / denom for i in range(k - 1)]
    return True


_COMMON_FACTOR_TOL = 0.2
_COMMON_FACTOR_RADIUS = 1.35


def _near_common_factor(phi: np.ndarray, theta: np.ndarray) -> bool:
    """True when an AR root nearly cancels an MA root near the unit circle.

    Such fits are redundant reparameterizations of a lower-order model with
    uninterpretable coefficients, so the grid search discards them.
    """
    if phi.size == 0 or theta.size == 0:
        return False
    ar_roots = np.roots(np.concatenate((-phi[::-1], [1.0])))
    ma_roots = np.roots(np.concatenate((-theta[::-1], [1.0])))
    if ar_roots.size == 0 or ma_roots.size == 0:
        return False
    for ra in ar_roots:
        for rm in ma_roots:
            if (
                abs(ra - rm) < _COMMON_FACTOR_TOL
                and abs(ra) < _COMMON_FACTOR_RADIUS
                and abs(rm) < _COMMON_FACTOR_RADIUS
            ):
                return True
    return False


def _arma_unpack(vec: np.ndarray, p: int, q: int):
    return float(vec[0]), vec[1 : 1 + p], vec[1 + p : 1 + p + q]


def _stationary_state_cov(phi_pad: np.ndarray, r_vec: np.ndarray) -> np.ndarray:
    """Solve P = T P T' + R R' for the stationary state covariance."""
    m = phi_pad.size
    T = np.zeros((m, m))
    T[:, 0] = phi_pad
    if m > 1:
        T[np.arange(m - 1), np.arange(1, m)] = 1.0
    rhs = (r_vec[:, None] * r_vec[None, :]).reshape(-1)
    mm = m * m
    A = np.eye(mm) - (T[:, None, :, None] * T[None, :, None, :]).reshape(mm, mm)
    return np.linalg.solve(A, rhs).reshape(m, m)


def _arma_nll(vec: np.ndarray, x: np.ndarray, p: int, q: int) -> float:
    """Exact Gaussian negative log-likelihood, innovation variance concentrated out.

    The parameter vector is (mu, phi, theta) with mu the unconditional mean;
    non-stationary or non-invertible points draw a large penalty.
    """
    for v in vec:
        if not math.isfinite(v):
            return _PENALTY
    mu, phi, theta = _arma_unpack(vec, p, q)
    if not (_poly_stationary(phi) and _poly_stationary(theta)):
        return _PENALTY
    m = max(p, q + 1)
    phi_pad = np.zeros(m)
    phi_pad[:p] = phi
    r_vec = np.zeros(m)
    r_vec[0] = 1.0
    r_vec[1 : 1 + q] = -theta  # negated-MA convention
    try:
        p0 = _stationary_state_cov(phi_pad, r_vec)
    except np.linalg.LinAlgError:
        return _PENALTY
    ssq, sumlogf, ok = _kernels.kalman_arma_loglik(x - mu, phi_pad, r_vec, p0)
    n = x.size
    if ok == 0.0 or ssq <= 0.0 or not math.isfinite(ssq):
        return _PENALTY
    sigma2 = ssq / n
    return 0.5 * (n * (LOG_2PI + 1.0) + n * math.log(sigma2) + sumlogf)


def _hannan_rissanen_start(x: np.ndarray, p: int, q: int) -> np.ndarray:
    """Regression-based initial values: long-AR residuals proxy the innovations."""
    n = x.size
    mean = float(x.mean())
    if q == 0:
        lags = p
        proxy = None
    else:
        lags_long = min(max(8, 2 * (p + q)), max(p + q + 1, n // 4))
        Xl = _lag_matrix(x, lags_long)
        yl = x[lags_long:]
        coef, *_ = np.linalg.lstsq(Xl, yl, rcond=None)
        proxy = np.zeros(n)
        proxy[lags_long:] = yl - Xl @ coef
        lags = max(p, q)

    start_t = max(p, q)
    rows = n - start_t
    ncol = 1 + p + q
    X = np.empty((rows, ncol))
    X[:, 0] = 1.0
    for i in range(1, p + 1):
        X[:, i] = x[start_t - i : n - i]
    for j in range(1, q + 1):
        X[:, p + j] = proxy[start_t - j : n - j]
    coef, *_ = np.linalg.lstsq(X, x[start_t:], rcond=None)

    vec = np.zeros(1 + p + q)
    vec[1 : 1 + p] = coef[1 : 1 + p]
    vec[1 + p :] = -coef[1 + p :]  # regression sign -> negated-MA convention
    # shrink towards white noise until the start point is admissible
    for _ in range(40):
        _, phi, theta = _arma_unpack(vec, p, q)
        if _poly_stationary(phi) and _poly_stationary(theta):
            break
        vec[1:] *= 0.75
    else:
        vec[1:] = 0.0
    vec[0] = mean  # optimize over the unconditional mean, not the intercept
    return vec


def _lag_matrix(x: np.ndarray, lags: int) -> np.ndarray:
    n = x.size
    X = np.empty((n - lags, lags + 1))
    X[:, 0] = 1.0
    for i in range(1, lags + 1):
        X[:, i] = x[lags - i : n - i]
    return X


def fit_arma_order(x, p: int, q: int) -> ArmaFit:
    """Fit one ARMA(p, q) candidate: regression-based start, then exact
    Gaussian ML refinement by quasi-Newton."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 50:
        raise FitError(f"ARMA fit needs at least 50 observations, got {n}")
    if np.ptp(x) == 0.0:
        raise FitError("ARMA fit undefined for a constant series")

    start = _hannan_rissanen_start(x, p, q)
    res = minimize(_arma_nll, start, args=(x, p, q), method="BFGS")
    best_vec, best_nll = res.x, float(res.fun)
    start_nll = _arma_nll(start, x, p, q)
    if not np.isfinite(best_nll) or best_nll >= min(start_nll, _PENALTY):
        best_vec, best_nll = start, start_nll
    if not np.isfinite(best_nll) or best_nll >= _PENALTY:
        raise FitError(f"ARMA({p},{q}) did not converge")

    mu, phi, theta = _arma_unpack(best_vec, p, q)
    if _near_common_factor(phi, theta):
        raise FitError(f"ARMA({p},{q}) fit has a near-cancelling AR/MA factor")
    delta = mu * (1.0 - float(np.sum(phi)))
    # one-step residuals for the variance stage and forecast state
    eps = _kernels.arma_residuals(x, delta, phi, theta, mu)
    sigma2 = float(eps @ eps) / n
    loglik = -best_nll
    k = p + q + 2
    return ArmaFit(
        p=p,
        q=q,
        delta=delta,
        phi=np.array(phi, dtype=np.float64),
        theta=np.array(theta, dtype=np.float64),
        sigma2=sigma2,
        loglik=loglik,
        aic=2.0 * k - 2.0 * loglik,
        resid=eps,
        presample=mu,
        converged=bool(res.success or np.isfinite(best_nll)),
    )


def fit_arma(x, max_p: int = 4, max_q: int = 4) -> ArmaFit:
    """Grid search over (p, q) in [0, max_p] x [0, max_q] \\ {(0, 0)} by AIC.

    Ties break towards smaller p + q, then smaller p. Candidates that fail to
    converge are skipped with a warning; all failing is an error.
    """
    candidates: list[ArmaFit] = []
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            if p == 0 and q == 0:
                continue
            try:
                candidates.append(fit_arma_order(x, p, q))
            except (FitError, np.linalg.LinAlgError) as exc:
                log.warning("ARMA(%d,%d) candidate skipped: %s", p, q, exc)
    if not candidates:
        raise FitError("no ARMA candidate converged")
    return min(candidates, key=lambda f: (f.aic, f.p + f.q, f.p))


def forecast_mean(fit: ArmaFit, tail_obs, tail_resid) -> float:
    """One-step conditional mean: delta + sum phi*obs - sum theta*resid.

    Tails are ordered oldest-to-newest and must cover max(p, q) entries.
    """
    tail_obs = np.asarray(tail_obs, dtype=np.float64)
    tail_resid = np.asarray(tail_resid, dtype=np.float64)
    need = max(fit.p, fit.q)
    if tail_obs.size < fit.p or tail_resid.size < fit.q:
        raise ValueError(f"forecast needs {need} trailing observations/residuals")
    mu = fit.delta
    for i in range(fit.p):
        mu += fit.phi[i] * tail_obs[-1 - i]
    for j in range(fit.q):
        mu -= fit.theta[j] * tail_resid[-1 - j]
    return float(mu)


# ---------------------------------------------------------------------------
# variance models
# ---------------------------------------------------------------------------

@dataclass
class VarianceFit:
    kind: str  # "garch" | "egarch" | "constant"
    omega: float
    a: float  # garch: arch term on eps^2; egarch: persistence on log sigma2
    b: float  # garch: persistence on sigma2; egarch: scale on g(Z), fixed at 1
    g_theta: float
    g_lambda: float
    loglik: float
    aic: float
    sigma2: np.ndarray
    converged: bool
    fallback: bool = False

    @property
    def n_params(self) -> int:
        if self.kind == "garch":
            return 3
        if self.kind == "egarch":
            return 4
        return 1


def _gaussian_nll(eps: np.ndarray, sigma2: np.ndarray) -> float:
    return 0.5 * float(np.sum(LOG_2PI + np.log(sigma2) + eps * eps / sigma2))


def _garch_sigma2(eps: np.ndarray, omega: float, a: float, b: float, backcast: float) -> np.ndarray:
    return _kernels.garch_filter(eps, omega, a, b, backcast, VARIANCE_FLOOR)


def _egarch_sigma2(
    eps: np.ndarray, omega: float, a: float, b: float, g_theta: float, g_lambda: float, log_backcast: float
) -> np.ndarray:
    return _kernels.egarch_filter(eps, omega, a, b, g_theta, g_lambda, log_backcast, VARIANCE_FLOOR)


def _restart_points(base: np.ndarray, n_restarts: int = 2, scale: float = 0.5) -> list[np.ndarray]:
    rng = np.random.Generator(np.random.Philox(key=_RESTART_SEED))
    points = [base]
    for _ in range(n_restarts):
        points.append(base + scale * rng.standard_normal(base.size))
    return points


def _minimize_multistart(fun, starts, args) -> tuple[np.ndarray, float, bool]:
    best_vec, best_val, success = None, np.inf, False
    for s in starts:
        res = minimize(fun, s, args=args, method="BFGS")
        if np.isfinite(res.fun) and res.fun < best_val:
            best_vec, best_val, success = res.x, float(res.fun), bool(res.success)
    if best_vec is None:
        raise FitError("variance model optimization produced no finite value")
    return best_vec, best_val, success


def fit_garch(resid) -> VarianceFit:
    """GARCH(1,1) by Gaussian ML with omega > 0, a, b >= 0, a + b < 1 enforced
    through log/logistic transforms."""
    eps = np.asarray(resid, dtype=np.float64)
    n = eps.size
    if n < 50:
        raise FitError(f"variance fit needs at least 50 residuals, got {n}")
    var = float(eps.var())
    if var <= 0.0:
        raise FitError("residuals have zero variance")
    backcast = float(np.mean(eps * eps))

    def nll(u: np.ndarray) -> float:
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 60.0:
            return _PENALTY
        omega = math.exp(u[0])
        s = expit(u[1])
        f = expit(u[2])
        sigma2 = _garch_sigma2(eps, omega, s * f, s * (1.0 - f), backcast)
        return _gaussian_nll(eps, sigma2)

    base = np.array([math.log(0.1 * var), logit(0.95), logit(0.05 / 0.95)])
    u, val, success = _minimize_multistart(nll, _restart_points(base), args=())
    omega = math.exp(u[0])
    s = expit(u[1])
    f = expit(u[2])
    a, b = s * f, s * (1.0 - f)
    sigma2 = _garch_sigma2(eps, omega, a, b, backcast)
    loglik = -val
    return VarianceFit(
        kind="garch",
        omega=omega,
        a=a,
        b=b,
        g_theta=0.0,
        g_lambda=0.0,
        loglik=loglik,
        aic=2.0 * 3 - 2.0 * loglik,
        sigma2=sigma2,
        converged=True if success else bool(np.isfinite(val) and val < _PENALTY),
    )


def fit_egarch(resid) -> VarianceFit:
    """EGARCH(1,1) by Gaussian ML, |persistence| < 1 via tanh.

    The scale on g(Z) is fixed at 1 (it is not identified jointly with the
    g coefficients), leaving omega, persistence, g_theta, g_lambda free.
    """
    eps = np.asarray(resid, dtype=np.float64)
    n = eps.size
    if n < 50:
        raise FitError(f"variance fit needs at least 50 residuals, got {n}")
    var = float(eps.var())
    if var <= 0.0:
        raise FitError("residuals have zero variance")
    log_backcast = math.log(max(float(np.mean(eps * eps)), VARIANCE_FLOOR))

    def nll(u: np.ndarray) -> float:
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 60.0:
            return _PENALTY
        a = math.tanh(u[1])
        sigma2 = _egarch_sigma2(eps, u[0], a, 1.0, u[2], u[3], log_backcast)
        return _gaussian_nll(eps, sigma2)

    a0 = 0.9
    base = np.array([(1.0 - a0) * log_backcast, math.atanh(a0), 0.0, 0.1])
    u, val, success = _minimize_multistart(nll, _restart_points(base), args=())
    a = math.tanh(u[1])
    sigma2 = _egarch_sigma2(eps, u[0], a, 1.0, u[2], u[3], log_backcast)
    loglik = -val
    return VarianceFit(
        kind="egarch",
        omega=float(u[0]),
        a=a,
        b=1.0,
        g_theta=float(u[2]),
        g_lambda=float(u[3]),
        loglik=loglik,
        aic=2.0 * 4 - 2.0 * loglik,
        sigma2=sigma2,
        converged=True if success else bool(np.isfinite(val) and val < _PENALTY),
    )


def _constant_variance(eps: np.ndarray) -> VarianceFit:
    var = max(float(eps.var()), VARIANCE_FLOOR)
    sigma2 = np.full(eps.size, var)
    loglik = -_gaussian_nll(eps, sigma2)
    return VarianceFit(
        kind="constant",
        omega=var,
        a=0.0,
        b=0.0,
        g_theta=0.0,
        g_lambda=0.0,
        loglik=loglik,
        aic=2.0 * 1 - 2.0 * loglik,
        sigma2=sigma2,
        converged=False,
        fallback=True,
    )


def fit_variance(resid, kinds: tuple[str, ...] = ("garch", "egarch")) -> VarianceFit:
    """Fit the requested variance families and return the lowest-AIC fit.

    All families failing falls back to a flagged constant-variance fit.
    """
    eps = np.asarray(resid, dtype=np.float64)
    fits: list[VarianceFit] = []
    for kind in kinds:
        fitter = fit_garch if kind == "garch" else fit_egarch
        try:
            fits.append(fitter(eps))
        except (FitError, np.linalg.LinAlgError, ValueError) as exc:
            log.warning("%s fit skipped: %s", kind, exc)
    if not fits:
        log.warning("all variance fits failed, using constant variance")
        return _constant_variance(eps)
    return min(fits, key=lambda f: f.aic)


# ---------------------------------------------------------------------------
# combined fit and rolling one-step forecasts
# ---------------------------------------------------------------------------

@dataclass
class ResidualState:
    last_obs: np.ndarray
    last_resid: np.ndarray
    last_sigma2: float


@dataclass
class ArmaGarchFit:
    mean: ArmaFit
    variance: VarianceFit
    residual_state: ResidualState

    @property
    def p(self) -> int:
        return self.mean.p

    @property
    def q(self) -> int:
        return self.mean.q

    @property
    def variance_kind(self) -> str:
        return self.variance.kind

    def forecast(self) -> float:
        return forecast_mean(self.mean, self.residual_state.last_obs, self.residual_state.last_resid)


def fit_arma_garch(x, p: int | None = None, q: int | None = None, variance_kinds=("garch", "egarch"),
                   max_p: int = 4, max_q: int = 4) -> ArmaGarchFit:
    """Two-stage fit: ARMA mean (grid-searched unless p, q given), then the
    variance family on the mean residuals."""
    x = np.asarray(x, dtype=np.float64)
    if p is None or q is None:
        mean = fit_arma(x, max_p=max_p, max_q=max_q)
    else:
        mean = fit_arma_order(x, p, q)
    variance = fit_variance(mean.resid, kinds=variance_kinds)
    need = max(mean.p, mean.q, 1)
    state = ResidualState(
        last_obs=x[-need:].copy(),
        last_resid=mean.resid[-need:].copy(),
        last_sigma2=float(variance.sigma2[-1]),
    )
    return ArmaGarchFit(mean=mean, variance=variance, residual_state=state)


@dataclass
class RollingForecasts:
    assets: list[str]
    day_indices: np.ndarray  # forecast target days, one row per out-of-sample day
    mu_hat: np.ndarray  # (n_days_oos, n_assets)
    p: np.ndarray
    q: np.ndarray
    variance_kind: np.ndarray
    converged: np.ndarray  # False marks a gap filled by carry-forward

    def rows(self):
        """Yield (date_index, asset, mu_hat, p, q, variance_kind, converged) rows."""
        for i, d in enumerate(self.day_indices):
            for j, asset in enumerate(self.assets):
                yield (
                    int(d),
                    asset,
                    float(self.mu_hat[i, j]),
                    int(self.p[i, j]),
                    int(self.q[i, j]),
                    str(self.variance_kind[i, j]),
                    bool(self.converged[i, j]),
                )


def rolling_forecasts(
    series_by_asset: dict[str, np.ndarray],
    window: int = 365,
    order_refit_every: int = 30,
    coeff_refit_every: int = 1,
    max_p: int = 4,
    max_q: int = 4,
    variance_kinds: tuple[str, ...] = ("garch", "egarch"),
) -> RollingForecasts:
    """One-step-ahead conditional means over a walk-forward window.

    For out-of-sample position k (target day window + k) the model is fit on
    the preceding `window` observations. Orders and the variance family are
    re-selected every `order_refit_every` steps, coefficients refit every
    `coeff_refit_every` steps; 1/1 re-selects everything daily. Fit failures
    leave a flagged gap carrying the last valid forecast forward.
    """
    assets = list(series_by_asset)
    if not assets:
        raise ValueError("no asset series supplied")
    lengths = {a: np.asarray(series_by_asset[a]).size for a in assets}
    n = min(lengths.values())
    if max(lengths.values()) != n:
        raise ValueError(f"asset series lengths differ: {lengths}")
    if n < window + 1:
        raise ValueError(f"series length {n} leaves no out-of-sample day for window {window}")

    n_oos = n - window
    day_indices = np.arange(window, n)
    mu = np.zeros((n_oos, len(assets)))
    p_sel = np.zeros((n_oos, len(assets)), dtype=np.int64)
    q_sel = np.zeros((n_oos, len(assets)), dtype=np.int64)
    kind_sel = np.full((n_oos, len(assets)), "none", dtype=object)
    ok = np.ones((n_oos, len(assets)), dtype=bool)

    for j, asset in enumerate(assets):
        series = np.asarray(series_by_asset[asset], dtype=np.float64)
        state: ArmaGarchFit | None = None
        last_mu = 0.0
        for k in range(n_oos):
            win = series[k : k + window]
            try:
                if state is None or k % order_refit_every == 0:
                    state = fit_arma_garch(win, max_p=max_p, max_q=max_q, variance_kinds=variance_kinds)
                elif k % coeff_refit_every == 0:
                    state = fit_arma_garch(
                        win, p=state.p, q=state.q, variance_kinds=(state.variance_kind,)
                        if state.variance_kind in ("garch", "egarch") else variance_kinds,
                    )
                else:
                    state = _advance_fit(state, win)
                last_mu = state.forecast()
                mu[k, j] = last_mu
                p_sel[k, j] = state.p
                q_sel[k, j] = state.q
                kind_sel[k, j] = state.variance_kind
            except (FitError, np.linalg.LinAlgError) as exc:
                log.warning("asset %s day %d: fit gap (%s), carrying forecast forward", asset, window + k, exc)
                mu[k, j] = last_mu
                ok[k, j] = False
                if state is not None:
                    p_sel[k, j] = state.p
                    q_sel[k, j] = state.q
                    kind_sel[k, j] = state.variance_kind
    return RollingForecasts(
        assets=assets,
        day_indices=day_indices,
        mu_hat=mu,
        p=p_sel,
        q=q_sel,
        variance_kind=kind_sel,
        converged=ok,
    )


def _advance_fit(state: ArmaGarchFit, win: np.ndarray) -> ArmaGarchFit:
    """Keep coefficients, recompute residuals/state on the shifted window."""
    mean = state.mean
    eps = _kernels.arma_residuals(win, mean.delta, mean.phi, mean.theta, mean.presample)
    need = max(mean.p, mean.q, 1)
    new_state = ResidualState(
        last_obs=win[-need:].copy(),
        last_resid=eps[-need:].copy(),
        last_sigma2=state.residual_state.last_sigma2,
    )
    return ArmaGarchFit(mean=mean, variance=state.variance, residual_state=new_state)


def write_forecasts_csv(forecasts: RollingForecasts, path) -> None:
    """Export: date_index,asset,mu_hat,p,q,variance_kind,converged."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date_index,asset,mu_hat,p,q,variance_kind,converged\n")
        for d, asset, mu_hat, p, q, kind, conv in forecasts.rows():
            fh.write(f"{d},{asset},{mu_hat:.12g},{p},{q},{kind},{int(conv)}\n")
