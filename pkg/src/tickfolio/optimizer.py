"""Long-only, box-capped mean-variance optimization.

Solves max_w mu'w - (lambda/2) w' Sigma w subject to sum(w) = 1,
0 <= w_i <= cap for risky assets and 0 <= w_rf <= 1 for the risk-free slot.
The primary solver is a primal active-set method on the box-and-simplex
region (11 assets, dense, tiny); a projected-gradient method with the same
tolerance serves as fallback and cross-check, and brute_force_mv scans the
weight grid as an independent oracle on small instances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_CAP = 0.300
KKT_TOL = 1e-7
JITTER_BUDGET = 1e-6
LAMBDA_FLOOR = 0.1
_MAX_ACTIVE_SET_ITER = 500


class OptimizationError(Exception):
    """Problem construction or solve failure."""


@dataclass
class MvProblem:
    """One day's mean-variance inputs. Index `riskfree_index` is the zero-return,
    zero-covariance risk-free asset and is exempt from the risky cap."""

    mu: np.ndarray
    sigma: np.ndarray
    lam: float
    cap: float = DEFAULT_CAP
    riskfree_index: int = 0

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        n = self.mu.size
        if self.sigma.shape != (n, n):
            raise OptimizationError(f"sigma shape {self.sigma.shape} does not match mu size {n}")
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.sigma)):
            raise OptimizationError("mu and sigma must be finite")
        if self.lam <= 0:
            raise OptimizationError(f"risk aversion must be positive, got {self.lam}")
        if self.cap <= 0:
            raise OptimizationError(f"cap must be positive, got {self.cap}")
        scale = 1.0 + float(np.abs(self.sigma).max())
        if np.abs(self.sigma - self.sigma.T).max() > 1e-12 * scale:
            raise OptimizationError("sigma is not symmetric within 1e-12")
        rf = self.riskfree_index
        if not (0 <= rf < n):
            raise OptimizationError(f"riskfree_index {rf} out of range")
        if self.mu[rf] != 0.0 or np.abs(self.sigma[rf]).max() != 0.0 or np.abs(self.sigma[:, rf]).max() != 0.0:
            raise OptimizationError("risk-free asset must have zero return and zero covariance")

    @property
    def n_assets(self) -> int:
        return self.mu.size

    def upper_bounds(self) -> np.ndarray:
        ub = np.full(self.n_assets, min(self.cap, 1.0))
        ub[self.riskfree_index] = 1.0
        return ub

    def objective(self, w: np.ndarray) -> float:
        return float(self.mu @ w - 0.5 * self.lam * w @ self.sigma @ w)


@dataclass
class WeightVector:
    weights: np.ndarray
    objective: float
    kkt_residual: float
    method: str
    iterations: int
    flags: dict = field(default_factory=dict)


def risk_aversion(market_returns, lam_floor: float = LAMBDA_FLOOR) -> tuple[float, bool]:
    """lambda = window mean / window variance of the market-portfolio return.

    Non-positive values clamp to `lam_floor` with a flag; zero variance is an
    error. Returns (lambda, clamped).
    """
    r = np.asarray(market_returns, dtype=np.float64)
    if r.size < 2:
        raise OptimizationError("risk aversion needs at least 2 observations")
    var = float(r.var(ddof=1))
    if var <= 0.0:
        raise OptimizationError("market returns have zero variance")
    lam = float(r.mean()) / var
    if lam <= 0.0:
        return lam_floor, True
    return lam, False


def psd_repair(sigma: np.ndarray, jitter_budget: float = JITTER_BUDGET) -> np.ndarray:
    """Symmetrize and add the smallest diagonal jitter making min eigenvalue >= 0.

    Jitter above `jitter_budget` is an error.
    """
    s = 0.5 * (sigma + sigma.T)
    eigmin = float(np.linalg.eigvalsh(s).min())
    if eigmin >= 0.0:
        return s
    jitter = -eigmin * (1.0 + 1e-12)
    if jitter > jitter_budget:
        raise OptimizationError(f"PSD repair needs diagonal jitter {jitter:.3e} > budget {jitter_budget:.0e}")
    return s + jitter * np.eye(s.shape[0])


def solve_mv(problem: MvProblem) -> WeightVector:
    """Maximize the mean-variance objective over the capped simplex.

    Optimality is certified by a scaled KKT residual <= 1e-7 on the repaired
    problem; the projected-gradient fallback runs if the active-set method
    fails to certify.
    """
    sigma = psd_repair(problem.sigma)
    ub = problem.upper_bounds()
    if ub.sum() < 1.0 - 1e-12:
        raise OptimizationError("upper bounds sum below 1: infeasible simplex")
    Q = problem.lam * sigma
    c = -problem.mu

    w, iters, ok = _active_set(Q, c, ub, problem.riskfree_index)
    method = "active_set"
    kkt = _kkt_residual(Q, c, ub, w) if ok else np.inf
    if not ok or kkt > KKT_TOL:
        w2, it2 = _projected_gradient(Q, c, ub, w if ok else None)
        kkt2 = _kkt_residual(Q, c, ub, w2)
        if kkt2 < kkt:
            w, kkt, iters, method = w2, kkt2, it2, "projected_gradient"
    if kkt > KKT_TOL:
        raise OptimizationError(f"solver failed to certify optimality (KKT residual {kkt:.3e})")

    obj = float(problem.mu @ w - 0.5 * problem.lam * w @ sigma @ w)
    return WeightVector(weights=w, objective=obj, kkt_residual=kkt, method=method, iterations=iters)


def _active_set(Q: np.ndarray, c: np.ndarray, ub: np.ndarray, rf: int):
    """Primal active-set method for min 0.5 w'Qw + c'w, sum w = 1, 0 <= w <= ub.

    A tiny internal Tikhonov term keeps the reduced KKT systems nonsingular
    when Q has a null space (the risk-free row is identically zero); it is
    orders of magnitude below the certification tolerance.
    """
    n = Q.shape[0]
    reg = 1e-10 * (1.0 + np.trace(Q) / n)
    Qr = Q + reg * np.eye(n)

    w = np.zeros(n)
    w[rf] = 1.0
    at_lower = np.ones(n, dtype=bool)
    at_lower[rf] = False
    at_upper = np.zeros(n, dtype=bool)
    at_upper[rf] = ub[rf] == 1.0

    for it in range(1, _MAX_ACTIVE_SET_ITER + 1):
        free = ~(at_lower | at_upper)
        g = Qr @ w + c
        d = np.zeros(n)
        nf = int(free.sum())
        if nf:
            K = np.zeros((nf + 1, nf + 1))
            K[:nf, :nf] = Qr[np.ix_(free, free)]
            K[:nf, nf] = 1.0
            K[nf, :nf] = 1.0
            rhs = np.zeros(nf + 1)
            rhs[:nf] = -g[free]
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                return w, it, False
            d[free] = sol[:nf]
            nu = float(sol[nf])
        else:
            # multiplier check only: any nu in [lo_req, hi_req] certifies optimality
            lo_req = float((-g[at_lower]).max()) if at_lower.any() else -np.inf
            hi_req = float((-g[at_upper]).min()) if at_upper.any() else np.inf
            if lo_req <= hi_req + 1e-12:
                return w, it, True
            nu = 0.5 * (lo_req + hi_req)

        if float(np.abs(d).max()) <= 1e-12:
            mult_lower = g + nu  # alpha_i for lower-active coordinates
            mult_upper = -(g + nu)  # beta_i for upper-active coordinates
            worst_val = -1e-12
            worst_idx = -1
            worst_side = ""
            for i in range(n):
                if at_lower[i] and mult_lower[i] < worst_val:
                    worst_val, worst_idx, worst_side = mult_lower[i], i, "lower"
                elif at_upper[i] and mult_upper[i] < worst_val:
                    worst_val, worst_idx, worst_side = mult_upper[i], i, "upper"
            if worst_idx < 0:
                return w, it, True
            if worst_side == "lower":
                at_lower[worst_idx] = False
            else:
                at_upper[worst_idx] = False
            continue

        # longest feasible step along d
        step = 1.0
        block_idx, block_side = -1, ""
        for i in np.flatnonzero(free):
            if d[i] < -1e-15:
                s = (0.0 - w[i]) / d[i]
                if s < step:
                    step, block_idx, block_side = s, i, "lower"
            elif d[i] > 1e-15:
                s = (ub[i] - w[i]) / d[i]
                if s < step:
                    step, block_idx, block_side = s, i, "upper"
        w = w + max(step, 0.0) * d
        np.clip(w, 0.0, ub, out=w)
        if block_idx >= 0 and step < 1.0:
            if block_side == "lower":
                at_lower[block_idx] = True
                w[block_idx] = 0.0
            else:
                at_upper[block_idx] = True
                w[block_idx] = ub[block_idx]
    return w, _MAX_ACTIVE_SET_ITER, False


def _project_capped_simplex(v: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w: sum w = 1, 0 <= w <= ub} by bisection."""
    lo_tau = float((v - ub).min()) - 1.0
    hi_tau = float(v.max())
    for _ in range(100):
        tau = 0.5 * (lo_tau + hi_tau)
        total = np.clip(v - tau, 0.0, ub).sum()
        if total > 1.0:
            lo_tau = tau
        else:
            hi_tau = tau
    return np.clip(v - 0.5 * (lo_tau + hi_tau), 0.0, ub)


def _projected_gradient(Q: np.ndarray, c: np.ndarray, ub: np.ndarray, w0: np.ndarray | None,
                        max_iter: int = 200_000):
    """Accelerated projected gradient with the same certification tolerance."""
    n = Q.shape[0]
    L = float(np.linalg.eigvalsh(Q).max()) + 1e-12
    step = 1.0 / max(L, 1e-12)
    w = _project_capped_simplex(w0 if w0 is not None else np.full(n, 1.0 / n), ub)
    y = w.copy()
    t = 1.0
    for it in range(1, max_iter + 1):
        grad = Q @ y + c
        w_next = _project_capped_simplex(y - step * grad, ub)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = w_next + ((t - 1.0) / t_next) * (w_next - w)
        w, t = w_next, t_next
        if it % 200 == 0 and _kkt_residual(Q, c, ub, w) <= 0.5 * KKT_TOL:
            return w, it
    return w, max_iter


def _kkt_residual(Q: np.ndarray, c: np.ndarray, ub: np.ndarray, w: np.ndarray) -> float:
    """Scaled max violation of stationarity, feasibility and complementarity."""
    g = Q @ w + c
    scale = 1.0 + float(np.abs(g).max())
    tol = 1e-9
    free = (w > tol) & (w < ub - tol)
    if free.any():
        nu = -float(g[free].mean())
    else:
        lo_req = (-g[w <= tol]).max() if (w <= tol).any() else -np.inf
        hi_req = (-g[w >= ub - tol]).min() if (w >= ub - tol).any() else np.inf
        if lo_req <= hi_req:
            nu = float(np.clip(0.0, lo_req, hi_req))
        else:
            nu = 0.5 * float(lo_req + hi_req)
    resid = abs(w.sum() - 1.0)
    resid = max(resid, float(np.maximum(-w, 0.0).max()))
    resid = max(resid, float(np.maximum(w - ub, 0.0).max()))
    stat = g + nu
    if free.any():
        resid = max(resid, float(np.abs(stat[free]).max()))
    lower = w <= tol
    if lower.any():
        resid = max(resid, float(np.maximum(-stat[lower], 0.0).max()))
    upper = w >= ub - tol
    if upper.any():
        resid = max(resid, float(np.maximum(stat[upper], 0.0).max()))
    return resid / scale


def brute_force_mv(problem: MvProblem, grid_step: float = 0.005) -> WeightVector:
    """Exhaustive scan of the simplex grid: independent optimality oracle.

    Guarded to at most 4 assets. Candidate points are the simplex lattice at
    `grid_step`; infeasible points (cap violations) are scanned but skipped.
    """
    n = problem.n_assets
    if n > 4:
        raise OptimizationError(f"brute force limited to 4 assets, got {n}")
    m = round(1.0 / grid_step)
    if abs(m * grid_step - 1.0) > 1e-9:
        raise OptimizationError(f"grid step {grid_step} must divide 1")
    ub = problem.upper_bounds()
    sigma = psd_repair(problem.sigma)
    rf = problem.riskfree_index
    risky = [i for i in range(n) if i != rf]

    best_obj = -np.inf
    best_w: np.ndarray | None = None
    scanned = 0

    if len(risky) == 0:
        w = np.zeros(n)
        w[rf] = 1.0
        return WeightVector(w, problem.objective(w), 0.0, "brute_force", 1, {"scanned": 1})

    # enumerate risky counts blockwise; the risk-free weight absorbs the remainder
    axes = [np.arange(m + 1, dtype=np.int64) for _ in risky[1:]]
    grids = np.meshgrid(*axes, indexing="ij") if axes else []
    flat = [g.reshape(-1) for g in grids]
    for k0 in range(m + 1):
        if flat:
            rest = np.stack(flat, axis=1)
            total = k0 + rest.sum(axis=1)
            ok = total <= m
            scanned += int(ok.sum())
            if not ok.any():
                continue
            counts = np.concatenate(
                [np.full((int(ok.sum()), 1), k0, dtype=np.int64), rest[ok]], axis=1
            )
            remainder = m - counts.sum(axis=1)
        else:
            scanned += 1
            counts = np.array([[k0]], dtype=np.int64)
            remainder = np.array([m - k0])
            if remainder[0] < 0:
                scanned -= 1
                continue
        W = np.zeros((counts.shape[0], n))
        for col, idx in enumerate(risky):
            W[:, idx] = counts[:, col] * grid_step
        W[:, rf] = remainder * grid_step
        feasible = np.all(W <= ub + 1e-12, axis=1)
        if not feasible.any():
            continue
        Wf = W[feasible]
        obj = Wf @ problem.mu - 0.5 * problem.lam * np.einsum("ij,ij->i", Wf @ sigma, Wf)
        i = int(np.argmax(obj))
        if obj[i] > best_obj:
            best_obj = float(obj[i])
            best_w = Wf[i].copy()

    if best_w is None:
        raise OptimizationError("no feasible grid point")
    return WeightVector(
        weights=best_w,
        objective=best_obj,
        kkt_residual=np.nan,
        method="brute_force",
        iterations=scanned,
        flags={"scanned": scanned},
    )
