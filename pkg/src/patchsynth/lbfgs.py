"""Limited-memory BFGS with a strong-Wolfe line search.

Written against a plain callback interface: `objective(x) -> (value, grad)`
over a flat float64 vector.  The inverse-Hessian product uses the standard
two-loop recursion; curvature pairs that would break positive definiteness
are skipped.  The caller may change the objective between iterations (the
driver re-matches texture patches); signalling that through the `refresh`
hook clears the curvature history so stale pairs never cross the change.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ObjectiveError(ValueError):
    """The callback returned something unusable (non-finite, wrong length)."""


@dataclass
class OptimizerOptions:
    history: int = 8
    max_iters: int = 500
    grad_tol: float = 1e-6        # relative to the starting gradient norm
    f_tol: float = 1e-8           # relative objective change
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search: int = 20

    def __post_init__(self):
        if self.history < 1:
            raise ValueError("history size must be at least 1")
        if self.grad_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.wolfe_c1 < self.wolfe_c2 < 1):
            raise ValueError("need 0 < c1 < c2 < 1")


@dataclass
class IterationRecord:
    iteration: int
    value: float
    grad_norm: float
    step: float
    refreshed: bool
    # Line-search bookkeeping for asserting the Wolfe conditions:
    f_start: float
    gtd_start: float
    gtd_end: float
    evals: int


@dataclass
class OptimizerTrace:
    status: str = "running"
    initial_value: float = float("nan")
    initial_grad_norm: float = float("nan")
    records: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.records)

    def wolfe_satisfied(self, c1, c2):
        """Check both strong-Wolfe conditions on every accepted step."""
        for r in self.records:
            armijo = r.value <= r.f_start + c1 * r.step * r.gtd_start + 1e-12
            curvature = abs(r.gtd_end) <= c2 * abs(r.gtd_start) + 1e-12
            if not (armijo and curvature):
                return False
        return True


def _evaluate(objective, x, n):
    value, grad = objective(x)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != (n,):
        raise ObjectiveError(f"gradient length {grad.shape} != {n}")
    return float(value), grad


def _cubic_min(a, fa, da, b, fb, db):
    # Minimizer of the cubic through (a, fa, da), (b, fb, db); falls back to
    # bisection when the interpolation is degenerate.
    d1 = da + db - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return 0.5 * (a + b)
    d2 = np.sqrt(disc) * np.sign(b - a)
    t = b - (b - a) * (db + d2 - d1) / (db - da + 2 * d2)
    if not np.isfinite(t):
        return 0.5 * (a + b)
    lo, hi = min(a, b), max(a, b)
    margin = 0.1 * (hi - lo)
    return float(np.clip(t, lo + margin, hi - margin))


def _strong_wolfe(objective, x, f0, g0, d, opts, t0, n):
    """Line search enforcing f-decrease and curvature flattening.

    Returns (t, f, g, evals) or None when no acceptable step was found.
    """
    c1, c2 = opts.wolfe_c1, opts.wolfe_c2
    dphi0 = float(g0 @ d)
    evals = 0

    def phi(t):
        nonlocal evals
        evals += 1
        f, g = _evaluate(objective, x + t * d, n)
        return f, g, float(g @ d)

    t_prev, f_prev, dphi_prev = 0.0, f0, dphi0
    t = t0
    bracket = None
    for _ in range(opts.max_line_search):
        f, g, dphi = phi(t)
        if not np.isfinite(f):
            # Step overshot into bad territory; shrink hard.
            t = 0.5 * (t_prev + t)
            continue
        if f > f0 + c1 * t * dphi0 or (evals > 1 and f >= f_prev):
            bracket = (t_prev, f_prev, dphi_prev, t, f, dphi)
            break
        if abs(dphi) <= -c2 * dphi0:
            return t, f, g, evals
        if dphi >= 0:
            bracket = (t, f, dphi, t_prev, f_prev, dphi_prev)
            break
        t_prev, f_prev, dphi_prev = t, f, dphi
        t = min(t * 2.0, 1e10)
    if bracket is None:
        return None

    lo, f_lo, dphi_lo, hi, f_hi, dphi_hi = bracket
    for _ in range(opts.max_line_search):
        t = _cubic_min(lo, f_lo, dphi_lo, hi, f_hi, dphi_hi)
        f, g, dphi = phi(t)
        if f > f0 + c1 * t * dphi0 or f >= f_lo:
            hi, f_hi, dphi_hi = t, f, dphi
        else:
            if abs(dphi) <= -c2 * dphi0:
                return t, f, g, evals
            if dphi * (hi - lo) >= 0:
                hi, f_hi, dphi_hi = lo, f_lo, dphi_lo
            lo, f_lo, dphi_lo = t, f, dphi
        if abs(hi - lo) < 1e-16 * max(1.0, abs(hi)):
            break
    return None


def minimize(objective, x0, opts: OptimizerOptions | None = None, refresh=None):
    """Minimize `objective` from `x0`; returns (best_x, trace).

    `refresh(iteration, x) -> bool` may mutate the objective (the caller owns
    it); returning True drops the curvature history and re-evaluates.
    """
    opts = opts or OptimizerOptions()
    x = np.asarray(x0, dtype=np.float64).copy()
    n = x.size
    trace = OptimizerTrace()

    f, g = _evaluate(objective, x, n)
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise ObjectiveError("objective is non-finite at the starting point")
    trace.initial_value = f
    trace.initial_grad_norm = float(np.linalg.norm(g))
    g_ref = max(1.0, trace.initial_grad_norm)

    if trace.initial_grad_norm == 0.0:
        trace.status = "converged"
        return x.copy(), trace

    s_hist, y_hist, rho_hist = [], [], []
    x_best, f_best = x.copy(), f
    status = "max_iters"
    for k in range(opts.max_iters):
        d = _two_loop_direction(g, s_hist, y_hist, rho_hist)
        dphi0 = float(g @ d)
        if dphi0 >= 0:
            # Not a descent direction; restart from steepest descent.
            s_hist, y_hist, rho_hist = [], [], []
            d = -g
            dphi0 = float(g @ d)
        t0 = 1.0 if s_hist or k > 0 else min(1.0, 1.0 / max(1e-12, float(np.abs(g).sum())))
        hit = _strong_wolfe(objective, x, f, g, d, opts, t0, n)
        if hit is None:
            status = "line_search_failed"
            break
        t, f_new, g_new, evals = hit
        s = t * d
        y = g_new - g
        sty = float(s @ y)
        if sty > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sty)
            if len(s_hist) > opts.history:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)

        x = x + s
        record = IterationRecord(
            iteration=k, value=f_new, grad_norm=float(np.linalg.norm(g_new)), step=t,
            refreshed=False, f_start=f, gtd_start=dphi0, gtd_end=float(g_new @ d),
            evals=evals,
        )
        trace.records.append(record)

        f_delta = abs(f - f_new)
        f, g = f_new, g_new
        if f < f_best:
            f_best, x_best = f, x.copy()

        if refresh is not None and refresh(k, x):
            record.refreshed = True
            s_hist, y_hist, rho_hist = [], [], []
            f, g = _evaluate(objective, x, n)
            # The objective changed under us; best-so-far restarts here.
            f_best, x_best = f, x.copy()
            g_ref = max(1.0, float(np.linalg.norm(g)))
            continue

        if float(np.linalg.norm(g)) <= opts.grad_tol * g_ref:
            status = "converged"
            break
        if f_delta <= opts.f_tol * max(1.0, abs(f)):
            status = "converged"
            break
    trace.status = status
    return x_best, trace


def _two_loop_direction(g, s_hist, y_hist, rho_hist):
    q = -g.copy()
    if not s_hist:
        return q
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    gamma = 1.0 / (rho_hist[-1] * float(y_hist[-1] @ y_hist[-1]))
    q *= gamma
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q
