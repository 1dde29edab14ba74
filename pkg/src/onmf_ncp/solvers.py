"""PALM inner solvers and the penalty-escalation driver.

``ncp_solve`` repeatedly solves the penalized problem with PALM, warm
starting from the previous solution, and multiplies ``rho`` by ``gamma``
while the rows of H are not yet orthogonal.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import metrics
from .model import (
    NO_BOUNDS,
    BoxBounds,
    FactorPair,
    Regularization,
    as_data_matrix,
    check_shapes,
    frob_norm,
    inner,
    project_nonneg_box,
)
from .penalty import GENERIC, NONSMOOTH, SMOOTH, Penalty, grad_h_penalty_generic, penalty_value
from .prox import prox_h_update

logger = logging.getLogger(__name__)

# smallest step constant; only reached when the block's gradient is identically zero
_MIN_STEP_CONSTANT = 1e-300


class NumericalError(RuntimeError):
    """NaN or Inf appeared in the iterates."""

    def __init__(self, message, iteration=None, outer_iteration=None):
        super().__init__(message)
        self.iteration = iteration
        self.outer_iteration = outer_iteration


class LineSearchError(RuntimeError):
    """Armijo backtracking ran out of attempts."""


@dataclass
class PalmConfig:
    eps_palm: float = 3e-3
    max_inner_iters: int = 500
    step_safety: float = 1.01
    armijo_beta: float = 0.5
    armijo_sigma: float = 1e-4
    armijo_max_backtracks: int = 60

    def __post_init__(self):
        if not self.eps_palm > 0:
            raise ValueError("eps_palm must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be at least 1")
        if self.step_safety < 1:
            raise ValueError("step_safety must be >= 1")
        if not 0 < self.armijo_beta < 1 or not 0 <= self.armijo_sigma < 1:
            raise ValueError("Armijo needs beta in (0, 1) and sigma in [0, 1)")


@dataclass
class InnerTrace:
    """One PALM run: penalized objective at every iterate (index 0 is the start)."""

    objectives: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def max_relative_increase(self) -> float:
        obj = np.asarray(self.objectives)
        if obj.size < 2:
            return 0.0
        inc = np.diff(obj) / np.maximum(np.abs(obj[:-1]), np.finfo(float).tiny)
        return float(max(inc.max(), 0.0))


# -- shared building blocks ------------------------------------------------

def _lam_max(A):
    if not np.all(np.isfinite(A)):
        raise NumericalError("non-finite block Hessian (overflow in W^T W or H H^T)")
    return float(np.linalg.eigvalsh(A)[-1])


def _fit_value(xx, WtX, WtW, H, HHt, W, reg):
    # ||X - WH||^2 expanded so that only K x N / K x K work is needed
    val = xx - 2.0 * inner(WtX, H) + inner(WtW, HHt)
    return val + 0.5 * reg.mu * inner(W, W) + 0.5 * reg.nu * inner(H, H)


def _fit_value_direct(X, W, H, reg):
    R = X - W @ H
    return inner(R, R) + 0.5 * reg.mu * inner(W, W) + 0.5 * reg.nu * inner(H, H)


def _penalized(X, W, H, reg, spec):
    return _fit_value_direct(X, W, H, reg) + spec.rho / spec.v * penalty_value(H, spec)


# above this many entries the trace uses the expanded fit, reusing W^T X
_DIRECT_OBJECTIVE_MAX_SIZE = 250_000


class _Tracker:
    """Penalized objective along PALM iterates without an extra M x N pass."""

    def __init__(self, X, reg, spec, xx=None):
        self.X, self.reg, self.spec = X, reg, spec
        self.direct = X.size <= _DIRECT_OBJECTIVE_MAX_SIZE
        if not self.direct and xx is None:
            xx = inner(X, X)
        self.xx = xx

    def __call__(self, W, H, WtX, WtW):
        if self.direct:
            fit = _fit_value_direct(self.X, W, H, self.reg)
        else:
            fit = float(_fit_value(self.xx, WtX, WtW, H, H @ H.T, W, self.reg))
        return fit + self.spec.rho / self.spec.v * penalty_value(H, self.spec)


def _rel(new, old):
    num = frob_norm(new - old)
    den = frob_norm(old)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return float(num / den)


def _check_finite(A, name, k):
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"non-finite entries in {name} at inner iteration {k}", iteration=k)


def _w_step(X, W, H, reg, bounds, safety):
    HHt = H @ H.T
    XHt = X @ H.T
    K = H.shape[0]
    c = safety * 0.5 * _lam_max(2.0 * HHt + reg.mu * np.eye(K))
    c = max(c, _MIN_STEP_CONSTANT)
    gW = 2.0 * (W @ HHt - XHt) + reg.mu * W
    return project_nonneg_box(W - gW / c, bounds)


def _h_step_smooth(WtX, WtW, H, reg, rho, safety):
    K = H.shape[0]
    A = 2.0 * WtW + reg.nu * np.eye(K) + rho * (np.ones((K, K)) - np.eye(K))
    t = max(safety * 0.5 * _lam_max(A), _MIN_STEP_CONSTANT)
    gH = 2.0 * (WtW @ H - WtX) + reg.nu * H + rho * (H.sum(axis=0, keepdims=True) - H)
    return np.maximum(H - gH / t, 0.0)


def _h_step_nonsmooth(WtX, WtW, H, reg, rho, safety):
    K = H.shape[0]
    t = max(safety * _lam_max(2.0 * WtW + reg.nu * np.eye(K)), _MIN_STEP_CONSTANT)
    gH = 2.0 * (WtW @ H - WtX) + reg.nu * H + rho
    B = H - gH / t
    Hn, Z = prox_h_update(B, rho, t)
    return Hn, B, Z, t


def _prepare(X, init, spec):
    X = np.asarray(X, dtype=np.float64)
    W, H = (np.array(a, dtype=np.float64) for a in init)
    check_shapes(X, W, H)
    _check_finite(W, "initial W", 0)
    _check_finite(H, "initial H", 0)
    if np.any(W < 0) or np.any(H < 0):
        raise ValueError("initial factors must be non-negative")
    if not spec.rho >= 0:
        raise ValueError("rho must be non-negative")
    return X, W, H


# -- PALM variants ---------------------------------------------------------

def palm_smooth(
    X,
    init,
    reg: Regularization,
    spec: Penalty,
    cfg: PalmConfig = PalmConfig(),
    bounds: BoxBounds = NO_BOUNDS,
    callback: Optional[Callable] = None,
    *,
    x_sq_norm: Optional[float] = None,
):
    """Block projected gradient (PALM) on the smooth penalized objective.

    H then W, each with step ``1 / (safety * lambda_max(block Hessian) / 2)``.
    Stops when the relative change of (W, H) drops below ``cfg.eps_palm``.
    ``x_sq_norm`` optionally supplies a precomputed ``||X||_F^2``.

    Returns
    -------
    (FactorPair, InnerTrace)
    """
    if spec.kind != SMOOTH:
        raise ValueError(f"palm_smooth needs the smooth penalty, got {spec.kind!r}")
    X, W, H = _prepare(X, init, spec)
    track = _Tracker(X, reg, spec, x_sq_norm)
    WtW, WtX = W.T @ W, W.T @ X
    trace = InnerTrace(objectives=[track(W, H, WtX, WtW)])
    for k in range(cfg.max_inner_iters):
        Hn = _h_step_smooth(WtX, WtW, H, reg, spec.rho, cfg.step_safety)
        _check_finite(Hn, "H", k)
        Wn = _w_step(X, W, Hn, reg, bounds, cfg.step_safety)
        _check_finite(Wn, "W", k)
        res = _rel(Wn, W) + _rel(Hn, H)
        W, H = Wn, Hn
        WtW, WtX = W.T @ W, W.T @ X
        trace.objectives.append(track(W, H, WtX, WtW))
        trace.residuals.append(res)
        trace.iterations = k + 1
        if callback is not None:
            callback({"k": k, "W": W, "H": H})
        if res < cfg.eps_palm:
            trace.converged = True
            break
    return FactorPair(W, H), trace


def palm_nonsmooth(
    X,
    init,
    reg: Regularization,
    rho: float,
    cfg: PalmConfig = PalmConfig(),
    bounds: BoxBounds = NO_BOUNDS,
    callback: Optional[Callable] = None,
    *,
    x_sq_norm: Optional[float] = None,
):
    """PALM on ``F + rho * sum_j (1^T h_j - max(h_j))``.

    The H step is a gradient step on the smooth part with ``t = lambda_max``
    followed by the closed-form negative-infinity-norm prox; the W step is
    the same projected gradient step as in :func:`palm_smooth`.  The
    callback, if given, also receives the prox input ``B``, the selector
    ``Z`` and the step constant ``t`` of every iteration.
    """
    spec = Penalty.nonsmooth(rho)
    X, W, H = _prepare(X, init, spec)
    track = _Tracker(X, reg, spec, x_sq_norm)
    WtW, WtX = W.T @ W, W.T @ X
    trace = InnerTrace(objectives=[track(W, H, WtX, WtW)])
    for k in range(cfg.max_inner_iters):
        Hn, B, Z, t = _h_step_nonsmooth(WtX, WtW, H, reg, rho, cfg.step_safety)
        _check_finite(Hn, "H", k)
        Wn = _w_step(X, W, Hn, reg, bounds, cfg.step_safety)
        _check_finite(Wn, "W", k)
        res = _rel(Wn, W) + _rel(Hn, H)
        if callback is not None:
            callback({"k": k, "W": Wn, "H": Hn, "B": B, "Z": Z, "t": t, "rho": rho})
        W, H = Wn, Hn
        WtW, WtX = W.T @ W, W.T @ X
        trace.objectives.append(track(W, H, WtX, WtW))
        trace.residuals.append(res)
        trace.iterations = k + 1
        if res < cfg.eps_palm:
            trace.converged = True
            break
    return FactorPair(W, H), trace


def _armijo(value_fn, grad, Z0, step0, proj, cfg, f0, what, k):
    step = step0
    for _ in range(cfg.armijo_max_backtracks):
        Zt = proj(Z0 - step * grad)
        ft = value_fn(Zt)
        d = Zt - Z0
        if np.isfinite(ft) and ft <= f0 - cfg.armijo_sigma / step * inner(d, d):
            return Zt, ft, step
        step *= cfg.armijo_beta
    raise LineSearchError(
        f"Armijo search for {what} exhausted {cfg.armijo_max_backtracks} backtracks at inner iteration {k}"
    )


def palm_generic_armijo(
    X,
    init,
    reg: Regularization,
    spec: Penalty,
    cfg: PalmConfig = PalmConfig(),
    bounds: BoxBounds = NO_BOUNDS,
    callback: Optional[Callable] = None,
    initial_step: Optional[float] = None,
    *,
    x_sq_norm: Optional[float] = None,
):
    """Block projected gradient with Armijo backtracking, for any finite (p, q, v).

    Each block starts from its previous accepted step enlarged by ``1/beta``
    (or ``initial_step`` / the F-only curvature on the first iteration) and
    shrinks by ``beta`` until the penalized objective drops by at least
    ``sigma / step * ||Z_new - Z||^2``.
    """
    if spec.kind not in (GENERIC, SMOOTH):
        raise ValueError(f"Armijo PALM handles finite (p, q, v) penalties, got {spec.kind!r}")
    X, W, H = _prepare(X, init, spec)
    xx = inner(X, X) if x_sq_norm is None else float(x_sq_norm)
    K = H.shape[0]
    weight = spec.rho / spec.v

    def pen(Hm):
        return weight * penalty_value(Hm, spec)

    def grad_pen(Hm):
        if spec.kind == SMOOTH:
            return spec.rho * (Hm.sum(axis=0, keepdims=True) - Hm)
        return grad_h_penalty_generic(Hm, spec)

    f_cur = _penalized(X, W, H, reg, spec)
    trace = InnerTrace(objectives=[f_cur])
    step_h = step_w = initial_step
    for k in range(cfg.max_inner_iters):
        WtW = W.T @ W
        WtX = W.T @ X
        if step_h is None:
            step_h = 1.0 / max(0.5 * _lam_max(2.0 * WtW + reg.nu * np.eye(K)), _MIN_STEP_CONSTANT)
        elif k > 0:
            step_h = step_h / cfg.armijo_beta

        def f_h(Hm):
            return _fit_value(xx, WtX, WtW, Hm, Hm @ Hm.T, W, reg) + pen(Hm)

        f0 = f_h(H)
        gH = 2.0 * (WtW @ H - WtX) + reg.nu * H + grad_pen(H)
        Hn, _, step_h = _armijo(f_h, gH, H, step_h, lambda A: np.maximum(A, 0.0), cfg, f0, "H", k)
        _check_finite(Hn, "H", k)

        HHt = Hn @ Hn.T
        XHt = X @ Hn.T
        pen_h = pen(Hn)
        if step_w is None:
            step_w = 1.0 / max(0.5 * _lam_max(2.0 * HHt + reg.mu * np.eye(K)), _MIN_STEP_CONSTANT)
        elif k > 0:
            step_w = step_w / cfg.armijo_beta

        def f_w(Wm):
            fit = xx - 2.0 * inner(Wm, XHt) + inner(Wm.T @ Wm, HHt)
            return fit + 0.5 * reg.mu * inner(Wm, Wm) + 0.5 * reg.nu * inner(Hn, Hn) + pen_h

        f0 = f_w(W)
        gW = 2.0 * (W @ HHt - XHt) + reg.mu * W
        Wn, _, step_w = _armijo(f_w, gW, W, step_w, lambda A: project_nonneg_box(A, bounds), cfg, f0, "W", k)
        _check_finite(Wn, "W", k)

        res = _rel(Wn, W) + _rel(Hn, H)
        W, H = Wn, Hn
        trace.objectives.append(_penalized(X, W, H, reg, spec))
        trace.residuals.append(res)
        trace.iterations = k + 1
        if callback is not None:
            callback({"k": k, "W": W, "H": H, "step_h": step_h, "step_w": step_w})
        if res < cfg.eps_palm:
            trace.converged = True
            break
    return FactorPair(W, H), trace


# -- outer driver ----------------------------------------------------------

METHOD_DEFAULT_STOP = {SMOOTH: 1e-5, NONSMOOTH: 1e-3, GENERIC: 1e-5}


@dataclass
class NcpConfig:
    """Tunables of the penalty-escalation driver.

    ``eps_orth`` is the orthogonality level above which ``rho`` is raised;
    the run stops once ``max(eps_orth_value, eps_nr_value) <= eps_stop``.
    ``eps_stop=None`` picks the per-method default (1e-5 smooth/generic,
    1e-3 non-smooth).
    """

    method: str = SMOOTH
    rho0: float = 1e-8
    gamma: float = 1.1
    eps_orth: float = 1e-10
    eps_stop: Optional[float] = None
    max_outer_iters: int = 1000
    mu: float = 0.0
    nu: float = 1e-10
    palm: PalmConfig = field(default_factory=PalmConfig)
    w_lower: Optional[float] = None
    w_upper: Optional[float] = None
    p: float = 1.0
    q: float = 2.0
    v: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in (SMOOTH, NONSMOOTH, GENERIC):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if isinstance(self.palm, dict):
            self.palm = PalmConfig(**self.palm)
        self.penalty(self.rho0)  # validates (p, q, v)
        BoxBounds(self.w_lower, self.w_upper)

    @property
    def stop_threshold(self) -> float:
        return METHOD_DEFAULT_STOP[self.method] if self.eps_stop is None else self.eps_stop

    @property
    def reg(self) -> Regularization:
        return Regularization(self.mu, self.nu)

    @property
    def bounds(self) -> BoxBounds:
        return BoxBounds(self.w_lower, self.w_upper)

    def penalty(self, rho: float) -> Penalty:
        if self.method == SMOOTH:
            return Penalty.smooth(rho)
        if self.method == NONSMOOTH:
            return Penalty.nonsmooth(rho)
        return Penalty.generic(self.p, self.q, self.v, rho)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OuterRecord:
    iteration: int
    rho: float
    objective: float
    penalty: float
    penalized_objective: float
    eps_orth: float
    eps_nr: float
    inner_iterations: int
    inner_converged: bool
    max_inner_rel_increase: float
    wall_time: float


@dataclass
class NcpResult:
    factors: FactorPair
    labels: metrics.Labels
    trace: list
    status: str
    rho: float
    zero_columns: int = 0
    inner_traces: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def W(self):
        return self.factors.W

    @property
    def H(self):
        return self.factors.H


def random_init(X, K: int, seed: int = 0) -> FactorPair:
    """W uniform on [0, max(X)], H uniform on [0, 1], drawn in that order."""
    X = np.asarray(X, dtype=np.float64)
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = np.random.default_rng(seed)
    M, N = X.shape
    W = rng.uniform(0.0, float(X.max()), size=(M, K))
    H = rng.uniform(0.0, 1.0, size=(K, N))
    return FactorPair(W, H)


def _palm_call(X, WH, cfg: NcpConfig, rho: float, xx: float, callback=None):
    if cfg.method == SMOOTH:
        return palm_smooth(X, WH, cfg.reg, Penalty.smooth(rho), cfg.palm, cfg.bounds, callback, x_sq_norm=xx)
    if cfg.method == NONSMOOTH:
        return palm_nonsmooth(X, WH, cfg.reg, rho, cfg.palm, cfg.bounds, callback, x_sq_norm=xx)
    return palm_generic_armijo(X, WH, cfg.reg, cfg.penalty(rho), cfg.palm, cfg.bounds, callback, x_sq_norm=xx)


def zero_column_violations(X, W, H) -> int:
    """Count all-zero columns of H among samples with ``W^T x_j != 0``."""
    active = np.any(W.T @ X != 0, axis=0)
    return int(np.sum(active & ~np.any(H != 0, axis=0)))


def ncp_solve(
    X,
    K: int,
    cfg: Optional[NcpConfig] = None,
    init: Optional[FactorPair] = None,
    keep_inner_traces: bool = False,
    callback: Optional[Callable] = None,
) -> NcpResult:
    """Cluster the columns of ``X`` into ``K`` groups by penalized ONMF.

    Parameters
    ----------
    X : array_like, shape (M, N)
        Non-negative data, one sample per column.
    K : int
        Number of clusters.
    cfg : NcpConfig, optional
        Defaults to the smooth penalty with the standard settings.
    init : FactorPair, optional
        Starting point; drawn by :func:`random_init` with ``cfg.seed`` if absent.
    keep_inner_traces : bool
        Keep every PALM call's objective sequence on the result.
    callback : callable, optional
        Called after each outer iteration with the :class:`OuterRecord`.
    """
    cfg = cfg or NcpConfig()
    X = as_data_matrix(X)
    if K < 1:
        raise ValueError("K must be at least 1")
    WH = random_init(X, K, cfg.seed) if init is None else FactorPair(*(np.array(a, dtype=np.float64) for a in init))
    check_shapes(X, *WH)
    if WH.K != K:
        raise ValueError(f"initial factors have K={WH.K}, expected {K}")
    rho = cfg.rho0
    stop = cfg.stop_threshold
    records, inner_traces = [], []
    status = "max_iter"
    xx = inner(X, X)
    for r in range(1, cfg.max_outer_iters + 1):
        t0 = time.perf_counter()
        try:
            new, itrace = _palm_call(X, WH, cfg, rho, xx)
        except (NumericalError, LineSearchError) as err:
            if isinstance(err, NumericalError):
                raise NumericalError(f"outer iteration {r} (rho={rho:g}): {err}", err.iteration, r) from err
            raise LineSearchError(f"outer iteration {r} (rho={rho:g}): {err}") from err
        eo = metrics.orthogonality_eps(new.H)
        enr = metrics.normalized_residual(WH, new)
        spec = cfg.penalty(rho)
        if X.size <= _DIRECT_OBJECTIVE_MAX_SIZE:
            fval = _fit_value_direct(X, new.W, new.H, cfg.reg)
        else:
            fval = float(_fit_value(xx, new.W.T @ X, new.W.T @ new.W, new.H, new.H @ new.H.T, new.W, cfg.reg))
        pval = penalty_value(new.H, spec)
        rec = OuterRecord(
            iteration=r,
            rho=rho,
            objective=fval,
            penalty=pval,
            penalized_objective=fval + rho / spec.v * pval,
            eps_orth=eo,
            eps_nr=enr,
            inner_iterations=itrace.iterations,
            inner_converged=itrace.converged,
            max_inner_rel_increase=itrace.max_relative_increase(),
            wall_time=time.perf_counter() - t0,
        )
        records.append(rec)
        if keep_inner_traces:
            inner_traces.append(itrace)
        if callback is not None:
            callback(rec)
        logger.debug("outer %d rho=%.3g eps_orth=%.3g eps_nr=%.3g inner=%d", r, rho, eo, enr, itrace.iterations)
        WH = new
        if max(eo, enr) <= stop:
            status = "converged"
            break
        if eo >= cfg.eps_orth:
            rho *= cfg.gamma
    zc = zero_column_violations(X, WH.W, WH.H)
    if zc:
        warnings.warn(f"{zc} column(s) of H are zero although W^T x_j != 0", RuntimeWarning)
    return NcpResult(
        factors=WH,
        labels=metrics.extract_labels(WH.H),
        trace=records,
        status=status,
        rho=rho,
        zero_columns=zc,
        inner_traces=inner_traces,
    )


def stationarity_residual(X, W, H, reg: Regularization, spec: Penalty, bounds: BoxBounds = NO_BOUNDS) -> float:
    """Distance from (W, H) to one block step taken from (W, H), relative to ||(W, H)||.

    Both blocks step from the same point with the solver's own step constants
    (for the generic penalty, the constants of F alone).  Zero exactly at
    fixed points of the block updates.
    """
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    check_shapes(X, W, H)
    WtW, WtX = W.T @ W, W.T @ X
    K = H.shape[0]
    if spec.kind == SMOOTH:
        Hs = _h_step_smooth(WtX, WtW, H, reg, spec.rho, 1.0)
    elif spec.kind == NONSMOOTH:
        Hs = _h_step_nonsmooth(WtX, WtW, H, reg, spec.rho, 1.0)[0]
    else:
        t = max(0.5 * _lam_max(2.0 * WtW + reg.nu * np.eye(K)), _MIN_STEP_CONSTANT)
        gH = 2.0 * (WtW @ H - WtX) + reg.nu * H + grad_h_penalty_generic(H, spec)
        Hs = np.maximum(H - gH / t, 0.0)
    Ws = _w_step(X, W, H, reg, bounds, 1.0)
    num = math.sqrt(inner(Ws - W, Ws - W) + inner(Hs - H, Hs - H))
    den = math.sqrt(inner(W, W) + inner(H, H))
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den
