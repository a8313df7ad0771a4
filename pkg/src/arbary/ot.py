"""Entropic optimal transport between discretized PSDs.

All solvers work on dual potentials in the log domain; the Gibbs kernel is
kept as -C/eps and only exponentiated inside stabilized log-sum-exp
reductions, so eps down to ~1e-2 on a full circle grid is safe.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceError, InvalidArgument
from .spectral import GroundCost, Psd, normalize

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = 0.07
    max_iters: int = 10000
    tol: float = 1e-9
    method: str = "stabilized"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgument(f"epsilon must be positive, got {self.epsilon}")
        if not self.tol > 0:
            raise InvalidArgument(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise InvalidArgument(f"max_iters must be >= 1, got {self.max_iters}")
        if self.method not in ("stabilized", "lse"):
            raise InvalidArgument(f"unknown Sinkhorn method {self.method!r}")


@dataclass(frozen=True, eq=False)
class DualPotentials:
    f: np.ndarray
    g: np.ndarray

    def centered_f(self) -> np.ndarray:
        """f shifted to zero sum. Zero-mass bins have f = -inf (the entropic
        cost has an infinite slope there); those stay -inf and the shift is
        taken over the support."""
        finite = np.isfinite(self.f)
        if finite.all():
            return self.f - self.f.mean()
        out = np.full_like(self.f, -np.inf)
        out[finite] = self.f[finite] - self.f[finite].mean()
        return out


@dataclass(frozen=True, eq=False)
class EntropicResult:
    cost: float
    potentials: DualPotentials
    iterations: int
    marginal_violation: float
    epsilon: float
    plan: Optional[np.ndarray] = None


def _as_mass(x) -> np.ndarray:
    return np.asarray(x.mass if isinstance(x, Psd) else x, dtype=float).reshape(-1)


def _as_matrix(cost) -> np.ndarray:
    return np.asarray(cost.matrix if isinstance(cost, GroundCost) else cost, dtype=float)


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _safe_log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def gibbs_kernel(cost, epsilon: float) -> np.ndarray:
    """Log of the Gibbs kernel, -C/eps. Exponentiate only where it is safe."""
    if not epsilon > 0:
        raise InvalidArgument(f"epsilon must be positive, got {epsilon}")
    return -_as_matrix(cost) / epsilon


def _check_problem(p, q, C):
    n, m = C.shape
    if p.shape != (n,) or q.shape != (m,):
        raise InvalidArgument(f"marginal shapes {p.shape}, {q.shape} do not match cost {C.shape}")
    for name, x in (("p", p), ("q", q)):
        if np.any(x < 0) or abs(x.sum() - 1.0) > NORMALIZATION_TOL:
            raise InvalidArgument(f"{name} must be a normalized nonnegative vector (sum={x.sum()!r})")


def _primal_value(log_plan: np.ndarray, C: np.ndarray, eps: float) -> float:
    plan = np.exp(log_plan)
    mask = plan > 0
    ent = np.where(mask, plan * (np.where(mask, log_plan, 0.0) - 1.0), 0.0)
    return float(np.sum(plan * C) + eps * np.sum(ent))


def _not_converged(config, viol):
    return ConvergenceError(
        f"Sinkhorn did not reach tol={config.tol} in {config.max_iters} iterations "
        f"(violation {viol:.3e})",
        violation=viol,
    )


def _sinkhorn_lse(logp, logq, q, logk, g, config):
    eps = config.epsilon
    for it in range(1, config.max_iters + 1):
        f = eps * (logp - _lse(logk + g[None, :] / eps, axis=1))
        col_lse = _lse(logk + f[:, None] / eps, axis=0)
        viol = float(np.abs(np.exp(col_lse + g / eps) - q).sum())
        if not np.isfinite(viol):
            raise ConvergenceError("non-finite marginal in Sinkhorn iterations", violation=viol)
        if viol <= config.tol:
            return f, g, it, viol
        g = eps * (logq - col_lse)
    raise _not_converged(config, viol)


def _sinkhorn_stabilized(logp, logq, q, logk, g, config, absorb_at=30.0):
    """Same fixed-point map as the log-sum-exp engine, run on relative scalings.

    The kernel is rescaled by the current potentials, exp(-C/eps + (f+g)/eps),
    and the iteration multiplies bounded scalings u, v into it; whenever a
    scaling leaves [exp(-absorb_at), exp(absorb_at)] (or a product leaves the
    floating-point range) the scalings are folded back into f, g and the
    potentials are re-anchored by an exact log-sum-exp update.
    """
    eps = config.epsilon
    p = np.exp(logp)
    sp, sq = p > 0, q > 0
    full_p, full_q = bool(sp.all()), bool(sq.all())
    hi, lo = np.exp(absorb_at), np.exp(-absorb_at)
    it = 0
    viol = np.inf
    while it < config.max_iters:
        f = eps * (logp - _lse(logk + g[None, :] / eps, axis=1))
        col_lse = _lse(logk + f[:, None] / eps, axis=0)
        it += 1
        viol = float(np.abs(np.exp(col_lse + g / eps) - q).sum())
        if not np.isfinite(viol):
            raise ConvergenceError("non-finite marginal in Sinkhorn iterations", violation=viol)
        if viol <= config.tol:
            return f, g, it, viol
        g = eps * (logq - col_lse)
        kt = np.exp(logk + (f[:, None] + g[None, :]) / eps)
        ktt = np.ascontiguousarray(kt.T)
        v = np.ones_like(g)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            while it < config.max_iters:
                u = p / (kt @ v)
                if not full_p:
                    u = np.where(sp, u, 0.0)  # zero-mass rows stay at 0 instead of 0/0
                ktu = ktt @ u
                it += 1
                viol = float(np.abs(v * ktu - q).sum())
                if viol <= config.tol:
                    return f + eps * _safe_log(u), g + eps * _safe_log(v), it, viol
                if not viol < np.inf:
                    break
                v_new = q / ktu
                if not full_q:
                    v_new = np.where(sq, v_new, 0.0)
                if not np.isfinite(v_new.sum()):
                    break
                v = v_new
                us = u if full_p else u[sp]
                vs = v if full_q else v[sq]
                if us.max() > hi or us.min() < lo or vs.max() > hi or vs.min() < lo:
                    break
        g = g + eps * _safe_log(v)
        # zero-mass columns keep g = -inf; anything else non-finite restarts at 0
        g = np.where(np.isfinite(g) | ~sq, g, 0.0)
        if not full_q:
            g[~sq] = -np.inf
    raise _not_converged(config, viol)


def sinkhorn(
    p,
    q,
    cost,
    config: SinkhornConfig = SinkhornConfig(),
    init_g: Optional[np.ndarray] = None,
    return_plan: bool = False,
) -> EntropicResult:
    """Entropic OT between normalized ``p`` and ``q``.

    Alternates f- and g-updates in the log domain; after every f-update the
    rows match ``p`` exactly and the L1 violation of the column marginal is
    compared with ``config.tol``. ``cost`` on the result is the primal
    objective <C, P> + eps * sum P (log P - 1) at the recovered plan.
    """
    p, q, C = _as_mass(p), _as_mass(q), _as_matrix(cost)
    _check_problem(p, q, C)
    eps = config.epsilon
    logk = -C / eps
    logp, logq = _safe_log(p), _safe_log(q)
    g = np.zeros(len(q)) if init_g is None else np.array(init_g, dtype=float)
    if not np.all(np.isfinite(g[q > 0])):
        g = np.zeros(len(q))
    engine = _sinkhorn_lse if config.method == "lse" else _sinkhorn_stabilized
    f, g, it, viol = engine(logp, logq, q, logk, g, config)

    log_plan = logk + (f[:, None] + g[None, :]) / eps
    value = _primal_value(log_plan, C, eps)
    return EntropicResult(
        cost=value,
        potentials=DualPotentials(f, g),
        iterations=it,
        marginal_violation=viol,
        epsilon=eps,
        plan=np.exp(log_plan) if return_plan else None,
    )


def transport_plan(result: EntropicResult, cost) -> np.ndarray:
    """Materialize the coupling diag(u) K diag(v) from a result's potentials."""
    C = _as_matrix(cost)
    eps = result.epsilon
    f, g = result.potentials.f, result.potentials.g
    return np.exp(-C / eps + (f[:, None] + g[None, :]) / eps)


def dual_value(result: EntropicResult, p, q, cost) -> float:
    """<f, p> + <g, q> - eps * <exp(f/eps), K exp(g/eps)>."""
    p, q, C = _as_mass(p), _as_mass(q), _as_matrix(cost)
    eps = result.epsilon
    f, g = result.potentials.f, result.potentials.g
    sp, sq = p > 0, q > 0
    lin = float(np.dot(f[sp], p[sp]) + np.dot(g[sq], q[sq]))
    mass = np.exp(_lse(_lse(-C / eps + (f[:, None] + g[None, :]) / eps, axis=1), axis=0))
    return lin - eps * float(mass)


def marginal_gradient(result: EntropicResult) -> np.ndarray:
    """Gradient of the entropic cost w.r.t. the first marginal, centered to sum zero."""
    return result.potentials.centered_f()


def barycenter_objective(
    center,
    psds: Sequence,
    cost,
    config: SinkhornConfig = SinkhornConfig(),
    warm_start: Optional[list] = None,
):
    """Average entropic cost from ``center`` to each member of ``psds`` and its gradient.

    If ``warm_start`` is a list of length K it seeds the g-potentials and is
    overwritten with the converged ones.
    """
    K = len(psds)
    if K == 0:
        raise InvalidArgument("empty PSD set")
    value = 0.0
    grad = np.zeros(len(_as_mass(center)))
    for k, target in enumerate(psds):
        init = warm_start[k] if warm_start is not None else None
        try:
            res = sinkhorn(center, target, cost, config, init_g=init)
        except ConvergenceError as exc:
            raise ConvergenceError(f"target {k}: {exc}", violation=exc.violation, details={"k": k}) from exc
        if warm_start is not None:
            warm_start[k] = res.potentials.g
        value += res.cost
        grad += marginal_gradient(res)
    return value / K, grad / K


def free_barycenter(
    psds: Sequence,
    cost,
    config: SinkhornConfig = SinkhornConfig(),
    damping: float = 1.0,
) -> Psd:
    """Nonparametric entropic barycenter by log-domain iterative Bregman projections.

    Each iteration projects every coupling onto its fixed target marginal,
    then sets the shared marginal to the (damped) geometric mean of the K
    free marginals. Stops when all K free marginals agree pairwise in L1
    within ``config.tol``.
    """
    if len(psds) == 0:
        raise InvalidArgument("empty PSD set")
    if not 0 < damping <= 1:
        raise InvalidArgument("damping must lie in (0, 1]")
    grid = psds[0].grid if isinstance(psds[0], Psd) else None
    targets = np.array([_as_mass(x) for x in psds])
    C = _as_matrix(cost)
    for t in targets:
        _check_problem(t, t, C)
    eps = config.epsilon
    logk = -C / eps
    logt = _safe_log(targets)
    K, N = targets.shape
    F = np.zeros((K, N))
    log_center = None
    spread = np.inf
    for it in range(1, config.max_iters + 1):
        G = eps * (logt - _lse(logk[None, :, :] + F[:, :, None] / eps, axis=1))
        row_lse = _lse(logk[None, :, :] + G[:, None, :] / eps, axis=2)
        log_marg = F / eps + row_lse
        marg = np.exp(log_marg)
        spread = float(np.max(np.abs(marg[:, None, :] - marg[None, :, :]).sum(axis=2)))
        if not np.isfinite(spread):
            raise ConvergenceError("non-finite marginal in barycenter iterations", violation=spread)
        target_log = log_marg.mean(axis=0)
        if log_center is None or damping == 1.0:
            log_center = target_log
        else:
            log_center = (1.0 - damping) * log_center + damping * target_log
        if spread <= config.tol and it > 1:
            break
        F = eps * (log_center[None, :] - row_lse)
    else:
        raise ConvergenceError(
            f"barycenter did not converge in {config.max_iters} iterations (spread {spread:.3e})",
            violation=spread,
            details={"per_k": np.abs(marg - np.exp(log_center)).sum(axis=1).tolist()},
        )
    mass = np.exp(log_center)
    if grid is None:
        return mass / mass.sum()
    return normalize(Psd(grid, mass))


def brute_force_entropic(p, q, cost, epsilon: float, tol: float = 1e-14, max_iters: int = 500) -> float:
    """Entropic OT value from a generic Newton solve of the concave dual.

    Independent of the Sinkhorn path: the smooth dual
    <f, p> + <g, q> - eps * sum exp((f_i + g_j - C_ij) / eps) is maximized
    jointly over (f, g) by damped Newton steps with the exact Hessian
    (one potential pinned to remove the shift invariance). The
    returned number is the primal objective at the plan recovered from the
    optimal potentials. Desk-scale only (N <= 8).
    """
    p, q, C = _as_mass(p), _as_mass(q), _as_matrix(cost)
    _check_problem(p, q, C)
    if max(C.shape) > 8:
        raise InvalidArgument("brute-force oracle is limited to N <= 8")
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    rows, cols = np.flatnonzero(p > 0), np.flatnonzero(q > 0)
    p, q, C = p[rows], q[cols], C[np.ix_(rows, cols)]
    n, m = len(p), len(q)

    def split(x):
        return x[:n], np.concatenate([x[n:], [0.0]])

    def plan(x):
        f, g = split(x)
        return np.exp((f[:, None] + g[None, :] - C) / epsilon)

    def neg_dual(x):
        f, g = split(x)
        return -(f @ p + g @ q - epsilon * plan(x).sum())

    def neg_grad(x):
        P = plan(x)
        return -np.concatenate([p - P.sum(axis=1), (q - P.sum(axis=0))[:-1]])

    def neg_hess(x):
        P = plan(x)
        H = np.block([[np.diag(P.sum(axis=1)), P], [P.T, np.diag(P.sum(axis=0))]])
        return H[: n + m - 1, : n + m - 1] / epsilon

    x = np.zeros(n + m - 1)
    cur = neg_dual(x)
    for _ in range(max_iters):
        grad = neg_grad(x)
        if np.abs(grad).sum() <= tol:
            break
        try:
            step = np.linalg.solve(neg_hess(x), -grad)
        except np.linalg.LinAlgError:
            # a potential pushed every entry of its row/column below the
            # double range; fall back to the least-squares Newton direction
            step = np.linalg.lstsq(neg_hess(x), -grad, rcond=None)[0]
        slope = float(grad @ step)
        s = 1.0
        if np.abs(grad).sum() < 1e-6:
            # inside the quadratic-convergence region objective decreases are
            # below rounding; judge full steps by the residual instead
            cand = x + step
            if np.abs(neg_grad(cand)).sum() >= np.abs(grad).sum():
                break
            x, cur = cand, neg_dual(cand)
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            while s > 1e-16:
                cand = x + s * step
                val = neg_dual(cand)
                if np.isfinite(val) and val <= cur + 1e-4 * s * slope:
                    break
                s *= 0.5
        if not s > 1e-16:
            break
        x, cur = cand, val
    P = plan(x)
    resid = float(np.abs(neg_grad(x)).sum())
    if resid > 1e-10:
        raise ConvergenceError("dual Newton oracle did not converge", violation=resid)
    return _primal_value(np.log(P), C, epsilon)
