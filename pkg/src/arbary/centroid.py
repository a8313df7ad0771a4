"""Order-constrained (AR(P)) centroids of PSD sets in the entropic OT geometry.

The optimizer works on theta = [gain, shape_1..shape_P]; shape entries map
through tanh to reflection coefficients, so every iterate is a stable
all-pole spectrum. The gain entry does not enter the objective: the model
PSD is always rescaled to unit mass before transport.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .ar import (
    ArModel,
    acov_from_psd,
    kappa_to_theta,
    levinson_durbin,
    normalized_ar_shape,
    theta_to_model,
)
from .errors import ArbaryError, InvalidArgument
from .ot import SinkhornConfig, barycenter_objective, free_barycenter
from .seeds import child_seed
from .spectral import Psd, normalize

log = logging.getLogger(__name__)

SCHEMA = "arbary/fit/1"
INIT_KINDS = ("YuleWalker", "PerturbedYuleWalker", "ParcorRandom", "GaussianTheta", "Explicit")


@dataclass(frozen=True)
class OptimizerConfig:
    model_order: int = 10
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    max_outer_iters: int = 500
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    step_init: float = 1.0
    grad_tol: float = 1e-6
    jacobian_fd_step: float = 1e-6
    max_backtracks: int = 50

    def __post_init__(self):
        if self.model_order < 0:
            raise InvalidArgument("model_order must be nonnegative")
        if not 0 < self.armijo_c1 < 1:
            raise InvalidArgument("armijo_c1 must lie in (0, 1)")
        if not 0 < self.armijo_shrink < 1:
            raise InvalidArgument("armijo_shrink must lie in (0, 1)")
        if not self.step_init > 0 or not self.grad_tol > 0 or not self.jacobian_fd_step > 0:
            raise InvalidArgument("step_init, grad_tol and jacobian_fd_step must be positive")


@dataclass(frozen=True)
class InitStrategy:
    """How to choose the starting theta of one optimizer run.

    ``theta`` is only used by the ``Explicit`` kind (warm starts, e.g. from a
    lower-order solution).
    """

    kind: str
    scale: float = 0.0
    seed: int = 0
    theta: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise InvalidArgument(f"unknown init kind {self.kind!r}")
        if self.kind in ("PerturbedYuleWalker", "ParcorRandom", "GaussianTheta") and not self.scale > 0:
            raise InvalidArgument(f"{self.kind} needs a positive scale")
        if self.kind == "ParcorRandom" and not self.scale < 1:
            raise InvalidArgument("ParcorRandom scale must be < 1")
        if self.kind == "Explicit" and self.theta is None:
            raise InvalidArgument("Explicit init needs theta")

    def to_dict(self):
        d = {"kind": self.kind, "scale": self.scale, "seed": self.seed}
        if self.theta is not None:
            d["theta"] = list(self.theta)
        return d


def default_portfolio(root_seed: int = 0) -> List[InitStrategy]:
    """1 Yule-Walker, 3 perturbed YW (0.2), 3 PARCOR-uniform (0.7), 3 Gaussian theta (0.5)."""
    kinds = (
        [("YuleWalker", 0.0)]
        + [("PerturbedYuleWalker", 0.2)] * 3
        + [("ParcorRandom", 0.7)] * 3
        + [("GaussianTheta", 0.5)] * 3
    )
    return [InitStrategy(k, s, child_seed(root_seed, i)) for i, (k, s) in enumerate(kinds)]


@dataclass(eq=False)
class FitResult:
    theta: np.ndarray
    model: ArModel
    psd: Psd
    objective: float
    trace: list
    init: Optional[InitStrategy] = None
    stalled: bool = False
    converged: bool = False
    iterates_stable: bool = True

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "theta": self.theta.tolist(),
            "a": self.model.a.tolist(),
            "sigma2": self.model.sigma2,
            "kappa": self.model.kappa.tolist(),
            "objective": self.objective,
            "stalled": self.stalled,
            "converged": self.converged,
            "init": None if self.init is None else self.init.to_dict(),
            "trace": [
                {"iter": it, "objective": obj, "grad_norm": gn, "step": st}
                for it, obj, gn, st in self.trace
            ],
        }


@dataclass(eq=False)
class MultiStartReport:
    runs: List[FitResult]
    best: int
    free_barycenter_objective: float
    suboptimality_gap: float
    barycenter: Optional[Psd] = None
    yw_objective: Optional[float] = None
    failures: list = field(default_factory=list)

    @property
    def best_fit(self) -> FitResult:
        return self.runs[self.best]

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "best": self.best,
            "best_objective": self.best_fit.objective,
            "free_barycenter_objective": self.free_barycenter_objective,
            "suboptimality_gap": self.suboptimality_gap,
            "yw_objective": self.yw_objective,
            "failures": self.failures,
            "runs": [r.to_dict() for r in self.runs],
        }


def _unit_targets(psds: Sequence[Psd]) -> List[Psd]:
    return [p if p.normalized else normalize(p) for p in psds]


def yw_initialize_from_barycenter(barycenter: Psd, order: int) -> np.ndarray:
    r = acov_from_psd(barycenter, order)
    _, kappa, err = levinson_durbin(r, order)
    return kappa_to_theta(kappa, gain=np.log(err))


def yw_initialize(psds: Sequence[Psd], order: int, cost, config: SinkhornConfig = SinkhornConfig()) -> np.ndarray:
    """Theta from Yule-Walker on the autocovariance of the free barycenter."""
    if order < 1:
        raise InvalidArgument("order must be >= 1")
    bary = free_barycenter(_unit_targets(psds), cost, config)
    return yw_initialize_from_barycenter(bary, order)


def _jacobian(theta: np.ndarray, grid, step: float) -> np.ndarray:
    P = len(theta) - 1
    J = np.empty((grid.n_bins, P))
    for j in range(P):
        e = np.zeros_like(theta)
        e[j + 1] = step
        J[:, j] = (normalized_ar_shape(theta + e, grid) - normalized_ar_shape(theta - e, grid)) / (2 * step)
    return J


def objective_and_gradient(theta, psds: Sequence[Psd], cost, config: OptimizerConfig, warm_start=None):
    """J(theta) and its gradient; the gain component of the gradient is zero.

    The OT gradient with respect to the model PSD is held fixed at the
    converged potentials and pulled back through a central-difference
    Jacobian of theta -> unit-mass AR spectrum.
    """
    theta = np.asarray(theta, dtype=float)
    grid = cost.grid
    center = normalized_ar_shape(theta, grid)
    value, h = barycenter_objective(center, psds, cost, config.sinkhorn, warm_start=warm_start)
    grad = np.zeros_like(theta)
    if len(theta) > 1:
        grad[1:] = _jacobian(theta, grid, config.jacobian_fd_step).T @ h
    return value, grad


def objective(theta, psds: Sequence[Psd], cost, config: SinkhornConfig, warm_start=None) -> float:
    center = normalized_ar_shape(np.asarray(theta, dtype=float), cost.grid)
    return barycenter_objective(center, psds, cost, config, warm_start=warm_start)[0]


def fit(theta0, psds: Sequence[Psd], cost, config: OptimizerConfig, init: Optional[InitStrategy] = None) -> FitResult:
    """Gradient descent with Armijo backtracking from ``theta0``."""
    targets = _unit_targets(psds)
    theta = np.array(theta0, dtype=float)
    if theta.shape != (config.model_order + 1,):
        raise InvalidArgument(f"theta0 must have length {config.model_order + 1}")
    warm = [None] * len(targets)
    value, grad = objective_and_gradient(theta, targets, cost, config, warm)
    gnorm = float(np.linalg.norm(grad))
    trace = [(0, value, gnorm, 0.0)]
    stalled = converged = False
    stable = theta_to_model(theta, 1.0, cost.grid)[0].is_stable()
    for it in range(1, config.max_outer_iters + 1):
        if gnorm <= config.grad_tol:
            converged = True
            break
        step = config.step_init
        accepted = False
        for _ in range(config.max_backtracks):
            cand = theta - step * grad
            trial_warm = list(warm)
            try:
                c_value, c_grad = objective_and_gradient(cand, targets, cost, config, trial_warm)
            except ArbaryError:
                step *= config.armijo_shrink
                continue
            if c_value <= value - config.armijo_c1 * step * gnorm**2:
                accepted = True
                break
            step *= config.armijo_shrink
        if not accepted:
            stalled = True
            break
        theta, value, grad, warm = cand, c_value, c_grad, trial_warm
        gnorm = float(np.linalg.norm(grad))
        stable = stable and theta_to_model(theta, 1.0, cost.grid)[0].is_stable()
        trace.append((it, value, gnorm, step))
    else:
        converged = gnorm <= config.grad_tol
    model, psd = theta_to_model(theta, 1.0, cost.grid)
    theta = theta.copy()
    theta[0] = np.log(model.sigma2)
    log.debug("fit done: J=%.10g iters=%d stalled=%s", value, len(trace) - 1, stalled)
    return FitResult(theta, model, psd, value, trace, init, stalled, converged, stable)


def initial_theta(strategy: InitStrategy, order: int, theta_yw: Optional[np.ndarray]) -> np.ndarray:
    rng = np.random.default_rng(strategy.seed)
    if strategy.kind == "YuleWalker":
        return theta_yw.copy()
    if strategy.kind == "PerturbedYuleWalker":
        theta = theta_yw.copy()
        theta[1:] += rng.normal(0.0, strategy.scale, order)
        return theta
    if strategy.kind == "ParcorRandom":
        return kappa_to_theta(rng.uniform(-strategy.scale, strategy.scale, order))
    if strategy.kind == "GaussianTheta":
        return np.concatenate([[0.0], rng.normal(0.0, strategy.scale, order)])
    theta = np.asarray(strategy.theta, dtype=float)
    if len(theta) < order + 1:
        theta = np.concatenate([theta, np.zeros(order + 1 - len(theta))])
    return theta[: order + 1].copy()


def multi_start_fit(
    psds: Sequence[Psd],
    strategies: Sequence[InitStrategy],
    cost,
    config: OptimizerConfig,
    barycenter: Optional[Psd] = None,
) -> MultiStartReport:
    """Fit from every strategy and keep the lowest objective (ties: first strategy).

    The suboptimality gap is measured against the objective of the free
    (unconstrained) entropic barycenter, a lower bound for every AR(P) fit.
    Reported models carry the mean total mass of the raw input set as gain.
    """
    if not strategies:
        raise InvalidArgument("no initialization strategies given")
    mass_scale = float(np.mean([p.total for p in psds]))
    targets = _unit_targets(psds)
    if barycenter is None:
        barycenter = free_barycenter(targets, cost, config.sinkhorn)
    bc_value = barycenter_objective(barycenter, targets, cost, config.sinkhorn)[0]
    P = config.model_order
    theta_yw = yw_initialize_from_barycenter(barycenter, P) if P > 0 else np.zeros(1)

    runs, failures = [], []
    yw_value = None
    for idx, strategy in enumerate(strategies):
        try:
            res = fit(initial_theta(strategy, P, theta_yw), targets, cost, config, init=strategy)
        except ArbaryError as exc:
            failures.append({"index": idx, "init": strategy.to_dict(), "error": str(exc)})
            continue
        if strategy.kind == "YuleWalker" and yw_value is None:
            yw_value = res.trace[0][1]
        res.model = ArModel(res.model.a, res.model.sigma2 * mass_scale)
        res.theta[0] = np.log(res.model.sigma2)
        runs.append(res)
    if not runs:
        raise ArbaryError("all multi-start runs failed: " + "; ".join(f["error"] for f in failures))
    objectives = [r.objective for r in runs]
    best = int(np.argmin(objectives))
    return MultiStartReport(
        runs=runs,
        best=best,
        free_barycenter_objective=bc_value,
        suboptimality_gap=objectives[best] - bc_value,
        barycenter=barycenter,
        yw_objective=yw_value,
        failures=failures,
    )


@dataclass
class SweepRow:
    order: int
    cost_otbc: float
    cost_ywinit: float
    cost_otp: float
    report: MultiStartReport


def order_sweep(
    psds: Sequence[Psd],
    orders: Sequence[int],
    cost,
    config: OptimizerConfig,
    strategies: Optional[Sequence[InitStrategy]] = None,
    nested: bool = True,
) -> List[SweepRow]:
    """Best AR(P) objective per order, with the free-barycenter and YW-start costs.

    Orders are processed in increasing order. With ``nested`` the best
    solution at the previous order, padded with a zero reflection
    coefficient, joins the portfolio; since AR(P) spectra are contained in
    AR(P+1), the best objective is then non-increasing in P.
    """
    if not orders:
        raise InvalidArgument("orders must be nonempty")
    targets = _unit_targets(psds)
    barycenter = free_barycenter(targets, cost, config.sinkhorn)
    strategies = list(strategies) if strategies is not None else default_portfolio()
    rows: List[SweepRow] = []
    prev_theta = None
    for P in sorted(set(int(o) for o in orders)):
        cfg = _with_order(config, P)
        portfolio = list(strategies)
        if nested and prev_theta is not None:
            portfolio.append(InitStrategy("Explicit", theta=tuple(prev_theta)))
        report = multi_start_fit(targets, portfolio, cost, cfg, barycenter=barycenter)
        yw = report.yw_objective
        if yw is None:
            yw = objective(yw_initialize_from_barycenter(barycenter, P), targets, cost, cfg.sinkhorn)
        rows.append(SweepRow(P, report.free_barycenter_objective, yw, report.best_fit.objective, report))
        prev_theta = report.best_fit.theta
        log.info("order %d: otbc=%.8g yw=%.8g otp=%.8g", P, rows[-1].cost_otbc, yw, rows[-1].cost_otp)
    return rows


def _with_order(config: OptimizerConfig, order: int) -> OptimizerConfig:
    return replace(config, model_order=order)
