"""Run configuration: flat ``key = value`` text files with validation."""

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List

from .centroid import InitStrategy, OptimizerConfig
from .errors import InvalidArgument
from .ot import SinkhornConfig
from .seeds import child_seed

# key -> description; also the source of the CLI help epilog
KEY_HELP: Dict[str, str] = {
    "n_bins": "frequency grid size N on [-pi, pi) (int >= 2)",
    "epsilon": "entropic regularization (> 0)",
    "sinkhorn_tol": "Sinkhorn stop threshold on the L1 marginal violation (> 0)",
    "sinkhorn_max_iters": "Sinkhorn iteration cap (>= 1)",
    "sinkhorn_method": "Sinkhorn engine: stabilized or lse",
    "model_order": "AR model order P for OT-P fits (>= 1)",
    "max_outer_iters": "gradient-descent iteration cap per start (>= 1)",
    "armijo_c1": "Armijo sufficient-decrease constant in (0, 1)",
    "armijo_shrink": "backtracking step shrink factor in (0, 1)",
    "step_init": "initial step length per iteration (> 0)",
    "grad_tol": "stop when the gradient norm falls below this (> 0)",
    "jacobian_fd_step": "finite-difference step for the theta Jacobian (> 0)",
    "max_backtracks": "backtracking steps before a run is declared stalled (>= 1)",
    "n_yule_walker": "Yule-Walker starts in the portfolio (0 or 1)",
    "n_perturbed": "perturbed Yule-Walker starts (>= 0)",
    "perturbed_scale": "std of the theta perturbation for perturbed starts (> 0)",
    "n_parcor": "uniform random reflection-coefficient starts (>= 0)",
    "parcor_scale": "reflection coefficients drawn from U(-s, s), s in (0, 1)",
    "n_gaussian": "Gaussian theta starts (>= 0)",
    "gaussian_scale": "std of Gaussian theta starts (> 0)",
    "seed": "root seed; child seeds are derived per stream (int >= 0)",
    "samples_per_class": "synth: PSDs per class (>= 1)",
    "signal_length": "synth: simulated samples per PSD (> burg_order)",
    "jitter": "synth: pole-angle standard deviation in radians (>= 0)",
    "shared_jitter": "synth: one angle offset per sample for all resonances (true/false)",
    "burg_order": "synth: Burg estimation order (>= 1)",
    "n_targets": "synth --kind ar: number of AR targets (>= 1)",
    "target_order": "synth --kind ar: order of the AR targets (>= 1)",
    "direction": "divergence argument order for IS/KL/L2: test||centroid or centroid||test",
    "out_dir": "output directory",
}


@dataclass(frozen=True)
class RunConfig:
    n_bins: int = 128
    epsilon: float = 0.07
    sinkhorn_tol: float = 1e-9
    sinkhorn_max_iters: int = 10000
    sinkhorn_method: str = "stabilized"
    model_order: int = 10
    max_outer_iters: int = 500
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    step_init: float = 1.0
    grad_tol: float = 1e-6
    jacobian_fd_step: float = 1e-6
    max_backtracks: int = 50
    n_yule_walker: int = 1
    n_perturbed: int = 3
    perturbed_scale: float = 0.2
    n_parcor: int = 3
    parcor_scale: float = 0.7
    n_gaussian: int = 3
    gaussian_scale: float = 0.5
    seed: int = 0
    samples_per_class: int = 50
    signal_length: int = 4000
    jitter: float = 0.1
    shared_jitter: bool = True
    burg_order: int = 10
    n_targets: int = 4
    target_order: int = 10
    direction: str = "test||centroid"
    out_dir: str = "."

    def __post_init__(self):
        def need(cond, key):
            if not cond:
                raise InvalidArgument(f"config key {key} = {getattr(self, key)!r} out of range: {KEY_HELP[key]}")

        need(self.n_bins >= 2, "n_bins")
        need(self.epsilon > 0, "epsilon")
        need(self.sinkhorn_tol > 0, "sinkhorn_tol")
        need(self.sinkhorn_max_iters >= 1, "sinkhorn_max_iters")
        need(self.sinkhorn_method in ("stabilized", "lse"), "sinkhorn_method")
        need(self.model_order >= 1, "model_order")
        need(self.max_outer_iters >= 1, "max_outer_iters")
        need(0 < self.armijo_c1 < 1, "armijo_c1")
        need(0 < self.armijo_shrink < 1, "armijo_shrink")
        need(self.step_init > 0, "step_init")
        need(self.grad_tol > 0, "grad_tol")
        need(self.jacobian_fd_step > 0, "jacobian_fd_step")
        need(self.max_backtracks >= 1, "max_backtracks")
        need(self.n_yule_walker in (0, 1), "n_yule_walker")
        for key in ("n_perturbed", "n_parcor", "n_gaussian"):
            need(getattr(self, key) >= 0, key)
        need(self.n_yule_walker + self.n_perturbed + self.n_parcor + self.n_gaussian >= 1, "n_yule_walker")
        need(self.perturbed_scale > 0, "perturbed_scale")
        need(0 < self.parcor_scale < 1, "parcor_scale")
        need(self.gaussian_scale > 0, "gaussian_scale")
        need(self.seed >= 0, "seed")
        need(self.samples_per_class >= 1, "samples_per_class")
        need(self.burg_order >= 1, "burg_order")
        need(self.signal_length > self.burg_order, "signal_length")
        need(self.jitter >= 0, "jitter")
        need(self.n_targets >= 1, "n_targets")
        need(self.target_order >= 1, "target_order")
        need(self.direction in ("test||centroid", "centroid||test"), "direction")

    def sinkhorn(self) -> SinkhornConfig:
        return SinkhornConfig(self.epsilon, self.sinkhorn_max_iters, self.sinkhorn_tol, self.sinkhorn_method)

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            model_order=self.model_order,
            sinkhorn=self.sinkhorn(),
            max_outer_iters=self.max_outer_iters,
            armijo_c1=self.armijo_c1,
            armijo_shrink=self.armijo_shrink,
            step_init=self.step_init,
            grad_tol=self.grad_tol,
            jacobian_fd_step=self.jacobian_fd_step,
            max_backtracks=self.max_backtracks,
        )

    def portfolio(self) -> List[InitStrategy]:
        """Strategies in fixed order; stream i of the root seed seeds strategy i."""
        kinds = (
            [("YuleWalker", 0.0)] * self.n_yule_walker
            + [("PerturbedYuleWalker", self.perturbed_scale)] * self.n_perturbed
            + [("ParcorRandom", self.parcor_scale)] * self.n_parcor
            + [("GaussianTheta", self.gaussian_scale)] * self.n_gaussian
        )
        return [InitStrategy(k, s, child_seed(self.seed, i)) for i, (k, s) in enumerate(kinds)]

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_render(getattr(self, f.name))}\n" for f in fields(self))


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    return repr(value)


def _coerce(key: str, raw: str, target_type):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    try:
        if target_type is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if target_type is int:
            try:
                return int(raw)
            except ValueError:
                as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError(raw)
            return int(as_float)
        if target_type is float:
            return float(raw)
        return raw
    except (ValueError, OverflowError):
        raise InvalidArgument(f"config key {key}: cannot parse {raw!r} as {target_type.__name__}") from None


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_overrides(pairs: Dict[str, str], base: RunConfig = RunConfig()) -> RunConfig:
    unknown = sorted(set(pairs) - set(_TYPES))
    if unknown:
        raise InvalidArgument(f"unknown config key(s): {', '.join(unknown)}")
    values = {k: _coerce(k, v, _TYPES[k]) for k, v in pairs.items()}
    return replace(base, **values)


def parse_text(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    """Parse ``key = value`` lines. ``#`` starts a comment; blank lines and
    ``[section]`` headers are ignored; repeated keys are an error."""
    pairs: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise InvalidArgument(f"config line {lineno}: duplicate key {key}")
        pairs[key] = value
    return parse_overrides(pairs, base)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text)
