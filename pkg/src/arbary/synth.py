"""Synthetic labeled PSD sets: phoneme-like AR classes with jittered resonances."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ar import ArModel, ar_to_psd, burg_estimate, poles_to_ar, simulate_ar
from .classify import LabeledPsdSet
from .errors import ArbaryError, InvalidArgument
from .seeds import child_seed
from .spectral import make_grid, normalize

# (angle, radius) pole pairs; angles are resonance frequencies in rad/sample
# at a nominal 16 kHz rate, loosely shaped after /s/, /iy/, /ae/, /ih/, /n/.
DEFAULT_TEMPLATES = {
    "s": [(2.40, 0.90), (2.90, 0.85)],
    "iy": [(0.20, 0.98), (1.10, 0.98)],
    "ae": [(0.42, 0.98), (0.80, 0.98)],
    "ih": [(0.30, 0.98), (0.95, 0.98)],
    "n": [(0.12, 0.98), (1.45, 0.95)],
}


@dataclass(frozen=True)
class SynthSpec:
    templates: Tuple = tuple((k, tuple(v)) for k, v in DEFAULT_TEMPLATES.items())
    jitter: float = 0.1
    samples_per_class: int = 50
    signal_length: int = 4000
    burg_order: int = 10
    n_bins: int = 128
    seed: int = 0
    max_redraws: int = 100
    shared_jitter: bool = True

    def __post_init__(self):
        if self.jitter < 0:
            raise InvalidArgument("jitter must be nonnegative")
        if self.samples_per_class < 1 or self.signal_length <= self.burg_order:
            raise InvalidArgument("need samples_per_class >= 1 and signal_length > burg_order")
        for name, poles in self.templates:
            for angle, radius in poles:
                if not 0 < radius < 1:
                    raise InvalidArgument(f"class {name}: pole radius {radius} not in (0, 1)")
                if not -np.pi <= angle < np.pi:
                    raise InvalidArgument(f"class {name}: pole angle {angle} not in [-pi, pi)")

    @property
    def n_classes(self) -> int:
        return len(self.templates)


def templates_from_dict(d) -> Tuple:
    return tuple((str(k), tuple((float(a), float(r)) for a, r in v)) for k, v in d.items())


def _jittered_poles(template, jitter, rng, max_redraws, shared=False):
    """Perturb pole angles by N(0, jitter^2), redrawing angles that leave (0, pi).

    With ``shared`` one offset moves every resonance of the sample together.
    """
    for _ in range(max_redraws):
        if shared:
            offsets = np.full(len(template), rng.normal(0.0, jitter) if jitter > 0 else 0.0)
        else:
            offsets = rng.normal(0.0, jitter, len(template)) if jitter > 0 else np.zeros(len(template))
        angles = [a + d if a != 0 else 0.0 for (a, _), d in zip(template, offsets)]
        if all(a == 0 or 0 < a < np.pi for a in angles):
            break
    else:
        raise ArbaryError(f"could not draw valid pole angles in {max_redraws} tries")
    return [r * np.exp(1j * a) if a != 0 else complex(r) for a, (_, r) in zip(angles, template)]


def synth_classes(spec: SynthSpec) -> LabeledPsdSet:
    """Simulate, Burg-estimate and normalize ``samples_per_class`` PSDs per class."""
    grid = make_grid(spec.n_bins)
    psds, labels = [], []
    stream = 0
    for name, template in spec.templates:
        for _ in range(spec.samples_per_class):
            rng = np.random.default_rng(child_seed(spec.seed, 2 * stream))
            poles = _jittered_poles(template, spec.jitter, rng, spec.max_redraws, spec.shared_jitter)
            model = ArModel(poles_to_ar(poles), 1.0)
            x = simulate_ar(model, spec.signal_length, child_seed(spec.seed, 2 * stream + 1))
            est = burg_estimate(x, spec.burg_order)
            psds.append(normalize(ar_to_psd(est, grid)))
            labels.append(name)
            stream += 1
    return LabeledPsdSet(psds, labels, [name for name, _ in spec.templates])


def synth_ar_targets(
    n_targets: int = 4,
    order: int = 10,
    n_bins: int = 128,
    seed: int = 0,
    radius_range: Sequence[float] = (0.75, 0.95),
) -> LabeledPsdSet:
    """Exact spectra of random stable AR(order) models with distinct resonances."""
    grid = make_grid(n_bins)
    rng = np.random.default_rng(seed)
    psds = []
    n_pairs, real_pole = divmod(order, 2)
    for _ in range(n_targets):
        angles = np.sort(rng.uniform(0.15, np.pi - 0.15, n_pairs))
        radii = rng.uniform(*radius_range, n_pairs)
        poles: List[complex] = [r * np.exp(1j * a) for r, a in zip(radii, angles)]
        if real_pole:
            poles.append(complex(rng.uniform(-0.5, 0.5)))
        psds.append(normalize(ar_to_psd(ArModel(poles_to_ar(poles), 1.0), grid)))
    return LabeledPsdSet(psds, [f"ar{k}" for k in range(n_targets)])
