"""All-pole models: reflection-coefficient conversions, estimators and spectra.

Sign convention throughout: A(z) = 1 + sum_p a_p z^-p, so the process obeys
x(t) = -sum_p a_p x(t-p) + e(t). The Levinson step-up appends kappa_m as the
new last coefficient, a_i <- a_i + kappa_m * a_{m-i}.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DegenerateInput, InstabilityError, InvalidArgument
from .spectral import FrequencyGrid, Psd

# |kappa| is capped here wherever it comes from a map that can saturate
# (tanh in floating point, Burg on degenerate data)
BURG_KAPPA_MAX = 1.0 - 1e-8
THETA_KAPPA_MAX = 1.0 - 1e-6


@dataclass(frozen=True, eq=False)
class ArModel:
    a: np.ndarray
    sigma2: float

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        if not self.sigma2 > 0:
            raise InvalidArgument(f"sigma2 must be positive, got {self.sigma2!r}")
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def order(self) -> int:
        return len(self.a)

    @property
    def kappa(self) -> np.ndarray:
        return ar_to_parcor(self.a)

    def is_stable(self) -> bool:
        return is_stable(self.a)


def parcor_to_ar(kappa) -> np.ndarray:
    """Levinson step-up recursion: reflection coefficients to AR coefficients.

    The result is in ``np.longdouble``. The step-down inverse is badly
    conditioned for long resonant models, and float64 coefficients alone
    can lose the reflection coefficients to ~1e-7 at P = 20.
    """
    kappa = np.asarray(kappa, dtype=float).reshape(-1)
    bad = np.flatnonzero(~(np.abs(kappa) < 1.0))
    if bad.size:
        m = int(bad[0]) + 1
        raise InstabilityError(f"|kappa_{m}| = {abs(kappa[m - 1])} >= 1", stage=m)
    a = np.zeros(0, dtype=np.longdouble)
    for k in kappa.astype(np.longdouble):
        a = np.concatenate([a + k * a[::-1], [k]])
    return a


def ar_to_parcor(a) -> np.ndarray:
    """Step-down recursion: AR coefficients to reflection coefficients.

    Raises InstabilityError at the first stage (counting down from P) whose
    reflection coefficient has magnitude >= 1.
    """
    a = np.asarray(a).reshape(-1).astype(np.longdouble)
    P = len(a)
    kappa = np.zeros(P)
    for m in range(P, 0, -1):
        k = a[m - 1]
        if not abs(k) < 1.0:
            raise InstabilityError(f"step-down stage {m}: |kappa| = {abs(k)} >= 1", stage=m)
        kappa[m - 1] = k
        prev = a[: m - 1]
        a = (prev - k * prev[::-1]) / (1.0 - k * k)
    return kappa


def is_stable(a) -> bool:
    try:
        ar_to_parcor(a)
    except InstabilityError:
        return False
    return True


def _abs2_A(a: np.ndarray, omega: np.ndarray) -> np.ndarray:
    p = np.arange(1, len(a) + 1)
    A = 1.0 + np.exp(-1j * np.outer(omega, p)) @ np.asarray(a, dtype=float)
    return A.real**2 + A.imag**2


def _shape(a: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """1/|A(e^{jw})|^2 on the given frequencies."""
    return 1.0 / _abs2_A(a, omega)


def _log_shape(a: np.ndarray, omega: np.ndarray) -> np.ndarray:
    # floored so a pole that rounds onto a grid point stays finite
    return -np.log(np.maximum(_abs2_A(a, omega), np.finfo(float).tiny))


def _unit_shape(a: np.ndarray, omega: np.ndarray):
    """(unit-mass spectrum, log of the unnormalized total) without overflow."""
    ls = _log_shape(a, omega)
    top = ls.max()
    w = np.exp(ls - top)
    total = w.sum()
    return w / total, top + np.log(total)


def ar_to_psd(model: ArModel, grid: FrequencyGrid) -> Psd:
    if not model.is_stable():
        raise InstabilityError("cannot evaluate the spectrum of an unstable model")
    return Psd(grid, model.sigma2 * _shape(model.a, grid.points))


def theta_to_kappa(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    return np.clip(np.tanh(theta[1:]), -THETA_KAPPA_MAX, THETA_KAPPA_MAX)


def kappa_to_theta(kappa, gain: float = 0.0) -> np.ndarray:
    """Inverse of the shape part of :func:`theta_to_model`; ``gain`` fills slot 0."""
    kappa = np.clip(np.asarray(kappa, dtype=float), -THETA_KAPPA_MAX, THETA_KAPPA_MAX)
    return np.concatenate([[gain], np.arctanh(kappa)])


def theta_to_model(theta, target_mass: float, grid: FrequencyGrid):
    """Map an unconstrained parameter vector to a stable AR model and its PSD.

    theta[1:] pass through tanh to reflection coefficients. The gain slot
    theta[0] is ignored: sigma2 is always chosen so that the PSD sums to
    ``target_mass`` on the grid.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size < 1 or not np.all(np.isfinite(theta)):
        raise InvalidArgument("theta must be a nonempty finite vector")
    if not target_mass > 0:
        raise InvalidArgument("target_mass must be positive")
    a = parcor_to_ar(theta_to_kappa(theta))
    unit, log_total = _unit_shape(a, grid.points)
    sigma2 = max(float(target_mass * np.exp(-log_total)), np.finfo(float).tiny)
    if target_mass == 1.0:
        return ArModel(a, sigma2), Psd(grid, unit, normalized=True)
    return ArModel(a, sigma2), Psd(grid, target_mass * unit)


def normalized_ar_shape(theta, grid: FrequencyGrid) -> np.ndarray:
    """Unit-mass PSD vector of theta; the map differentiated by the optimizer."""
    return _unit_shape(parcor_to_ar(theta_to_kappa(theta)), grid.points)[0]


def levinson_durbin(r, order: int):
    """Solve the order-P Yule-Walker system. Returns (a, kappa, prediction error)."""
    r = np.asarray(r, dtype=float).reshape(-1)
    if len(r) < order + 1:
        raise InvalidArgument(f"need {order + 1} autocovariance lags, got {len(r)}")
    if not r[0] > 0:
        raise DegenerateInput("r(0) must be positive")
    a = np.zeros(0)
    kappa = np.zeros(order)
    err = r[0]
    for m in range(1, order + 1):
        acc = r[m] + np.dot(a, r[m - 1 : 0 : -1])
        k = -acc / err
        if abs(k) >= 1.0 - 1e-10:
            raise DegenerateInput(f"Toeplitz system singular at stage {m} (|kappa| = {abs(k)})")
        kappa[m - 1] = k
        a = np.concatenate([a + k * a[::-1], [k]])
        err *= 1.0 - k * k
    return a, kappa, err


def yule_walker(r, order: int) -> ArModel:
    a, _, err = levinson_durbin(r, order)
    return ArModel(a, err)


def burg_estimate(signal, order: int) -> ArModel:
    x = np.asarray(signal, dtype=float).reshape(-1)
    if len(x) < order + 1:
        raise InvalidArgument(f"signal of length {len(x)} is too short for order {order}")
    err = np.dot(x, x) / len(x)
    if not err > 0:
        raise DegenerateInput("all-zero signal")
    f = x.copy()
    b = x.copy()
    a = np.zeros(0)
    for _ in range(order):
        fm = f[1:]
        bm = b[:-1]
        den = np.dot(fm, fm) + np.dot(bm, bm)
        k = -2.0 * np.dot(fm, bm) / den if den > 0 else 0.0
        k = float(np.clip(k, -BURG_KAPPA_MAX, BURG_KAPPA_MAX))
        a = np.concatenate([a + k * a[::-1], [k]])
        f, b = fm + k * bm, bm + k * fm
        err *= 1.0 - k * k
    return ArModel(a, max(err, np.finfo(float).tiny))


def acov_from_psd(psd: Psd, max_lag: int) -> np.ndarray:
    """Autocovariance lags 0..max_lag, treating the mass as a distribution over grid frequencies."""
    N = psd.grid.n_bins
    if max_lag < 0 or 2 * max_lag >= N:
        raise InvalidArgument(f"max_lag must satisfy 0 <= max_lag < N/2 = {N / 2}")
    if not psd.mass.sum() > 0:
        raise DegenerateInput("PSD has zero total mass")
    k = np.arange(max_lag + 1)
    return np.cos(np.outer(k, psd.grid.points)) @ psd.mass


def simulate_ar(model: ArModel, n_samples: int, seed: int) -> np.ndarray:
    if not model.is_stable():
        raise InstabilityError("cannot simulate an unstable model")
    if n_samples <= 0:
        raise InvalidArgument("n_samples must be positive")
    burn = 10 * model.order
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, np.sqrt(model.sigma2), n_samples + burn)
    x = lfilter([1.0], np.concatenate([[1.0], model.a]), e)
    return x[burn:]


def poles_to_ar(poles) -> np.ndarray:
    """Real AR coefficients for a set of poles; complex poles get their conjugates added."""
    roots = []
    for p in np.atleast_1d(poles):
        roots.append(p)
        if abs(np.imag(p)) > 0:
            roots.append(np.conj(p))
    return np.real(np.poly(roots))[1:] if roots else np.zeros(0)
