"""File formats: PSD CSV, labeled-set JSON, plot-data CSV and plan export.

Floats are written with ``repr`` (shortest round-trip decimal), so every
file parses back to the identical doubles.
"""

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import LabeledPsdSet, MetricsReport
from .errors import InvalidArgument
from .spectral import Psd, make_grid, normalize


def _fmt(x) -> str:
    return repr(float(x))


def mirror_one_sided(mass_half: Sequence[float]) -> np.ndarray:
    """Map M samples on [0, pi] to the full-circle grid of N = 2(M - 1) bins.

    DC and Nyquist keep their mass; every interior bin is split evenly
    between +w and -w, so the total mass is unchanged.
    """
    half = np.asarray(mass_half, dtype=float)
    M = len(half)
    if M < 2:
        raise InvalidArgument("a one-sided PSD needs at least 2 samples")
    N = 2 * (M - 1)
    full = np.zeros(N)
    mid = N // 2
    full[mid] = half[0]
    full[0] = half[-1]
    for m in range(1, M - 1):
        full[mid + m] = 0.5 * half[m]
        full[mid - m] = 0.5 * half[m]
    return full


def write_psd_csv(psd: Psd, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("omega,mass\n")
        for w, m in zip(psd.grid.points, psd.mass):
            fh.write(f"{_fmt(w)},{_fmt(m)}\n")


def read_psd_csv(path) -> Psd:
    """Read ``omega,mass`` rows on either the full [-pi, pi) grid or a one-sided [0, pi] grid."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["omega", "mass"]:
            raise InvalidArgument(f"{path}: expected header 'omega,mass'")
        try:
            rows = [(float(a), float(b)) for a, b in reader if a.strip()]
        except ValueError as exc:
            raise InvalidArgument(f"{path}: malformed row ({exc})") from None
    if len(rows) < 2:
        raise InvalidArgument(f"{path}: need at least two rows")
    omega, mass = map(np.array, zip(*rows))
    grid = make_grid(len(omega))
    if np.allclose(omega, grid.points, atol=1e-9):
        return Psd(grid, mass)
    M = len(omega)
    if np.allclose(omega, np.linspace(0.0, np.pi, M), atol=1e-9):
        full = mirror_one_sided(mass)
        return Psd(make_grid(len(full)), full)
    raise InvalidArgument(f"{path}: omega column is neither a [-pi, pi) nor a [0, pi] uniform grid")


def set_to_dict(data: LabeledPsdSet) -> dict:
    return {
        "n_bins": data.grid.n_bins,
        "classes": list(data.classes),
        "labels": list(data.labels),
        "psds": [[float(x) for x in p.mass] for p in data.psds],
    }


def set_from_dict(doc: dict) -> LabeledPsdSet:
    try:
        n_bins = int(doc["n_bins"])
        rows = doc["psds"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"PSD set document is missing n_bins/psds: {exc}") from None
    labels = doc.get("labels") or [""] * len(rows)
    if doc.get("one_sided"):
        rows = [mirror_one_sided(r) for r in rows]
    psds = []
    for i, row in enumerate(rows):
        row = np.asarray(row, dtype=float)
        if len(row) != n_bins:
            raise InvalidArgument(f"PSD {i} has {len(row)} bins, expected {n_bins}")
        if abs(row.sum() - 1.0) <= 1e-12:
            psds.append(Psd(make_grid(n_bins), row, normalized=True))
        else:
            psds.append(normalize(Psd(make_grid(n_bins), row)))
    return LabeledPsdSet(psds, labels, doc.get("classes") or [])


def write_set_json(data: LabeledPsdSet, path) -> None:
    Path(path).write_text(json.dumps(set_to_dict(data)) + "\n")


def read_set_json(path) -> LabeledPsdSet:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: invalid JSON ({exc})") from None
    return set_from_dict(doc)


def write_columns_csv(path, header: Sequence[str], columns: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def read_columns_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {h: [] for h in header}
        try:
            for row in reader:
                for h, v in zip(header, row):
                    cols[h].append(float(v))
        except ValueError as exc:
            raise InvalidArgument(f"{path}: malformed row ({exc})") from None
    return {h: np.array(v) for h, v in cols.items()}


def write_plan_csv(plan: np.ndarray, epsilon: float, path) -> None:
    plan = np.asarray(plan, dtype=float)
    N = plan.shape[0]
    if plan.shape != (N, N) or N > 64:
        raise InvalidArgument("plan export supports square plans with N <= 64")
    with open(path, "w", newline="") as fh:
        fh.write(f"# plan N={N} eps={_fmt(epsilon)}\n")
        for row in plan:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_plan_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# plan N="):
            raise InvalidArgument(f"{path}: missing plan header")
        parts = dict(tok.split("=") for tok in header[2:].split()[1:])
        plan = np.array([[float(x) for x in line.split(",")] for line in fh if line.strip()])
    return plan, float(parts["eps"])


def write_confusion_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("true\\pred," + ",".join(report.classes) + "\n")
        for cls, row in zip(report.classes, report.confusion):
            fh.write(cls + "," + ",".join(str(int(v)) for v in row) + "\n")


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")
