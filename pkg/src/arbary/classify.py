"""Nearest-centroid classification of PSDs and the evaluation metric suite."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .ar import ArModel
from .centroid import OptimizerConfig, default_portfolio, multi_start_fit
from .errors import InvalidArgument
from .ot import SinkhornConfig, free_barycenter, sinkhorn
from .spectral import Psd, arithmetic_mean_centroid, baseline_distance, build_cost, normalize

METHODS = ("IS", "KL", "L2", "OT-BC", "OT-P")
BASELINES = ("IS", "KL", "L2")
DIRECTIONS = ("test||centroid", "centroid||test")


@dataclass
class LabeledPsdSet:
    psds: List[Psd]
    labels: List[str]
    classes: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.labels = [str(lab) for lab in self.labels]
        if len(self.psds) != len(self.labels):
            raise InvalidArgument(f"{len(self.psds)} PSDs but {len(self.labels)} labels")
        if not self.classes:
            self.classes = list(dict.fromkeys(self.labels))
        self.classes = [str(c) for c in self.classes]
        missing = set(self.labels) - set(self.classes)
        if missing:
            raise InvalidArgument(f"labels not in class list: {sorted(missing)}")
        self.psds = [p if p.normalized else normalize(p) for p in self.psds]

    def __len__(self):
        return len(self.psds)

    def members(self, cls: str) -> List[Psd]:
        return [p for p, lab in zip(self.psds, self.labels) if lab == cls]

    @property
    def grid(self):
        return self.psds[0].grid


@dataclass(eq=False)
class CentroidBank:
    method: str
    classes: List[str]
    centroids: List[Psd]
    models: Optional[List[ArModel]] = None
    config: Dict = field(default_factory=dict)
    direction: str = "test||centroid"
    sinkhorn: Optional[SinkhornConfig] = None


def fit_centroids(
    train: LabeledPsdSet,
    method: str,
    sinkhorn_config: SinkhornConfig = SinkhornConfig(),
    optimizer_config: Optional[OptimizerConfig] = None,
    strategies=None,
    direction: str = "test||centroid",
) -> CentroidBank:
    """One centroid per class.

    IS, KL and L2 use the arithmetic mean of the class members; OT-BC the
    free entropic barycenter; OT-P the best multi-start AR fit.
    """
    method = method.upper()
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}; choose from {METHODS}")
    if direction not in DIRECTIONS:
        raise InvalidArgument(f"direction must be one of {DIRECTIONS}")
    cost = build_cost(train.grid) if method.startswith("OT") else None
    centroids, models = [], []
    snapshot = {"method": method, "direction": direction}
    for cls in train.classes:
        members = train.members(cls)
        if not members:
            raise InvalidArgument(f"class {cls!r} has no training PSDs")
        if method in BASELINES:
            centroids.append(arithmetic_mean_centroid(members))
        elif method == "OT-BC":
            centroids.append(free_barycenter(members, cost, sinkhorn_config))
        else:
            cfg = optimizer_config or OptimizerConfig(sinkhorn=sinkhorn_config)
            report = multi_start_fit(members, strategies or default_portfolio(), cost, cfg)
            best = report.best_fit
            centroids.append(best.psd)
            models.append(best.model)
    if method.startswith("OT"):
        snapshot["epsilon"] = sinkhorn_config.epsilon
        snapshot["sinkhorn_tol"] = sinkhorn_config.tol
    if method == "OT-P":
        snapshot["model_order"] = (optimizer_config or OptimizerConfig()).model_order
    return CentroidBank(
        method=method,
        classes=list(train.classes),
        centroids=centroids,
        models=models or None,
        config=snapshot,
        direction=direction,
        sinkhorn=sinkhorn_config if method.startswith("OT") else None,
    )


def distance(psd: Psd, centroid: Psd, bank: CentroidBank, cost=None) -> float:
    if bank.method in BASELINES:
        if bank.direction == "test||centroid":
            return baseline_distance(bank.method, psd, centroid)
        return baseline_distance(bank.method, centroid, psd)
    cost = cost if cost is not None else build_cost(psd.grid)
    return sinkhorn(psd, centroid, cost, bank.sinkhorn).cost


def score(psd: Psd, bank: CentroidBank, cost=None) -> np.ndarray:
    """Negative distance to each class centroid (higher means more likely)."""
    psd = psd if psd.normalized else normalize(psd)
    if bank.method.startswith("OT") and cost is None:
        cost = build_cost(psd.grid)
    return -np.array([distance(psd, c, bank, cost) for c in bank.centroids])


def predict_from_scores(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the earliest class."""
    return np.argmax(np.atleast_2d(scores), axis=1)


def predict(psd: Psd, bank: CentroidBank) -> str:
    return bank.classes[int(predict_from_scores(score(psd, bank))[0])]


@dataclass
class MetricsReport:
    acc: float
    bacc: float
    f1_macro: float
    auc_macro: float
    confusion: np.ndarray
    classes: List[str]
    method: str = ""
    direction: str = ""

    def to_dict(self):
        return {
            "method": self.method,
            "direction": self.direction,
            "acc": self.acc,
            "bacc": self.bacc,
            "f1_macro": self.f1_macro,
            "auc_macro": self.auc_macro,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
        }


def binary_auc(positive: np.ndarray, scores: np.ndarray) -> float:
    """Area under the ROC curve; equals the trapezoidal rule over all thresholds."""
    positive = np.asarray(positive, dtype=bool)
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def metrics_from_scores(y_true: Sequence[int], scores: np.ndarray, classes: Sequence[str]) -> MetricsReport:
    """ACC, balanced accuracy, macro F1, macro one-vs-rest AUC and the confusion matrix.

    Per-class averages run over the classes present in ``y_true``; a class
    never predicted gets F1 = 0.
    """
    y_true = np.asarray(y_true, dtype=int)
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    n = len(classes)
    if len(y_true) == 0:
        raise InvalidArgument("empty test set")
    if scores.shape != (len(y_true), n):
        raise InvalidArgument(f"scores must have shape ({len(y_true)}, {n})")
    y_pred = predict_from_scores(scores)
    confusion = np.zeros((n, n), dtype=int)
    np.add.at(confusion, (y_true, y_pred), 1)
    present = np.flatnonzero(confusion.sum(axis=1) > 0)
    tp = np.diag(confusion).astype(float)
    support = confusion.sum(axis=1).astype(float)
    predicted = confusion.sum(axis=0).astype(float)
    recall = tp[present] / support[present]
    denom = support[present] + predicted[present]
    f1 = np.where(denom > 0, 2 * tp[present] / np.where(denom > 0, denom, 1), 0.0)
    aucs = [binary_auc(y_true == c, scores[:, c]) for c in present]
    aucs = [a for a in aucs if np.isfinite(a)]
    return MetricsReport(
        acc=float(tp.sum() / len(y_true)),
        bacc=float(recall.mean()),
        f1_macro=float(f1.mean()),
        auc_macro=float(np.mean(aucs)) if aucs else float("nan"),
        confusion=confusion,
        classes=list(classes),
    )


def score_matrix(test: LabeledPsdSet, bank: CentroidBank) -> np.ndarray:
    cost = build_cost(test.grid) if bank.method.startswith("OT") else None
    return np.array([score(p, bank, cost) for p in test.psds])


def evaluate(test: LabeledPsdSet, bank: CentroidBank) -> MetricsReport:
    if len(test) == 0:
        raise InvalidArgument("empty test set")
    unknown = set(test.labels) - set(bank.classes)
    if unknown:
        raise InvalidArgument(f"test classes missing from the centroid bank: {sorted(unknown)}")
    index = {c: i for i, c in enumerate(bank.classes)}
    y_true = [index[lab] for lab in test.labels]
    report = metrics_from_scores(y_true, score_matrix(test, bank), bank.classes)
    report.method = bank.method
    report.direction = bank.direction if bank.method in BASELINES else "symmetric"
    return report


def format_table(reports: Sequence[MetricsReport]) -> str:
    """Aligned text table: Method, ACC, BACC, F1, AUC."""
    lines = [f"{'Method':<8}{'ACC':>9}{'BACC':>9}{'F1':>9}{'AUC':>9}"]
    for r in reports:
        lines.append(f"{r.method:<8}{r.acc:>9.4f}{r.bacc:>9.4f}{r.f1_macro:>9.4f}{r.auc_macro:>9.4f}")
    return "\n".join(lines) + "\n"
