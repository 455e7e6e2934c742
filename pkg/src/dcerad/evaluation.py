"""Metrics, ROC/AUC and patient-grouped stratified cross-validation.

Per fold, LASSO selection runs on the training rows only (never the held-out
fold), an LDA is fit on the standardized selected columns, and the held-out
rows are scored.  Headline metrics pool the concatenated out-of-fold scores;
per-fold mean and std are reported alongside.

AUC is the Mann-Whitney pair statistic with half credit for ties; the ROC
point list is swept over unique score thresholds (descending, with a (0,0)
anchor at threshold +inf) so its trapezoidal area equals the pair statistic.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, LengthMismatch, OneClassOnly
from .folds import FoldAssignment, grouped_stratified_folds
from .lda import lda_fit, lda_predict, lda_score
from .selection import (DYNAMIC_BLOCK, RADIOMIC_BLOCK, FeatureMatrix, SelectionModel,
                        select_block)

FEATURE_SETS = ("dynamic", "radiomic", "combined")

METRIC_NAMES = ("accuracy", "recall", "precision", "f1", "auc")


def confusion_metrics(labels, predictions) -> dict[str, float]:
    """Accuracy, recall, precision and F1 with malignant (1) as positive.

    Degenerate rules: precision 0 without positive predictions, recall 0
    without positive labels, F1 0 when precision + recall is 0.
    """
    labels = np.asarray(labels, dtype=int)
    predictions = np.asarray(predictions, dtype=int)
    if labels.shape != predictions.shape:
        raise LengthMismatch(f"{labels.shape[0]} labels vs {predictions.shape[0]} predictions")
    if labels.size == 0:
        raise EmptyInput("metrics need at least one sample")
    tp = int(((labels == 1) & (predictions == 1)).sum())
    fp = int(((labels == 0) & (predictions == 1)).sum())
    fn = int(((labels == 1) & (predictions == 0)).sum())
    tn = int(((labels == 0) & (predictions == 0)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": (tp + tn) / labels.size,
        "recall": recall,
        "precision": precision,
        "f1": f1,
    }


def roc_auc(labels, scores):
    """(AUC, ROC points): pair-statistic AUC and (fpr, tpr, threshold) sweep."""
    labels = np.asarray(labels, dtype=int)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise LengthMismatch(f"{labels.shape[0]} labels vs {scores.shape[0]} scores")
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise OneClassOnly("AUC needs both classes present")

    # Mann-Whitney with half credit for ties, counted pair by pair
    wins = 0.0
    chunk = max(1, 10_000_000 // max(neg.size, 1))
    for start in range(0, pos.size, chunk):
        block = pos[start:start + chunk, None]
        wins += float((block > neg[None, :]).sum()) + 0.5 * float((block == neg[None, :]).sum())
    auc = wins / (pos.size * neg.size)

    thresholds = np.unique(scores)[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    tpr = (pos.size - np.searchsorted(pos_sorted, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg_sorted, thresholds, side="left")) / neg.size
    points = [(0.0, 0.0, float("inf"))]
    points += [(float(f), float(t), float(th)) for f, t, th in zip(fpr, tpr, thresholds)]
    return auc, points


def trapezoidal_auc(points) -> float:
    """Area under the (fpr, tpr) polyline of a roc_auc point list."""
    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    return float(np.trapezoid(tpr, fpr))


def make_folds(groups, labels, k: int = 5, seed=0) -> FoldAssignment:
    """Patient-grouped, label-stratified fold assignment (see folds module)."""
    return grouped_stratified_folds(groups, labels, k, seed)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_test: int
    metrics: dict[str, float]
    selected: dict[str, list[str]]   # block -> selected feature names


@dataclass(frozen=True)
class EvalReport:
    feature_set: str
    seed: int
    cv_folds: int
    config_fingerprint: str
    folds: tuple[FoldResult, ...]
    pooled: dict[str, float]
    fold_mean: dict[str, float]
    fold_std: dict[str, float]
    roc_points: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "feature_set": self.feature_set,
            "seed": self.seed,
            "cv_folds": self.cv_folds,
            "config_fingerprint": self.config_fingerprint,
            "pooled": self.pooled,
            "fold_mean": self.fold_mean,
            "fold_std": self.fold_std,
            "folds": [
                {"fold": f.fold, "n_test": f.n_test, "metrics": f.metrics,
                 "selected": f.selected}
                for f in self.folds
            ],
            "roc_points": [[p[0], p[1], "inf" if np.isinf(p[2]) else p[2]]
                           for p in self.roc_points],
        }


def _blocks_for(feature_set: str) -> tuple[str, ...]:
    if feature_set == "dynamic":
        return (DYNAMIC_BLOCK,)
    if feature_set == "radiomic":
        return (RADIOMIC_BLOCK,)
    if feature_set == "combined":
        return (DYNAMIC_BLOCK, RADIOMIC_BLOCK)
    raise ValueError(f"unknown feature set {feature_set!r}")


def fit_and_score_fold(features: FeatureMatrix, train_idx, test_idx, feature_set: str,
                       grid_size: int, inner_folds: int, lda_ridge: float, fold_seed):
    """Select on training rows, fit LDA on standardized survivors, score the
    held-out rows.  Test-fold labels are never read."""
    train = features.take_rows(train_idx)
    models: list[SelectionModel] = []
    for i, block in enumerate(_blocks_for(feature_set)):
        models.append(select_block(train, block, grid_size=grid_size,
                                   cv_folds=inner_folds, seed=tuple(fold_seed) + (i,)))
    selected: list[str] = []
    mean_of: dict[str, float] = {}
    std_of: dict[str, float] = {}
    for model in models:
        for name, mean, std in zip(model.names, model.means, model.stds):
            mean_of[name] = float(mean)
            std_of[name] = float(std)
        selected.extend(model.selected)
    selected = [n for n in features.names if n in set(selected)]

    test_values = features.values[np.asarray(test_idx)]
    if not selected:
        # LASSO killed every feature: constant score, all-benign predictions
        scores = np.zeros(test_values.shape[0])
        predictions = np.zeros(test_values.shape[0], dtype=int)
    else:
        cols = features.column_index(selected)
        means = np.array([mean_of[n] for n in selected])
        stds = np.array([std_of[n] for n in selected])
        z_train = (train.values[:, cols] - means) / stds
        model = lda_fit(z_train, train.labels, ridge=lda_ridge)
        z_test = (test_values[:, cols] - means) / stds
        scores = lda_score(model, z_test)
        predictions = lda_predict(model, z_test)
    return scores, predictions, {m.block: list(m.selected) for m in models}


def cross_validate(features: FeatureMatrix, feature_set: str = "combined",
                   cv_folds: int = 5, seed: int = 0,
                   grid_size: int = 100, inner_folds: int = 5,
                   lda_ridge: float = 1e-6,
                   config_fingerprint: str = "") -> EvalReport:
    """Patient-grouped stratified k-fold evaluation of the full select+classify
    pipeline; deterministic given the seed."""
    assign = make_folds(features.groups, features.labels, cv_folds, seed)
    n = features.n_rows
    oof_scores = np.zeros(n)
    oof_pred = np.zeros(n, dtype=int)
    fold_results = []
    for fold in range(cv_folds):
        test_idx = np.flatnonzero(assign.fold == fold)
        train_idx = np.flatnonzero(assign.fold != fold)
        scores, predictions, selected = fit_and_score_fold(
            features, train_idx, test_idx, feature_set,
            grid_size, inner_folds, lda_ridge, fold_seed=(seed, fold))
        oof_scores[test_idx] = scores
        oof_pred[test_idx] = predictions
        test_labels = features.labels[test_idx]
        metrics = confusion_metrics(test_labels, predictions)
        metrics["auc"], _ = roc_auc(test_labels, scores)
        fold_results.append(FoldResult(fold=fold, n_test=test_idx.size,
                                       metrics=metrics, selected=selected))

    pooled = confusion_metrics(features.labels, oof_pred)
    pooled["auc"], roc_points = roc_auc(features.labels, oof_scores)
    fold_mean = {m: float(np.mean([f.metrics[m] for f in fold_results]))
                 for m in METRIC_NAMES}
    fold_std = {m: float(np.std([f.metrics[m] for f in fold_results]))
                for m in METRIC_NAMES}
    return EvalReport(feature_set=feature_set, seed=seed, cv_folds=cv_folds,
                      config_fingerprint=config_fingerprint,
                      folds=tuple(fold_results), pooled=pooled,
                      fold_mean=fold_mean, fold_std=fold_std,
                      roc_points=tuple(roc_points))


def config_fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]
