"""Two-class linear discriminant analysis on selected features.

Gaussian equal-covariance discriminant: with pooled within-class covariance S
(divisor n-2) regularized to S + ridge * (trace(S)/d) * I,

    w = S^-1 (mu1 - mu0)
    b = -w . (mu0 + mu1)/2 + ln(pi1/pi0)

Scores w.x + b are positive on the malignant side; predictions break ties
toward benign.  The raw score is exposed so ROC thresholds stay decoupled
from the default boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularCovariance, TooFewSamples

DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True)
class LdaModel:
    weights: np.ndarray
    bias: float
    priors: tuple[float, float]    # (benign, malignant)


def lda_fit(x: np.ndarray, y: np.ndarray, ridge: float = DEFAULT_RIDGE) -> LdaModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"x shape {x.shape} vs {y.shape[0]} labels")
    n, d = x.shape
    x0 = x[y == 0]
    x1 = x[y == 1]
    if x0.shape[0] < 2 or x1.shape[0] < 2:
        raise TooFewSamples("LDA needs at least 2 samples per class")
    mu0 = x0.mean(axis=0)
    mu1 = x1.mean(axis=0)
    scatter = (x0 - mu0).T @ (x0 - mu0) + (x1 - mu1).T @ (x1 - mu1)
    cov = scatter / (n - 2)
    if ridge > 0:
        cov = cov + ridge * (np.trace(cov) / d) * np.eye(d)
    try:
        weights = np.linalg.solve(cov, mu1 - mu0)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(f"pooled covariance is singular: {exc}") from exc
    if not np.isfinite(weights).all():
        raise SingularCovariance("pooled covariance solve produced non-finite weights")
    pi0 = x0.shape[0] / n
    pi1 = x1.shape[0] / n
    bias = float(-weights @ (mu0 + mu1) / 2.0 + np.log(pi1 / pi0))
    return LdaModel(weights=weights, bias=bias, priors=(pi0, pi1))


def lda_score(model: LdaModel, x: np.ndarray):
    """Discriminant score w.x + b; larger means more malignant."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.weights.shape[0]:
        raise DimensionMismatch(
            f"feature count {x.shape[-1]} != model dimension {model.weights.shape[0]}")
    score = x @ model.weights + model.bias
    return float(score) if score.ndim == 0 else score


def lda_predict(model: LdaModel, x: np.ndarray):
    """1 (malignant) iff the score is strictly positive; ties go to benign."""
    score = lda_score(model, x)
    if np.ndim(score) == 0:
        return int(score > 0)
    return (score > 0).astype(int)
