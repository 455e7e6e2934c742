"""LASSO feature selection per block (dynamic / radiomic).

The fit minimizes

    (1/2n) * sum_i (y_i - x_i . beta)^2 + lambda * sum_j |beta_j|

by cyclic coordinate descent with the soft-threshold update
S(z, lam) = sign(z) * max(|z| - lam, 0).  Columns are standardized to mean 0
and unit standard deviation (population convention, divisor n) beforehand;
zero-variance columns are dropped and reported.  The penalty weight is chosen
on a 100-point log grid from lambda_max down to lambda_max/1000 by grouped,
stratified cross-validation, minimizing mean squared out-of-fold error with
ties broken toward the smaller (denser) lambda.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NonConvergence, TooFewRows
from .folds import grouped_stratified_folds
from .kinetics import DYNAMIC_FEATURE_NAMES

DYNAMIC_BLOCK = "dynamic"
RADIOMIC_BLOCK = "radiomic"
BLOCKS = (DYNAMIC_BLOCK, RADIOMIC_BLOCK)

DEFAULT_GRID_SIZE = 100
DEFAULT_CV_FOLDS = 5
CD_TOL = 1e-7
CD_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class FeatureMatrix:
    """Lesion-by-feature values with labels (0 benign, 1 malignant) and
    per-row patient groups."""

    names: tuple[str, ...]
    values: np.ndarray           # (n_rows, n_cols) float64
    labels: np.ndarray           # (n_rows,) int, 0/1
    groups: tuple[str, ...]      # patient_id per row
    lesion_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=int)
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if values.ndim != 2 or values.shape != (labels.shape[0], len(self.names)):
            raise ValueError(f"values shape {values.shape} inconsistent with "
                             f"{labels.shape[0]} rows x {len(self.names)} names")
        if not np.isfinite(values).all():
            raise ValueError("feature matrix contains non-finite values")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if len(self.groups) != labels.shape[0] or len(self.lesion_ids) != labels.shape[0]:
            raise ValueError("groups/lesion_ids length must match rows")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "lesion_ids", tuple(self.lesion_ids))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column_index(self, names) -> np.ndarray:
        pos = {n: i for i, n in enumerate(self.names)}
        return np.array([pos[n] for n in names], dtype=int)

    def take_rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        return FeatureMatrix(self.names, self.values[idx], self.labels[idx],
                             tuple(self.groups[i] for i in idx),
                             tuple(self.lesion_ids[i] for i in idx))

    def block_names(self, block: str) -> tuple[str, ...]:
        dynamic = set(DYNAMIC_FEATURE_NAMES)
        if block == DYNAMIC_BLOCK:
            return tuple(n for n in self.names if n in dynamic)
        if block == RADIOMIC_BLOCK:
            return tuple(n for n in self.names if n not in dynamic)
        raise ValueError(f"unknown block {block!r}")


@dataclass(frozen=True)
class SelectionModel:
    block: str
    names: tuple[str, ...]        # retained columns, in matrix order
    means: np.ndarray
    stds: np.ndarray
    dropped: tuple[str, ...]      # zero-variance columns removed before the fit
    lambda_: float
    coefficients: np.ndarray
    selected: tuple[str, ...]     # names with nonzero coefficients

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "block": self.block,
            "names": list(self.names),
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
            "dropped": list(self.dropped),
            "lambda": float(self.lambda_),
            "coefficients": [float(v) for v in self.coefficients],
            "selected": list(self.selected),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionModel":
        return cls(block=d["block"], names=tuple(d["names"]),
                   means=np.array(d["means"], dtype=np.float64),
                   stds=np.array(d["stds"], dtype=np.float64),
                   dropped=tuple(d["dropped"]), lambda_=float(d["lambda"]),
                   coefficients=np.array(d["coefficients"], dtype=np.float64),
                   selected=tuple(d["selected"]))


def soft_threshold(z: float, lam: float) -> float:
    return np.sign(z) * max(abs(z) - lam, 0.0)


def standardize(values: np.ndarray, names=None):
    """Column-wise (x - mean) / std with population std; zero-variance columns
    are dropped.  Returns (standardized, means, stds, kept_idx, dropped_names)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        raise TooFewRows(f"standardization needs >= 2 rows, got {values.shape[0]}")
    means = values.mean(axis=0)
    stds = values.std(axis=0)
    kept = np.flatnonzero(stds > 0)
    dropped_idx = np.flatnonzero(stds == 0)
    dropped = tuple(names[i] for i in dropped_idx) if names is not None else tuple(
        str(i) for i in dropped_idx)
    z = (values[:, kept] - means[kept]) / stds[kept]
    return z, means[kept], stds[kept], kept, dropped


def lasso_objective(x: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    r = y - x @ beta
    return float(0.5 * (r @ r) / x.shape[0] + lam * np.abs(beta).sum())


_GS_CAP = 64


def _cd_candidate_passes(gram, gdiag, xty, lam, beta, candidates, q, passes, budget):
    """Cyclic passes restricted to the candidate coordinates until no candidate
    moves by CD_TOL.  Once a scalar pass finishes without any sign change, the
    soft-threshold is affine on the active set: the stationary point cyclic
    descent converges to solves the active-set linear system, so it is taken
    directly when the solution validates (finite, sign-consistent, tiny
    residual); otherwise a capped run of Gauss-Seidel iterations (one cyclic
    pass each, via a triangular solve) makes monotone progress and control
    returns to the scalar pass.  Updates beta in place; returns the pass count.
    """
    g_cc = gram[np.ix_(candidates, candidates)]
    gd = gdiag[candidates]
    xt = xty[candidates]
    b = beta[candidates].copy()
    qc_base = q[candidates] - g_cc @ b
    k = candidates.size
    rounds = 0
    while True:
        rounds += 1
        if rounds > 256 or passes >= budget:
            break                          # hand control back to the screen
        qc = qc_base + g_cc @ b
        signs_before = np.sign(b)
        max_delta = 0.0
        for j in range(k):
            c_j = xt[j] - qc[j] + gd[j] * b[j]
            b_new = soft_threshold(c_j, lam) / gd[j]
            delta = b_new - b[j]
            if delta != 0.0:
                qc += g_cc[:, j] * delta
                b[j] = b_new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        passes += 1
        if max_delta < CD_TOL:
            break
        if (np.sign(b) != signs_before).any():
            continue
        nzl = np.flatnonzero(b)
        if nzl.size == 0:
            continue

        # Stationary-point jump with feature-sign line search: solve the
        # active-set system; while the solution flips signs, step only to the
        # first zero crossing, retire that coordinate, and re-solve.  Every
        # step descends the objective, so combined with the scalar passes the
        # sign pattern cannot cycle.  The min-norm solve handles exactly
        # collinear columns; an inconsistent system (no stationary point for
        # this pattern) falls back to capped Gauss-Seidel iterations.
        jumped = False
        sub = nzl
        b_sub = b[sub].copy()
        s_sub = np.sign(b_sub)
        for _ in range(sub.size + 1):
            a_sub = g_cc[np.ix_(sub, sub)]
            rhs = xt[sub] - lam * s_sub - qc_base[sub]
            b_star = np.linalg.lstsq(a_sub, rhs, rcond=None)[0]
            passes += 1
            scale = max(1.0, float(np.abs(rhs).max()))
            if not (np.isfinite(b_star).all()
                    and float(np.abs(a_sub @ b_star - rhs).max()) < 1e-9 * scale):
                break                      # no stationary point here: iterate instead
            flipped = s_sub * b_star <= 0
            if not flipped.any():
                b[nzl] = 0.0
                b[sub] = b_star
                jumped = True
                break
            t_cross = b_sub[flipped] / (b_sub[flipped] - b_star[flipped])
            t = float(t_cross.min())
            b_sub = b_sub + t * (b_star - b_sub)
            retire = np.zeros(sub.size, dtype=bool)
            retire[np.flatnonzero(flipped)[t_cross <= t]] = True
            b_sub[retire] = 0.0
            b[nzl] = 0.0
            b[sub] = b_sub
            sub = sub[~retire]
            b_sub = b_sub[~retire]
            s_sub = s_sub[~retire]
            if sub.size == 0:
                break
        if not jumped:
            nzl = np.flatnonzero(b)
            if nzl.size == 0:
                continue
            s = np.sign(b[nzl])
            a_sub = g_cc[np.ix_(nzl, nzl)]
            rhs = xt[nzl] - lam * s - qc_base[nzl]
            lower = np.tril(a_sub)
            upper = np.triu(a_sub, 1)
            b_sub = b[nzl].copy()
            for _ in range(_GS_CAP):
                b_next = solve_triangular(lower, rhs - upper @ b_sub, lower=True)
                passes += 1
                if (s * b_next <= 0).any():
                    break                  # branch broke: discard, resume scalar
                delta = float(np.abs(b_next - b_sub).max())
                b_sub = b_next
                if delta < CD_TOL or passes >= budget:
                    break
            b[nzl] = b_sub
    beta[candidates] = b
    return passes


_STALL_WINDOW = 200
_STALL_FACTOR = 0.97
_MATERIAL_MOVE = 1e-3


def _cd_minimize(gram, gdiag, xty, lam, beta, budget):
    """Coordinate descent to tolerance CD_TOL; beta is updated in place and the
    number of cyclic passes consumed is returned.

    A vectorized screen finds every coordinate whose exact single-coordinate
    minimizer moves by >= CD_TOL; those run cyclic candidate passes.
    Convergence is declared when a fresh screen over all coordinates shows no
    such move, i.e. a full cyclic sweep would change no coefficient by CD_TOL
    or more.

    Near-collinear designs can cycle at float resolution with single-coordinate
    moves hovering just above CD_TOL while the objective is long converged; the
    descent stops once the screen's largest move fails to improve for
    _STALL_WINDOW consecutive screens (or the sweep budget runs out) provided
    the iterate is no longer moving materially.  A budget exhausted while
    moves are still material raises NonConvergence.
    """
    p = beta.shape[0]
    passes = 0
    solvable = gdiag > 0
    safe_gdiag = np.where(solvable, gdiag, 1.0)
    best_move = np.inf
    screens_without_progress = 0
    while True:
        nz = np.flatnonzero(beta)
        q = gram[:, nz] @ beta[nz] if nz.size else np.zeros(p)
        c = xty - q + gdiag * beta
        target = np.where(solvable,
                          np.sign(c) * np.maximum(np.abs(c) - lam, 0.0) / safe_gdiag,
                          beta)
        moves = np.abs(target - beta)
        candidates = np.flatnonzero(moves >= CD_TOL)
        passes += 1
        if candidates.size == 0:
            return passes
        max_move = float(moves[candidates].max())
        if max_move < _STALL_FACTOR * best_move:
            best_move = max_move
            screens_without_progress = 0
        else:
            screens_without_progress += 1
        if screens_without_progress >= _STALL_WINDOW and max_move < _MATERIAL_MOVE:
            return passes
        if passes >= budget:
            if max_move >= _MATERIAL_MOVE:
                raise NonConvergence(passes)
            return passes
        passes = _cd_candidate_passes(gram, gdiag, xty, lam, beta, candidates,
                                      q, passes, budget)


def lasso_fit(x: np.ndarray, y: np.ndarray, lam: float, beta0=None,
              track_objective: bool = False):
    """Coordinate-descent LASSO at one penalty.

    Returns beta, or (beta, objective_history) with track_objective, where the
    history holds the penalized objective after every cyclic pass.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    gram = x.T @ x / n
    xty = x.T @ y / n
    gdiag = np.diag(gram).copy()
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=np.float64).copy()

    if not track_objective:
        _cd_minimize(gram, gdiag, xty, lam, beta, CD_MAX_SWEEPS)
        return beta

    q = gram @ beta
    history = [lasso_objective(x, y, beta, lam)]
    passes = 0
    solvable = gdiag > 0
    while True:
        max_delta = 0.0
        for j in range(p):
            if not solvable[j]:
                continue
            c_j = xty[j] - q[j] + gdiag[j] * beta[j]
            b_new = soft_threshold(c_j, lam) / gdiag[j]
            delta = b_new - beta[j]
            if delta != 0.0:
                q += gram[j] * delta
                beta[j] = b_new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        passes += 1
        history.append(lasso_objective(x, y, beta, lam))
        if max_delta < CD_TOL:
            return beta, history
        if passes >= CD_MAX_SWEEPS:
            if max_delta >= _MATERIAL_MOVE:
                raise NonConvergence(passes)
            return beta, history


def lambda_max(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty with an all-zero solution: max_j |x_j . y| / n."""
    return float(np.abs(x.T @ y).max() / x.shape[0])


def lambda_grid(lam_max: float, grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    lam_max = max(lam_max, 1e-12)
    return np.logspace(np.log10(lam_max), np.log10(lam_max * 1e-3), grid_size)


def lasso_path(x: np.ndarray, y: np.ndarray, lambdas) -> np.ndarray:
    """Warm-started coefficients for a descending penalty grid, shape (len, p)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    gram = x.T @ x / n
    xty = x.T @ y / n
    gdiag = np.diag(gram).copy()
    beta = np.zeros(p)
    out = np.zeros((len(lambdas), p))
    for i, lam in enumerate(lambdas):
        _cd_minimize(gram, gdiag, xty, float(lam), beta, CD_MAX_SWEEPS)
        out[i] = beta
    return out


def lambda_path_cv(x: np.ndarray, y: np.ndarray, groups,
                   grid_size: int = DEFAULT_GRID_SIZE,
                   cv_folds: int = DEFAULT_CV_FOLDS, seed=0):
    """Choose the penalty by grouped stratified CV on mean squared error.

    Returns (chosen_lambda, grid, cv_mse).  Folds are stratified by label and
    grouped by patient; each fold's fit centers its own training labels and
    predicts with that intercept.  Ties go to the smaller lambda.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    for lab in (0, 1):
        if int((y == lab).sum()) < cv_folds:
            raise TooFewRows(f"need >= {cv_folds} rows of class {lab} for CV")
    grid = lambda_grid(lambda_max(x, y - y.mean()), grid_size)
    assign = grouped_stratified_folds(groups, y.astype(int), cv_folds, seed)
    sq_err = np.zeros(grid.shape[0])
    for fold in range(cv_folds):
        test = assign.fold == fold
        train = ~test
        y_train = y[train]
        intercept = y_train.mean()
        betas = lasso_path(x[train], y_train - intercept, grid)
        pred = x[test] @ betas.T + intercept           # (n_test, n_lambda)
        sq_err += ((pred - y[test][:, None]) ** 2).sum(axis=0)
    cv_mse = sq_err / y.shape[0]
    best = 0
    for i in range(1, grid.shape[0]):
        if cv_mse[i] <= cv_mse[best]:
            best = i
    return float(grid[best]), grid, cv_mse


def select_block(matrix: FeatureMatrix, block: str,
                 grid_size: int = DEFAULT_GRID_SIZE,
                 cv_folds: int = DEFAULT_CV_FOLDS, seed=0) -> SelectionModel:
    """Standardize a feature block, pick lambda by CV, fit, record survivors."""
    names = matrix.block_names(block)
    if not names:
        raise TooFewRows(f"matrix has no {block} columns")
    cols = matrix.column_index(names)
    z, means, stds, kept, dropped = standardize(matrix.values[:, cols], names)
    kept_names = tuple(names[i] for i in kept)
    y = matrix.labels.astype(np.float64)
    lam, _, _ = lambda_path_cv(z, y, matrix.groups, grid_size, cv_folds, seed)
    beta = lasso_fit(z, y - y.mean(), lam)
    selected = tuple(n for n, b in zip(kept_names, beta) if b != 0.0)
    return SelectionModel(block=block, names=kept_names, means=means, stds=stds,
                          dropped=dropped, lambda_=lam, coefficients=beta,
                          selected=selected)
