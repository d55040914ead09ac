"""Statistics for screening models: selection, logistic regression, ROC.

The modeling pipeline is deliberately plain: features are standardized,
an L2-regularized logistic regression is fit by iteratively reweighted
least squares, the regularization weight is picked by patient-grouped
stratified cross-validation, and discrimination is reported as the
Mann-Whitney AUC plus sensitivity at a fixed specificity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

DEFAULT_REG_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_FOLDS = 10
IRLS_TOL = 1e-6
IRLS_MAX_ITER = 500
_NORM_GUARD = 1e-8


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation is requested against a constant vector."""


@dataclass
class FeatureMatrix:
    """Rows of features with labels and grouping metadata."""

    feature_names: list[str]
    X: np.ndarray
    labels: np.ndarray
    sites: list[str]
    patient_ids: list[str]
    paths: list[str] = field(default_factory=list)

    def subset_rows(self, mask: np.ndarray) -> "FeatureMatrix":
        idx = np.flatnonzero(mask)
        return FeatureMatrix(
            self.feature_names,
            self.X[idx],
            self.labels[idx],
            [self.sites[i] for i in idx],
            [self.patient_ids[i] for i in idx],
            [self.paths[i] for i in idx] if self.paths else [],
        )

    def subset_features(self, names: list[str]) -> "FeatureMatrix":
        pos = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(list(names), self.X[:, pos], self.labels, self.sites, self.patient_ids, self.paths)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; raises on constant input rather than returning NaN."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 3:
        raise ValueError(f"need two equal-length vectors of at least 3 values, got {len(x)} and {len(y)}")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        raise UndefinedCorrelationError("correlation undefined: at least one input is constant")
    return float(np.dot(xc, yc) / denom)


@dataclass
class SelectionReport:
    """Per-feature, per-site correlations and the sign-consistent survivors."""

    sites: list[str]
    correlations: dict[str, dict[str, float | None]]
    selected: list[str]
    directions: dict[str, str]


def select_consistent_features(matrix: FeatureMatrix, sites: list[str]) -> SelectionReport:
    """Keep features whose label correlation has the same sign at every site.

    A feature that is constant within some site (undefined correlation)
    is dropped, not errored; a site whose labels are single-class makes
    every correlation undefined and is a caller mistake, so that raises.
    """
    if len(sites) < 2:
        raise ValueError("sign-consistency selection needs at least two sites")
    site_rows = {}
    for s in sites:
        mask = np.array([row_site == s for row_site in matrix.sites])
        if not mask.any():
            raise ValueError(f"site {s} has no rows")
        if len(np.unique(matrix.labels[mask])) < 2:
            raise ValueError(f"site {s} has a single class; correlations are undefined there")
        site_rows[s] = mask

    correlations: dict[str, dict[str, float | None]] = {}
    selected = []
    directions = {}
    for j, name in enumerate(matrix.feature_names):
        rs: dict[str, float | None] = {}
        for s in sites:
            mask = site_rows[s]
            try:
                rs[s] = pearson(matrix.X[mask, j], matrix.labels[mask])
            except UndefinedCorrelationError:
                rs[s] = None
        correlations[name] = rs
        vals = list(rs.values())
        if all(v is not None and v > 0 for v in vals):
            selected.append(name)
            directions[name] = "positive"
        elif all(v is not None and v < 0 for v in vals):
            selected.append(name)
            directions[name] = "negative"
    return SelectionReport(list(sites), correlations, selected, directions)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ScreeningModel:
    """Logistic screening model with its standardization baked in."""

    feature_names: list[str]
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    reg_strength: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean) / self.std
        return _sigmoid(Z @ self.weights + self.bias)

    def contribution_percent(self) -> dict[str, float]:
        """Share of total absolute weight per feature, in percent."""
        total = np.sum(np.abs(self.weights))
        if total == 0:
            return {n: 0.0 for n in self.feature_names}
        return {n: float(100.0 * abs(w) / total) for n, w in zip(self.feature_names, self.weights)}

    def to_json_dict(self) -> dict:
        return {
            "features": list(self.feature_names),
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "standardize": {"mean": [float(m) for m in self.mean], "std": [float(s) for s in self.std]},
            "reg_strength": float(self.reg_strength),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "ScreeningModel":
        return ScreeningModel(
            list(d["features"]),
            np.asarray(d["weights"], dtype=np.float64),
            float(d["bias"]),
            np.asarray(d["standardize"]["mean"], dtype=np.float64),
            np.asarray(d["standardize"]["std"], dtype=np.float64),
            float(d["reg_strength"]),
        )


def train_logreg(matrix: FeatureMatrix, reg_strength: float = 1.0) -> ScreeningModel:
    """Fit L2-regularized logistic regression by Newton/IRLS steps.

    Features are standardized by their training mean and population std
    (constant columns fall back to std 1). reg_strength is the penalty
    weight on the squared standardized coefficients; the bias is never
    penalized. Iterates until the gradient norm drops under 1e-6, at most
    500 steps.
    """
    X = np.asarray(matrix.X, dtype=np.float64)
    y = np.asarray(matrix.labels, dtype=np.float64)
    n, d = X.shape
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Z = np.column_stack([(X - mean) / std, np.ones(n)])

    w = np.zeros(d + 1)
    penalty = np.full(d + 1, float(reg_strength))
    penalty[d] = 0.0  # bias stays unpenalized
    for _ in range(IRLS_MAX_ITER):
        p = _sigmoid(Z @ w)
        grad = Z.T @ (p - y) + penalty * w
        if np.linalg.norm(grad) < IRLS_TOL:
            break
        r = np.clip(p * (1.0 - p), 1e-10, None)
        hess = (Z * r[:, None]).T @ Z + np.diag(penalty)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        w = w - step
        if not np.all(np.isfinite(w)):
            raise ValueError("logistic regression diverged to non-finite weights")

    pc = np.clip(_sigmoid(Z @ w), 1e-15, 1.0 - 1e-15)
    loss = -np.sum(y * np.log(pc) + (1 - y) * np.log(1 - pc)) + 0.5 * reg_strength * np.dot(w[:d], w[:d])
    if not np.isfinite(loss):
        raise ValueError("logistic regression reached a non-finite loss")
    return ScreeningModel(list(matrix.feature_names), w[:d], float(w[d]), mean, std, float(reg_strength))


@dataclass
class CrossValidationResult:
    best_reg_strength: float
    fold_aucs: dict[float, list[float]]
    mean_aucs: dict[float, float]


def assign_patient_folds(patient_ids: list[str], labels: np.ndarray, folds: int) -> dict[str, int]:
    """Deterministic stratified fold assignment at the patient level.

    Patients (not rows) are dealt round-robin within each class, so no
    patient ever appears on both sides of a split and fold class counts
    stay within one patient of each other.
    """
    patient_label: dict[str, int] = {}
    for pid, lab in zip(patient_ids, labels):
        patient_label[pid] = max(patient_label.get(pid, 0), int(lab))
    assignment = {}
    for cls in (0, 1):
        members = sorted(p for p, lab in patient_label.items() if lab == cls)
        if len(members) < folds:
            raise ValueError(f"class {cls} has {len(members)} patients; need at least {folds} for {folds}-fold CV")
        for i, pid in enumerate(members):
            assignment[pid] = i % folds
    return assignment


def cross_validate(
    matrix: FeatureMatrix,
    folds: int = DEFAULT_FOLDS,
    reg_grid: tuple[float, ...] = DEFAULT_REG_GRID,
) -> CrossValidationResult:
    """Pick the regularization weight by grouped, stratified CV.

    Mean validation AUC decides; exact ties go to the strongest
    regularization (largest penalty).
    """
    assignment = assign_patient_folds(matrix.patient_ids, matrix.labels, folds)
    row_fold = np.array([assignment[p] for p in matrix.patient_ids])

    fold_aucs: dict[float, list[float]] = {lam: [] for lam in reg_grid}
    for lam in reg_grid:
        for f in range(folds):
            val_mask = row_fold == f
            model = train_logreg(matrix.subset_rows(~val_mask), lam)
            val = matrix.subset_rows(val_mask)
            curve = roc_auc(model.predict_proba(val.X), val.labels)
            fold_aucs[lam].append(curve.auc)
    mean_aucs = {lam: float(np.mean(v)) for lam, v in fold_aucs.items()}
    best = max(reg_grid, key=lambda lam: (mean_aucs[lam], lam))
    return CrossValidationResult(float(best), fold_aucs, mean_aucs)


@dataclass
class RocCurve:
    """Operating points swept over score thresholds, plus the Mann-Whitney AUC."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    """ROC curve and AUC with exact tie handling.

    The AUC equals concordant pairs plus half the tied pairs over all
    positive-negative pairs, computed through midranks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    neg = labels == 0
    n1, n0 = int(pos.sum()), int(neg.sum())
    if n1 == 0 or n0 == 0:
        raise ValueError(f"ROC needs both classes, got {n1} positives and {n0} negatives")

    ranks = rankdata(scores)
    auc = float((ranks[pos].sum() - n1 * (n1 + 1) / 2) / (n1 * n0))

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = pos[order].astype(np.int64)
    boundaries = np.flatnonzero(np.diff(sorted_scores)) if len(scores) > 1 else np.array([], dtype=int)
    cut = np.concatenate([boundaries, [len(scores) - 1]])
    tp = np.cumsum(sorted_pos)[cut]
    fp = (cut + 1) - tp
    fpr = np.concatenate([[0.0], fp / n0])
    tpr = np.concatenate([[0.0], tp / n1])
    thresholds = np.concatenate([[np.inf], sorted_scores[cut]])
    return RocCurve(fpr, tpr, thresholds, auc)


def sensitivity_at_specificity(curve: RocCurve, specificity: float = 0.80) -> float:
    """TPR at the requested specificity, linearly interpolated on the curve.

    At an FPR where the curve is vertical the highest achievable TPR counts.
    """
    target_fpr = 1.0 - specificity
    best_tpr: dict[float, float] = {}
    for f, t in zip(curve.fpr, curve.tpr):
        best_tpr[float(f)] = max(best_tpr.get(float(f), 0.0), float(t))
    xs = np.array(sorted(best_tpr))
    ys = np.array([best_tpr[x] for x in xs])
    return float(np.interp(target_fpr, xs, ys))
