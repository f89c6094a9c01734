"""Classification-based evaluation of cleaning quality.

The premise: if cleaning helps, task-related structure becomes easier to
decode. Trials are summarized per channel by mean spectral amplitude,
optionally restricted to a physiological band, then classified with
multinomial logistic regression and a 1-nearest-neighbour control, with
shuffled-label baselines and an incremental feature search over
importance-ranked channels. Everything is seeded and deterministic.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.stats

from . import dsp
from .errors import ClassTooSmall, ConfigError, ShapeMismatch, SingleClassTest
from .model import EpochedData, Recording

# Physiological frequency bands, Hz. "full" keeps the broadband signal.
BAND_EDGES: dict[str, tuple[float, float] | None] = {
    "full": None,
    "theta": (4.0, 7.0),
    "alpha": (8.0, 15.0),
    "beta": (15.0, 30.0),
    "low_gamma": (30.0, 70.0),
    "high_gamma": (70.0, 100.0),
    "low_ripple": (100.0, 150.0),
    "high_ripple": (150.0, 200.0),
    "multi_unit": (200.0, 500.0),
}


@dataclass(frozen=True)
class FeatureDataset:
    """Per-trial feature matrix with stable trial identities.

    ``trial_keys`` carry each trial's origin (the event sample index), so
    seeded resampling decisions depend on which trials are present, never
    on row order.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    trial_keys: np.ndarray
    band: str = "full"
    feature_channel_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "trial_keys", np.asarray(self.trial_keys, dtype=np.int64))
        if self.features.shape[0] != self.labels.shape[0]:
            raise ShapeMismatch("features and labels disagree on trial count")
        if self.trial_keys.shape[0] != self.labels.shape[0]:
            raise ShapeMismatch("trial_keys and labels disagree on trial count")

    @property
    def n_trials(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def take(self, rows: np.ndarray) -> "FeatureDataset":
        return FeatureDataset(
            features=self.features[rows],
            labels=self.labels[rows],
            class_names=self.class_names,
            trial_keys=self.trial_keys[rows],
            band=self.band,
            feature_channel_indices=self.feature_channel_indices,
        )


def band_segment(recording: Recording, band: str, order: int = 4) -> Recording:
    """Restrict active channels to one physiological band.

    Bands whose upper edge reaches Nyquist fall back to a high-pass at
    the lower edge. "full" returns the input unchanged.
    """
    if band not in BAND_EDGES:
        raise ConfigError(f"unknown band {band!r}; known: {', '.join(BAND_EDGES)}")
    edges = BAND_EDGES[band]
    if edges is None:
        return recording
    lo, hi = edges
    nyquist = recording.sampling_rate_hz / 2.0
    if lo >= nyquist:
        raise ConfigError(f"band {band!r} lies entirely above Nyquist ({nyquist} Hz)")
    high: float | None = hi if hi < 0.95 * nyquist else None
    filt = dsp.design_butterworth(order, lo, high, recording.sampling_rate_hz)
    out = np.zeros_like(recording.data)
    active = recording.active_indices
    if active.size:
        out[active] = dsp.filtfilt(filt, recording.data[active])
    return recording.with_data(out)


def mean_spectral_amplitude(epoched: EpochedData) -> FeatureDataset:
    """Mean absolute amplitude per channel, one feature vector per trial.

    Only channels active in the epoched data become features; the channel
    indices used are recorded on the dataset.
    """
    if epoched.n_trials < 1:
        raise ShapeMismatch("no trials to featurize")
    active = np.flatnonzero(epoched.channel_mask)
    if active.size == 0:
        raise ShapeMismatch("no active channels to featurize")
    features = np.mean(np.abs(epoched.trials[:, active, :]), axis=2)
    class_names = tuple(sorted(set(epoched.labels)))
    code = {name: i for i, name in enumerate(class_names)}
    labels = np.array([code[lbl] for lbl in epoched.labels], dtype=np.int64)
    if epoched.event_sample_indices:
        keys = np.asarray(epoched.event_sample_indices, dtype=np.int64)
    else:
        keys = np.arange(epoched.n_trials, dtype=np.int64)
    return FeatureDataset(
        features=features,
        labels=labels,
        class_names=class_names,
        trial_keys=keys,
        feature_channel_indices=tuple(int(i) for i in active),
    )


def balance_classes(dataset: FeatureDataset, seed: int = 0) -> FeatureDataset:
    """Undersample every class to the minority count, seeded.

    Selection depends only on the seed and on trial keys, so a permuted
    copy of the dataset balances to the same trials in the same order.
    """
    if dataset.n_classes < 2:
        raise ClassTooSmall(f"need at least 2 classes, got {dataset.n_classes}")
    counts = np.bincount(dataset.labels, minlength=dataset.n_classes)
    minority = int(counts.min())
    if minority < 2:
        raise ClassTooSmall(f"smallest class has {minority} trials, need at least 2")
    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    for cls in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == cls)
        members = members[np.argsort(dataset.trial_keys[members], kind="stable")]
        pick = rng.choice(members.size, size=minority, replace=False)
        chosen.append(members[np.sort(pick)])
    rows = np.concatenate(chosen)
    rows = rows[np.argsort(dataset.trial_keys[rows], kind="stable")]
    return dataset.take(rows)


def fit_standardizer(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and deviations from training data; flat columns get scale 1."""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def apply_standardizer(features: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (features - mean) / std


@dataclass(frozen=True)
class MlrModel:
    """Trained multinomial logistic regression (softmax + L2 on weights)."""

    weights: np.ndarray
    biases: np.ndarray
    converged: bool
    n_iterations: int
    final_grad_norm: float

    @property
    def n_classes(self) -> int:
        return int(self.weights.shape[0])

    def decision_scores(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights.T + self.biases

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return _softmax(self.decision_scores(features))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_scores(features), axis=1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    return expz / expz.sum(axis=1, keepdims=True)


def train_mlr(
    features: np.ndarray,
    labels: np.ndarray,
    n_classes: int | None = None,
    l2_strength: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> MlrModel:
    """Fit softmax regression by full-batch gradient descent.

    The objective (mean cross-entropy plus an L2 penalty on the weights,
    biases unpenalized) is strictly convex, and the zero initialization
    makes the fit deterministic: no random state enters training. Steps
    use backtracking line search; convergence is an infinity-norm gradient
    test.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"bad shapes: features {x.shape}, labels {y.shape}")
    n, d = x.shape
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise ClassTooSmall("need at least 2 classes")
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    w = np.zeros((n_classes, d))
    b = np.zeros(n_classes)

    def objective(wm: np.ndarray, bv: np.ndarray) -> tuple[float, np.ndarray]:
        logits = x @ wm.T + bv
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        log_p = shifted - log_norm[:, None]
        nll = -float(np.mean(log_p[np.arange(n), y]))
        loss = nll + 0.5 * l2_strength * float(np.sum(wm * wm))
        return loss, np.exp(log_p)

    loss, probs = objective(w, b)
    step = 1.0
    converged = False
    grad_norm = np.inf
    iteration = 0
    for iteration in range(1, max_iter + 1):
        err = probs - onehot
        grad_w = err.T @ x / n + l2_strength * w
        grad_b = err.mean(axis=0)
        grad_norm = max(float(np.abs(grad_w).max()), float(np.abs(grad_b).max()))
        if grad_norm < tol:
            converged = True
            break
        sq = float(np.sum(grad_w**2) + np.sum(grad_b**2))
        step = min(step * 2.0, 1e3)
        for _ in range(60):
            w_try = w - step * grad_w
            b_try = b - step * grad_b
            loss_try, probs_try = objective(w_try, b_try)
            if loss_try <= loss - 1e-4 * step * sq:
                break
            step *= 0.5
        w, b, loss, probs = w_try, b_try, loss_try, probs_try
    return MlrModel(
        weights=w, biases=b, converged=converged, n_iterations=iteration, final_grad_norm=grad_norm
    )


def rank_features(model: MlrModel) -> np.ndarray:
    """Feature order by descending weight norm across classes; ties keep
    the lower index first."""
    importance = np.linalg.norm(model.weights, axis=0)
    return np.argsort(-importance, kind="stable")


def knn1_predict(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    query_features: np.ndarray,
) -> np.ndarray:
    """Label of the closest training row (Euclidean); distance ties pick
    the lowest training-row index."""
    a = np.asarray(train_features, dtype=np.float64)
    q = np.asarray(query_features, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if a.shape[0] == 0:
        raise ShapeMismatch("empty training set")
    if a.shape[1] != q.shape[1]:
        raise ShapeMismatch(f"dimension mismatch: {a.shape[1]} vs {q.shape[1]}")
    d2 = np.sum(a * a, axis=1)[None, :] - 2.0 * q @ a.T + np.sum(q * q, axis=1)[:, None]
    nearest = np.argmin(d2, axis=1)
    return np.asarray(train_labels)[nearest]


def roc_auc_ovr_micro(scores: np.ndarray, labels: np.ndarray, n_classes: int | None = None) -> float:
    """Micro-averaged one-vs-rest ROC-AUC of class scores.

    All (trial, class) score/indicator pairs are pooled, and the AUC is
    computed by the rank-statistic formulation with midranks for ties, so
    it equals the exact fraction of correctly ordered pairs (ties half).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.ndim != 2 or s.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"bad shapes: scores {s.shape}, labels {y.shape}")
    if np.unique(y).size < 2:
        raise SingleClassTest("ROC-AUC needs at least two classes present")
    if n_classes is None:
        n_classes = s.shape[1]
    onehot = np.zeros_like(s, dtype=bool)
    onehot[np.arange(y.size), y] = True
    flat_scores = s.ravel()
    flat_pos = onehot.ravel()
    n_pos = int(flat_pos.sum())
    n_neg = flat_pos.size - n_pos
    ranks = scipy.stats.rankdata(flat_scores)
    rank_sum = float(ranks[flat_pos].sum())
    u_stat = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)


def roc_curve_micro(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pooled one-vs-rest ROC curve points (fpr, tpr), threshold descending."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    onehot = np.zeros_like(s, dtype=bool)
    onehot[np.arange(y.size), y] = True
    flat_scores = s.ravel()
    flat_pos = onehot.ravel()
    order = np.argsort(-flat_scores, kind="stable")
    sorted_pos = flat_pos[order].astype(np.float64)
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(1.0 - sorted_pos)
    distinct = np.flatnonzero(np.diff(flat_scores[order])) if order.size > 1 else np.array([], dtype=int)
    idx = np.concatenate([distinct, [order.size - 1]]) if order.size else np.array([], dtype=int)
    tpr = np.concatenate([[0.0], tp[idx] / max(tp[-1], 1.0)])
    fpr = np.concatenate([[0.0], fp[idx] / max(fp[-1], 1.0)])
    return fpr, tpr


def stratified_fold_ids(
    labels: np.ndarray,
    trial_keys: np.ndarray,
    n_folds: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-row fold assignment, class-balanced to within one trial.

    Rows of each class are ordered by trial key, shuffled with the given
    generator, and dealt round-robin, so assignments are invariant to row
    permutation of the input.
    """
    y = np.asarray(labels)
    ids = np.full(y.size, -1, dtype=np.int64)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < 2:
            raise ClassTooSmall(f"class {cls} has {members.size} trials, need at least 2")
        members = members[np.argsort(np.asarray(trial_keys)[members], kind="stable")]
        perm = rng.permutation(members.size)
        ids[members[perm]] = np.arange(members.size) % n_folds
    return ids


def stratified_split(
    labels: np.ndarray,
    trial_keys: np.ndarray,
    test_fraction: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded class-stratified (train_rows, test_rows) split by trial key."""
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(labels)
    train: list[np.ndarray] = []
    test: list[np.ndarray] = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < 2:
            raise ClassTooSmall(f"class {cls} has {members.size} trials, need at least 2")
        members = members[np.argsort(np.asarray(trial_keys)[members], kind="stable")]
        perm = rng.permutation(members.size)
        n_test = min(max(1, int(round(test_fraction * members.size))), members.size - 1)
        test.append(members[perm[:n_test]])
        train.append(members[perm[n_test:]])
    train_rows = np.sort(np.concatenate(train))
    test_rows = np.sort(np.concatenate(test))
    return train_rows, test_rows


@dataclass(frozen=True)
class SearchConfig:
    """Tunables of the incremental feature search."""

    repeats: int = 10
    n_folds: int = 5
    epsilon: float = 1e-3
    patience: int = 30
    test_fraction: float = 0.2
    l2_strength: float = 1.0
    max_features: int | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.repeats < 1 or self.n_folds < 2:
            raise ConfigError("need repeats >= 1 and n_folds >= 2")
        if self.epsilon <= 0 or self.patience < 1:
            raise ConfigError("need epsilon > 0 and patience >= 1")
        if not (0.0 < self.test_fraction < 1.0):
            raise ConfigError("test_fraction must be in (0, 1)")


@dataclass(frozen=True)
class SearchResult:
    """Accuracy trajectories of the incremental feature search.

    Arrays are indexed by feature count minus one; ``d_values[i]`` keeps
    the actual count. Validation accuracies are (n_counts, repeats)
    matrices; shuffled variants are the permuted-label baseline.
    """

    ranking: tuple[int, ...]
    d_values: tuple[int, ...]
    mlr_val_acc: np.ndarray
    mlr_val_acc_shuffled: np.ndarray
    knn_val_acc: np.ndarray
    knn_val_acc_shuffled: np.ndarray
    mlr_train_acc_mean: np.ndarray
    test_mlr_acc: np.ndarray
    test_knn_acc: np.ndarray
    test_auc: np.ndarray
    stopped_early: bool
    stop_d: int

    def mean_val_acc(self) -> np.ndarray:
        return self.mlr_val_acc.mean(axis=1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ranking": list(self.ranking),
            "d_values": list(self.d_values),
            "mlr_val_acc_mean": [float(v) for v in self.mlr_val_acc.mean(axis=1)],
            "mlr_val_acc_shuffled_mean": [float(v) for v in self.mlr_val_acc_shuffled.mean(axis=1)],
            "knn_val_acc_mean": [float(v) for v in self.knn_val_acc.mean(axis=1)],
            "knn_val_acc_shuffled_mean": [float(v) for v in self.knn_val_acc_shuffled.mean(axis=1)],
            "mlr_train_acc_mean": [float(v) for v in self.mlr_train_acc_mean],
            "test_mlr_acc": [float(v) for v in self.test_mlr_acc],
            "test_knn_acc": [float(v) for v in self.test_knn_acc],
            "test_auc": [float(v) for v in self.test_auc],
            "stopped_early": self.stopped_early,
            "stop_d": self.stop_d,
        }


def incremental_feature_search(dataset: FeatureDataset, config: SearchConfig | None = None) -> SearchResult:
    """Grow the feature set along an importance ranking, scoring each size.

    One stratified train/test split is drawn; features are ranked by a
    full-feature fit on the training side. For each feature count d the
    top-d features are scored by repeated stratified K-fold
    cross-validation (true labels and a permuted-label baseline, the
    permutation redrawn each repetition). The search stops early once the
    best mean accuracy of the last ``patience`` counts improves on the
    value ``patience`` counts back by less than ``epsilon``.
    """
    cfg = config or SearchConfig()
    cfg.validate()
    if dataset.n_classes < 2:
        raise ClassTooSmall("need at least 2 classes")

    seeds = np.random.SeedSequence(cfg.seed).spawn(1 + 2 * cfg.repeats)
    split_rng = np.random.default_rng(seeds[0])
    train_rows, test_rows = stratified_split(
        dataset.labels, dataset.trial_keys, cfg.test_fraction, split_rng
    )
    train = dataset.take(train_rows)
    test = dataset.take(test_rows)

    mean, std = fit_standardizer(train.features)
    ranking_model = train_mlr(
        apply_standardizer(train.features, mean, std), train.labels, dataset.n_classes, cfg.l2_strength
    )
    ranking = rank_features(ranking_model)

    fold_ids = []
    permuted_labels = []
    for r in range(cfg.repeats):
        fold_rng = np.random.default_rng(seeds[1 + r])
        perm_rng = np.random.default_rng(seeds[1 + cfg.repeats + r])
        fold_ids.append(stratified_fold_ids(train.labels, train.trial_keys, cfg.n_folds, fold_rng))
        permuted_labels.append(train.labels[perm_rng.permutation(train.n_trials)])

    d_max = dataset.n_features if cfg.max_features is None else min(cfg.max_features, dataset.n_features)
    mlr_val = np.zeros((d_max, cfg.repeats))
    mlr_val_shuf = np.zeros((d_max, cfg.repeats))
    knn_val = np.zeros((d_max, cfg.repeats))
    knn_val_shuf = np.zeros((d_max, cfg.repeats))
    mlr_train_mean = np.zeros(d_max)
    test_mlr = np.zeros(d_max)
    test_knn = np.zeros(d_max)
    test_auc = np.zeros(d_max)

    stopped_early = False
    stop_d = d_max
    for d_idx in range(d_max):
        cols = ranking[: d_idx + 1]
        x_train = train.features[:, cols]
        x_test = test.features[:, cols]
        train_acc_folds: list[float] = []
        for r in range(cfg.repeats):
            ids = fold_ids[r]
            y_shuf = permuted_labels[r]
            acc_m, acc_ms, acc_k, acc_ks = [], [], [], []
            for fold in range(cfg.n_folds):
                va = ids == fold
                tr = ~va
                if not va.any() or not tr.any():
                    continue
                mu, sigma = fit_standardizer(x_train[tr])
                xt = apply_standardizer(x_train[tr], mu, sigma)
                xv = apply_standardizer(x_train[va], mu, sigma)
                model = train_mlr(xt, train.labels[tr], dataset.n_classes, cfg.l2_strength)
                acc_m.append(float(np.mean(model.predict(xv) == train.labels[va])))
                train_acc_folds.append(float(np.mean(model.predict(xt) == train.labels[tr])))
                acc_k.append(float(np.mean(knn1_predict(xt, train.labels[tr], xv) == train.labels[va])))
                model_s = train_mlr(xt, y_shuf[tr], dataset.n_classes, cfg.l2_strength)
                acc_ms.append(float(np.mean(model_s.predict(xv) == y_shuf[va])))
                acc_ks.append(float(np.mean(knn1_predict(xt, y_shuf[tr], xv) == y_shuf[va])))
            mlr_val[d_idx, r] = np.mean(acc_m)
            mlr_val_shuf[d_idx, r] = np.mean(acc_ms)
            knn_val[d_idx, r] = np.mean(acc_k)
            knn_val_shuf[d_idx, r] = np.mean(acc_ks)
        mlr_train_mean[d_idx] = np.mean(train_acc_folds)

        mu, sigma = fit_standardizer(x_train)
        xt_all = apply_standardizer(x_train, mu, sigma)
        xq_all = apply_standardizer(x_test, mu, sigma)
        final_model = train_mlr(xt_all, train.labels, dataset.n_classes, cfg.l2_strength)
        test_mlr[d_idx] = float(np.mean(final_model.predict(xq_all) == test.labels))
        test_knn[d_idx] = float(np.mean(knn1_predict(xt_all, train.labels, xq_all) == test.labels))
        test_auc[d_idx] = roc_auc_ovr_micro(final_model.predict_proba(xq_all), test.labels)

        mean_acc = mlr_val[: d_idx + 1].mean(axis=1)
        if d_idx >= cfg.patience:
            window_best = float(mean_acc[d_idx - cfg.patience + 1 :].max())
            reference = float(mean_acc[d_idx - cfg.patience])
            if window_best - reference < cfg.epsilon:
                stopped_early = True
                stop_d = d_idx + 1
                break

    n_kept = stop_d
    return SearchResult(
        ranking=tuple(int(i) for i in ranking),
        d_values=tuple(range(1, n_kept + 1)),
        mlr_val_acc=mlr_val[:n_kept],
        mlr_val_acc_shuffled=mlr_val_shuf[:n_kept],
        knn_val_acc=knn_val[:n_kept],
        knn_val_acc_shuffled=knn_val_shuf[:n_kept],
        mlr_train_acc_mean=mlr_train_mean[:n_kept],
        test_mlr_acc=test_mlr[:n_kept],
        test_knn_acc=test_knn[:n_kept],
        test_auc=test_auc[:n_kept],
        stopped_early=stopped_early,
        stop_d=stop_d,
    )


@dataclass(frozen=True)
class EvalConfig:
    """Tunables of the stage-by-stage evaluation."""

    bands: tuple[str, ...] = ("full",)
    repeats: int = 100
    epoch_len_p: int = 500
    test_fraction: float = 0.2
    l2_strength: float = 1.0
    seed: int = 0
    balance_before_split: bool = True
    run_search: bool = True
    search: SearchConfig = field(default_factory=SearchConfig)

    def validate(self) -> None:
        for band in self.bands:
            if band not in BAND_EDGES:
                raise ConfigError(f"unknown band {band!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not (0.0 < self.test_fraction < 1.0):
            raise ConfigError("test_fraction must be in (0, 1)")
        self.search.validate()


@dataclass(frozen=True)
class StageBandResult:
    """Evaluation of one pipeline stage output in one band."""

    stage: str
    band: str
    n_trials: int
    n_features: int
    class_names: tuple[str, ...]
    mlr_test_acc: np.ndarray
    mlr_train_acc: np.ndarray
    mlr_test_acc_shuffled: np.ndarray
    knn_test_acc: np.ndarray
    knn_test_acc_shuffled: np.ndarray
    roc_auc: float
    roc_fpr: np.ndarray
    roc_tpr: np.ndarray
    search: SearchResult | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "band": self.band,
            "n_trials": self.n_trials,
            "n_features": self.n_features,
            "class_names": list(self.class_names),
            "mlr_test_acc_mean": float(self.mlr_test_acc.mean()),
            "mlr_test_acc_std": float(self.mlr_test_acc.std()),
            "mlr_train_acc_mean": float(self.mlr_train_acc.mean()),
            "mlr_test_acc_shuffled_mean": float(self.mlr_test_acc_shuffled.mean()),
            "knn_test_acc_mean": float(self.knn_test_acc.mean()),
            "knn_test_acc_shuffled_mean": float(self.knn_test_acc_shuffled.mean()),
            "mlr_test_acc": [float(v) for v in self.mlr_test_acc],
            "mlr_train_acc": [float(v) for v in self.mlr_train_acc],
            "mlr_test_acc_shuffled": [float(v) for v in self.mlr_test_acc_shuffled],
            "knn_test_acc": [float(v) for v in self.knn_test_acc],
            "knn_test_acc_shuffled": [float(v) for v in self.knn_test_acc_shuffled],
            "roc_auc": float(self.roc_auc),
            "roc_fpr": [float(v) for v in self.roc_fpr],
            "roc_tpr": [float(v) for v in self.roc_tpr],
            "search": None if self.search is None else self.search.to_dict(),
        }


@dataclass(frozen=True)
class EvalReport:
    """All stage-by-band evaluation results plus the configuration used."""

    results: tuple[StageBandResult, ...]
    config: EvalConfig

    def to_dict(self) -> dict[str, Any]:
        cfg = dataclasses.asdict(self.config)
        cfg["bands"] = list(self.config.bands)
        cfg["search"] = dataclasses.asdict(self.config.search)
        return {"config": cfg, "results": [r.to_dict() for r in self.results]}


def _evaluate_dataset(
    dataset: FeatureDataset,
    stage: str,
    config: EvalConfig,
) -> StageBandResult:
    """Repeated-split accuracy distributions plus one ROC and one search."""
    balanced = balance_classes(dataset, seed=config.seed) if config.balance_before_split else dataset
    seeds = np.random.SeedSequence(config.seed).spawn(2 * config.repeats)
    mlr_test = np.zeros(config.repeats)
    mlr_train = np.zeros(config.repeats)
    mlr_test_shuf = np.zeros(config.repeats)
    knn_test = np.zeros(config.repeats)
    knn_test_shuf = np.zeros(config.repeats)
    roc_auc_value = 0.0
    roc_fpr = np.array([0.0, 1.0])
    roc_tpr = np.array([0.0, 1.0])
    for i in range(config.repeats):
        rng = np.random.default_rng(seeds[i])
        ds = balanced
        train_rows, test_rows = stratified_split(ds.labels, ds.trial_keys, config.test_fraction, rng)
        train = ds.take(train_rows)
        test = ds.take(test_rows)
        if not config.balance_before_split:
            train = balance_classes(train, seed=config.seed + i)
        mu, sigma = fit_standardizer(train.features)
        xt = apply_standardizer(train.features, mu, sigma)
        xq = apply_standardizer(test.features, mu, sigma)
        model = train_mlr(xt, train.labels, ds.n_classes, config.l2_strength)
        mlr_test[i] = float(np.mean(model.predict(xq) == test.labels))
        mlr_train[i] = float(np.mean(model.predict(xt) == train.labels))
        knn_test[i] = float(np.mean(knn1_predict(xt, train.labels, xq) == test.labels))
        shuffle_rng = np.random.default_rng(seeds[config.repeats + i])
        y_shuf = train.labels[shuffle_rng.permutation(train.n_trials)]
        model_s = train_mlr(xt, y_shuf, ds.n_classes, config.l2_strength)
        mlr_test_shuf[i] = float(np.mean(model_s.predict(xq) == test.labels))
        knn_test_shuf[i] = float(np.mean(knn1_predict(xt, y_shuf, xq) == test.labels))
        if i == 0:
            proba = model.predict_proba(xq)
            roc_auc_value = roc_auc_ovr_micro(proba, test.labels)
            roc_fpr, roc_tpr = roc_curve_micro(proba, test.labels)
    search = None
    if config.run_search:
        search = incremental_feature_search(
            balanced,
            SearchConfig(
                repeats=config.search.repeats,
                n_folds=config.search.n_folds,
                epsilon=config.search.epsilon,
                patience=config.search.patience,
                test_fraction=config.search.test_fraction,
                l2_strength=config.l2_strength,
                max_features=config.search.max_features,
                seed=config.seed,
            ),
        )
    return StageBandResult(
        stage=stage,
        band=dataset.band,
        n_trials=balanced.n_trials,
        n_features=balanced.n_features,
        class_names=balanced.class_names,
        mlr_test_acc=mlr_test,
        mlr_train_acc=mlr_train,
        mlr_test_acc_shuffled=mlr_test_shuf,
        knn_test_acc=knn_test,
        knn_test_acc_shuffled=knn_test_shuf,
        roc_auc=roc_auc_value,
        roc_fpr=roc_fpr,
        roc_tpr=roc_tpr,
        search=search,
    )


def evaluate_pipeline_steps(
    staged_recordings: Sequence[tuple[str, Recording]],
    config: EvalConfig | None = None,
) -> EvalReport:
    """Score every (stage output, band) combination by decodability.

    Each recording must carry the trial events. Features are the mean
    spectral amplitudes of the band-restricted epochs; every combination
    gets accuracy distributions over seeded repeated splits, a pooled ROC,
    and optionally the incremental feature search.
    """
    from .pipeline import epoch_recording  # local import to keep modules acyclic

    cfg = config or EvalConfig()
    cfg.validate()
    results: list[StageBandResult] = []
    for stage, recording in staged_recordings:
        if not recording.events:
            raise ShapeMismatch(f"stage {stage!r} recording carries no events")
        for band in cfg.bands:
            segmented = band_segment(recording, band)
            epoched = epoch_recording(segmented, cfg.epoch_len_p)
            dataset = mean_spectral_amplitude(epoched)
            dataset = FeatureDataset(
                features=dataset.features,
                labels=dataset.labels,
                class_names=dataset.class_names,
                trial_keys=dataset.trial_keys,
                band=band,
                feature_channel_indices=dataset.feature_channel_indices,
            )
            results.append(_evaluate_dataset(dataset, stage, cfg))
    return EvalReport(results=tuple(results), config=cfg)
