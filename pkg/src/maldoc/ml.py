"""Classifiers, fusion, and the stratified cross-validation harness.

Everything here is binary (benign=0, malware=1) and deterministic: KNN
breaks distance ties by the lower training index, the forest draws all of
its randomness from one seeded PCG64 generator in a fixed order, and the
voting ensemble resolves a split vote toward malware (the fail-safe
direction for a detector).

Standardization statistics are fit on training rows only; the harness never
lets a held-out row touch them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, IO, Sequence, Union

import numpy as np

from .core import FeatureVector

DEFAULT_KNN_K = 3
DEFAULT_RF_TREES = 100
DEFAULT_FOLDS = 10

ArrayLike = Union[FeatureVector, np.ndarray, Sequence[float]]


def _as_matrix(x: ArrayLike) -> np.ndarray:
    if isinstance(x, FeatureVector):
        x = x.values
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a vector or matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class LabeledSet:
    """Feature matrix with binary labels and the feature kind that built it."""

    vectors: np.ndarray
    labels: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        vecs = np.ascontiguousarray(self.vectors, dtype=np.float64)
        labs = np.ascontiguousarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "labels", labs)
        if vecs.ndim != 2:
            raise ValueError("vectors must be a 2-D matrix")
        if labs.shape != (vecs.shape[0],):
            raise ValueError("one label per row required")
        if vecs.shape[0] < 2:
            raise ValueError("a labeled set needs at least two samples")
        if not np.isin(labs, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dims(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class FeatureScaler:
    """Per-dimension z-scoring with zero-variance dimensions pinned to 0."""

    mean: np.ndarray
    scale: np.ndarray  # reciprocal std, 0 where the training std was 0

    @classmethod
    def fit(cls, matrix: np.ndarray) -> "FeatureScaler":
        matrix = _as_matrix(matrix)
        mean = matrix.mean(axis=0)
        std = matrix.std(axis=0)
        scale = np.divide(1.0, std, out=np.zeros_like(std), where=std > 0.0)
        return cls(mean=mean, scale=scale)

    def transform(self, matrix: ArrayLike) -> np.ndarray:
        matrix = _as_matrix(matrix)
        if matrix.shape[1] != self.mean.shape[0]:
            raise ValueError("scaler dimensionality mismatch")
        return (matrix - self.mean) * self.scale


def concat_features(
    parts: Sequence[FeatureVector],
    scalers: Sequence[FeatureScaler] | None = None,
) -> FeatureVector:
    """Standardize each part with its training-fit scaler, then concatenate.

    ``scalers=None`` concatenates raw values; classifier harnesses always
    pass scalers.
    """
    if not parts:
        raise ValueError("nothing to fuse")
    if scalers is None:
        pieces = [p.values for p in parts]
    else:
        if len(scalers) != len(parts):
            raise ValueError("one scaler per part required")
        pieces = [s.transform(p.values)[0] for p, s in zip(parts, scalers)]
    return FeatureVector(kind="fused", values=np.concatenate(pieces))


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class KnnModel:
    k: int
    vectors: np.ndarray
    labels: np.ndarray
    seed: int = 0

    @property
    def kind(self) -> str:
        return "knn"

    @property
    def dims(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; feature == -1 marks a leaf, value its class fraction."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


@dataclass(frozen=True)
class RfModel:
    trees: tuple[Tree, ...]
    dims: int
    seed: int

    @property
    def kind(self) -> str:
        return "rf"


@dataclass(frozen=True)
class VecModel:
    constituents: tuple
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.constituents) < 2:
            raise ValueError("a voting ensemble needs at least two constituents")

    @property
    def kind(self) -> str:
        return "vec"

    @property
    def dims(self) -> int:
        return self.constituents[0].dims


Model = Union[KnnModel, RfModel, VecModel]


def _require_both_classes(labels: np.ndarray) -> None:
    if labels.min() == labels.max():
        raise ValueError("training data must contain both classes")


def train_knn(data: LabeledSet, k: int = DEFAULT_KNN_K) -> KnnModel:
    """Store the training set; all the work happens at query time."""
    if k < 1 or k > data.n:
        raise ValueError(f"k must be in [1, {data.n}], got {k}")
    if k % 2 == 0:
        raise ValueError("k must be odd so votes cannot tie")
    _require_both_classes(data.labels)
    return KnnModel(k=k, vectors=data.vectors.copy(), labels=data.labels.copy())


def _knn_scores(model: KnnModel, queries: np.ndarray) -> np.ndarray:
    scores = np.empty(queries.shape[0], dtype=np.float64)
    # chunk the distance matrix to bound memory on big query sets
    step = max(1, 8_000_000 // max(1, model.vectors.shape[0] * model.dims))
    for lo in range(0, queries.shape[0], step):
        block = queries[lo : lo + step]
        diffs = block[:, None, :] - model.vectors[None, :, :]
        dists = np.einsum("qnd,qnd->qn", diffs, diffs)
        # stable sort: equal distances resolve to the lower training index
        nearest = np.argsort(dists, axis=1, kind="stable")[:, : model.k]
        scores[lo : lo + block.shape[0]] = model.labels[nearest].mean(axis=1)
    return scores


def _grow_tree(
    X: np.ndarray, y: np.ndarray, rng: np.random.Generator, n_candidates: int
) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(idx: np.ndarray) -> int:
        node = new_node()
        ys = y[idx]
        n = idx.shape[0]
        ones = int(ys.sum())
        if ones == 0 or ones == n or n < 2:
            value[node] = ones / n
            return node

        best_score = np.inf
        best: tuple[int, float] | None = None
        for f in rng.permutation(X.shape[1])[:n_candidates]:
            xs = X[idx, f]
            order = np.argsort(xs, kind="stable")
            xv = xs[order]
            boundary = np.flatnonzero(xv[1:] != xv[:-1])
            if boundary.size == 0:
                continue  # candidate is constant in this node
            cum_ones = np.cumsum(y[idx][order])
            nl = boundary + 1.0
            nr = n - nl
            ol = cum_ones[boundary].astype(np.float64)
            orr = ones - ol
            gini_l = 1.0 - (ol / nl) ** 2 - ((nl - ol) / nl) ** 2
            gini_r = 1.0 - (orr / nr) ** 2 - ((nr - orr) / nr) ** 2
            scores = (nl * gini_l + nr * gini_r) / n
            pick = int(np.argmin(scores))
            if scores[pick] < best_score:
                best_score = float(scores[pick])
                cut = boundary[pick]
                best = (int(f), float((xv[cut] + xv[cut + 1]) / 2.0))

        if best is None:
            # impure but unsplittable on the sampled candidates: leaf
            value[node] = ones / n
            return node

        f, thr = best
        mask = X[idx, f] < thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(idx[mask])
        right[node] = build(idx[~mask])
        return node

    build(np.arange(X.shape[0]))
    return Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
    )


def train_rf(data: LabeledSet, n_trees: int = DEFAULT_RF_TREES, seed: int = 0) -> RfModel:
    """Bootstrap-aggregated Gini trees grown to purity, no depth cap.

    Each split examines floor(sqrt(D)) features sampled without
    replacement.  Same seed, same data: bit-identical forest.
    """
    if n_trees < 1:
        raise ValueError("need at least one tree")
    _require_both_classes(data.labels)
    rng = np.random.Generator(np.random.PCG64(seed))
    n_candidates = max(1, int(math.isqrt(data.dims)))
    trees = []
    for _ in range(n_trees):
        draw = rng.integers(0, data.n, size=data.n)
        trees.append(_grow_tree(data.vectors[draw], data.labels[draw], rng, n_candidates))
    return RfModel(trees=tuple(trees), dims=data.dims, seed=seed)


def _tree_scores(tree: Tree, queries: np.ndarray) -> np.ndarray:
    out = np.empty(queries.shape[0], dtype=np.float64)
    stack = [(0, np.arange(queries.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if tree.feature[node] < 0:
            out[idx] = tree.value[node]
            continue
        mask = queries[idx, tree.feature[node]] < tree.threshold[node]
        stack.append((int(tree.left[node]), idx[mask]))
        stack.append((int(tree.right[node]), idx[~mask]))
    return out


def train_vec(constituents: Sequence[Model], seed: int = 0) -> VecModel:
    """Wrap already-trained constituents into a majority-voting ensemble."""
    return VecModel(constituents=tuple(constituents), seed=seed)


def predict_batch(model: Model, queries: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """(labels, scores) for each query row; score is the malware confidence."""
    X = _as_matrix(queries)
    if X.shape[1] != model.dims:
        raise ValueError(f"model expects {model.dims} dims, got {X.shape[1]}")
    if isinstance(model, KnnModel):
        scores = _knn_scores(model, X)
        labels = (scores > 0.5).astype(np.int64)  # k odd: never exactly 0.5
    elif isinstance(model, RfModel):
        scores = np.mean([_tree_scores(t, X) for t in model.trees], axis=0)
        labels = (scores >= 0.5).astype(np.int64)
    elif isinstance(model, VecModel):
        votes, parts = zip(*(predict_batch(m, X) for m in model.constituents))
        ones = np.sum(votes, axis=0)
        # split votes go to malware: wrongly flagging is cheaper than missing
        labels = (2 * ones >= len(votes)).astype(np.int64)
        scores = np.mean(parts, axis=0)
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")
    return labels, scores


def predict(model: Model, x: ArrayLike) -> tuple[int, float]:
    labels, scores = predict_batch(model, x)
    if labels.shape[0] != 1:
        raise ValueError("predict takes a single vector; use predict_batch")
    return int(labels[0]), float(scores[0])


def accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.size == 0:
        raise ValueError("label arrays must be non-empty and congruent")
    return float(np.mean(predicted == truth))


# --------------------------------------------------------------------------
# joint-feature agreement


def _jfs_union(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean(a | b))


JFS_STRATEGIES: dict[str, Callable[[np.ndarray, np.ndarray], float]] = {
    "union-correctness": _jfs_union,
}


def jfs_score(
    correct_a: Sequence[bool], correct_b: Sequence[bool], strategy: str = "union-correctness"
) -> float:
    """Agreement benefit of two detectors from their per-sample correctness.

    The default scores the fraction of samples at least one detector got
    right.  Alternative definitions plug in through ``JFS_STRATEGIES``.
    """
    a = np.asarray(correct_a, dtype=bool)
    b = np.asarray(correct_b, dtype=bool)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two aligned correctness vectors of length >= 2")
    try:
        fn = JFS_STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown jfs strategy {strategy!r}") from None
    return fn(a, b)


# --------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class ModelSpec:
    """What to train per fold: knn, rf, or the vec ensemble of both."""

    kind: str
    k: int = DEFAULT_KNN_K
    n_trees: int = DEFAULT_RF_TREES

    def __post_init__(self) -> None:
        if self.kind not in ("knn", "rf", "vec"):
            raise ValueError(f"unknown model kind {self.kind!r}")


def train_model(spec: ModelSpec, data: LabeledSet, seed: int = 0) -> Model:
    if spec.kind == "knn":
        return train_knn(data, k=spec.k)
    if spec.kind == "rf":
        return train_rf(data, n_trees=spec.n_trees, seed=seed)
    knn = train_knn(data, k=spec.k)
    rf = train_rf(data, n_trees=spec.n_trees, seed=seed)
    return train_vec((knn, rf), seed=seed)


@dataclass(frozen=True)
class CvReport:
    """Per-fold accuracies of one (feature, model) experiment."""

    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    model_kind: str
    feature_kind: str
    seed: int
    dims: int

    def __post_init__(self) -> None:
        if len(self.fold_accuracies) < 2:
            raise ValueError("a cross-validation needs at least two folds")
        mean = float(np.mean(self.fold_accuracies))
        if abs(mean - self.mean_accuracy) > 1e-12:
            raise ValueError("mean_accuracy must equal the mean of the folds")
        if any(not (0.0 <= a <= 1.0) for a in self.fold_accuracies):
            raise ValueError("accuracies must lie in [0, 1]")


def stratified_folds(labels: np.ndarray, n_folds: int = DEFAULT_FOLDS, seed: int = 0) -> list[np.ndarray]:
    """Seeded per-class shuffle dealt into ``n_folds`` index chunks.

    Every class needs at least ``n_folds`` members; per-fold class counts
    then deviate from the global proportions by at most one sample.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if n_folds < 2:
        raise ValueError("need at least two folds")
    rng = np.random.Generator(np.random.PCG64(seed))
    buckets: list[list[np.ndarray]] = [[] for _ in range(n_folds)]
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size < n_folds:
            raise ValueError(
                f"class {cls} has {members.size} samples, fewer than {n_folds} folds"
            )
        members = members[rng.permutation(members.size)]
        for f, chunk in enumerate(np.array_split(members, n_folds)):
            buckets[f].append(chunk)
    return [np.sort(np.concatenate(parts)) for parts in buckets]


def _fold_seed(seed: int, fold: int) -> int:
    # distinct deterministic stream per fold
    return (seed * 1_000_003 + fold) % 2**31


FoldBuilder = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def cross_validate_builder(
    labels: np.ndarray,
    build: FoldBuilder,
    model_spec: ModelSpec,
    feature_kind: str,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> CvReport:
    """CV engine over a per-fold feature builder.

    ``build(train_idx, test_idx)`` returns raw (train, test) matrices; the
    engine standardizes with training statistics and scores each fold.
    Exists so features that are themselves fit on training data (for
    example a training-split vocabulary) stay leak-free.
    """
    labels = np.asarray(labels, dtype=np.int64)
    fold_indices = stratified_folds(labels, folds, seed)
    accuracies = []
    dims = 0
    for f, test_idx in enumerate(fold_indices):
        train_idx = np.sort(np.concatenate([fold_indices[g] for g in range(folds) if g != f]))
        raw_train, raw_test = build(train_idx, test_idx)
        scaler = FeatureScaler.fit(raw_train)
        train = LabeledSet(scaler.transform(raw_train), labels[train_idx], kind=feature_kind)
        model = train_model(model_spec, train, seed=_fold_seed(seed, f))
        predicted, _ = predict_batch(model, scaler.transform(raw_test))
        accuracies.append(accuracy(predicted, labels[test_idx]))
        dims = raw_train.shape[1]
    return CvReport(
        fold_accuracies=tuple(accuracies),
        mean_accuracy=float(np.mean(accuracies)),
        model_kind=model_spec.kind,
        feature_kind=feature_kind,
        seed=seed,
        dims=dims,
    )


def cross_validate(
    data: LabeledSet, model_spec: ModelSpec, folds: int = DEFAULT_FOLDS, seed: int = 0
) -> CvReport:
    """Stratified k-fold accuracy of one model spec on a fixed feature set."""

    def build(train_idx: np.ndarray, test_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return data.vectors[train_idx], data.vectors[test_idx]

    return cross_validate_builder(data.labels, build, model_spec, data.kind, folds, seed)


# --------------------------------------------------------------------------
# persistence: versioned flat text, floats via repr for exact round-trips

_MAGIC = "maldoc-model v1"


def _write_model(model: Model, out: IO[str]) -> None:
    out.write(f"{_MAGIC}\n")
    out.write(f"kind {model.kind}\n")
    out.write(f"seed {model.seed}\n")
    out.write(f"dims {model.dims}\n")
    if isinstance(model, KnnModel):
        out.write(f"k {model.k}\n")
        out.write(f"n {model.vectors.shape[0]}\n")
        for row, label in zip(model.vectors, model.labels):
            out.write(" ".join([str(int(label))] + [repr(float(v)) for v in row]) + "\n")
    elif isinstance(model, RfModel):
        out.write(f"trees {len(model.trees)}\n")
        for tree in model.trees:
            out.write(f"tree {tree.feature.shape[0]}\n")
            for f, t, l, r, v in zip(
                tree.feature, tree.threshold, tree.left, tree.right, tree.value
            ):
                out.write(f"{int(f)} {repr(float(t))} {int(l)} {int(r)} {repr(float(v))}\n")
    elif isinstance(model, VecModel):
        out.write(f"constituents {len(model.constituents)}\n")
        for part in model.constituents:
            _write_model(part, out)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")


def save_model(model: Model, path: str | Path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as out:
        _write_model(model, out)


class _LineReader:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.at = 0

    def next(self) -> str:
        if self.at >= len(self.lines):
            raise ValueError("truncated model file")
        line = self.lines[self.at]
        self.at += 1
        return line

    def expect(self, key: str) -> str:
        line = self.next()
        head, _, rest = line.partition(" ")
        if head != key:
            raise ValueError(f"expected {key!r} in model file, found {head!r}")
        return rest


def _read_model(reader: _LineReader) -> Model:
    if reader.next() != _MAGIC:
        raise ValueError("not a model file (bad magic line)")
    kind = reader.expect("kind")
    seed = int(reader.expect("seed"))
    dims = int(reader.expect("dims"))
    if kind == "knn":
        k = int(reader.expect("k"))
        n = int(reader.expect("n"))
        vectors = np.empty((n, dims), dtype=np.float64)
        labels = np.empty(n, dtype=np.int64)
        for i in range(n):
            fields = reader.next().split(" ")
            labels[i] = int(fields[0])
            vectors[i] = [float(v) for v in fields[1:]]
        return KnnModel(k=k, vectors=vectors, labels=labels, seed=seed)
    if kind == "rf":
        n_trees = int(reader.expect("trees"))
        trees = []
        for _ in range(n_trees):
            n_nodes = int(reader.expect("tree"))
            feature = np.empty(n_nodes, dtype=np.int32)
            threshold = np.empty(n_nodes, dtype=np.float64)
            left = np.empty(n_nodes, dtype=np.int32)
            right = np.empty(n_nodes, dtype=np.int32)
            value = np.empty(n_nodes, dtype=np.float64)
            for i in range(n_nodes):
                f, t, l, r, v = reader.next().split(" ")
                feature[i], threshold[i] = int(f), float(t)
                left[i], right[i], value[i] = int(l), int(r), float(v)
            trees.append(Tree(feature, threshold, left, right, value))
        return RfModel(trees=tuple(trees), dims=dims, seed=seed)
    if kind == "vec":
        count = int(reader.expect("constituents"))
        return VecModel(
            constituents=tuple(_read_model(reader) for _ in range(count)), seed=seed
        )
    raise ValueError(f"unknown model kind {kind!r} in model file")


def load_model(path: str | Path) -> Model:
    text = Path(path).read_text(encoding="ascii")
    return _read_model(_LineReader(text.splitlines()))
