"""Bag of ARSRG Words: a k-means codebook over leaf descriptors and per-graph word histograms."""
from __future__ import annotations
import csv
import io
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans, kmeans_plusplus
from sklearn.exceptions import ConvergenceWarning

from arsrg.constants import CODEBOOK_FORMAT, CODEBOOK_FORMAT_VERSION, DESCRIPTOR_SIZE
from arsrg.documents import JsonDocument, require, require_type
from arsrg.exceptions import DimensionMismatch, EmptyTrainingSet, FormatError, InsufficientData
from arsrg.features.keypoints import descriptor_matrix
from arsrg.graph.arsrg_graph import Arsrg
from arsrg.utils import yaml_cache
from arsrg.utils.arsrg_utils import Timer
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()


def _cfg(key: str, default):
    return config.setting('embedding', key, default)


@dataclass(frozen=True, eq=False)
class Codebook(JsonDocument):
    """k visual words as a (k, 128) array of cluster centers."""
    centers: np.ndarray
    seed: int = 0

    format_name = CODEBOOK_FORMAT
    format_version = CODEBOOK_FORMAT_VERSION

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError(f'Expected a (k, d) center array with k >= 1, got shape {centers.shape}')
        if not np.all(np.isfinite(centers)):
            raise ValueError('Codebook centers must be finite')
        centers.setflags(write=False)
        object.__setattr__(self, 'centers', centers)

    def __repr__(self):
        return f'<Codebook k={self.k} seed={self.seed}>'

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])

    def as_dict(self) -> dict:
        return {'k': self.k, 'seed': self.seed, 'centers': self.centers.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Codebook":
        k = require_type(require(data, 'k'), int, 'k')
        centers = require_type(require(data, 'centers'), list, 'centers')
        if len(centers) != k:
            raise FormatError(f'Expected {k} centers, got {len(centers)}', 'centers')
        try:
            return cls(np.array(centers, dtype=np.float64), int(data.get('seed', 0)))
        except (TypeError, ValueError) as e:
            raise FormatError(str(e), 'centers') from e


@dataclass(frozen=True, eq=False)
class Histogram(object):
    """Word counts of one graph, L1 normalized when `normalized` is set."""
    counts: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64).reshape(-1)
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)

    def __repr__(self):
        return f'<Histogram k={self.counts.size} mass={self.counts.sum():g} normalized={self.normalized}>'


def pooled_descriptors(graphs: Iterable[Arsrg]) -> np.ndarray:
    """All leaf descriptors of the graphs stacked into an (n, 128) array."""
    chunks = [descriptor_matrix(g.leaves) for g in graphs if g.leaves]
    return np.concatenate(chunks) if chunks else np.empty((0, DESCRIPTOR_SIZE))


def _kmeans(samples: np.ndarray, init: np.ndarray, max_iter: int, tol: float) -> KMeans:
    kmeans = KMeans(n_clusters=init.shape[0], init=init, n_init=1, max_iter=max_iter, tol=tol,
                    algorithm='lloyd')
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ConvergenceWarning)
        return kmeans.fit(samples)


def _check_samples(samples: np.ndarray, k: int) -> None:
    if k < 1:
        raise ValueError(f'k must be >= 1, got {k}')
    if samples.shape[0] < k:
        raise InsufficientData(f'{samples.shape[0]} training descriptors cannot make {k} words')


def objective_trace(samples: np.ndarray, k: int, seed: int, max_iter: int) -> List[float]:
    """k-means objective after 1..max_iter Lloyd iterations from the same seeded k-means++ start.

    Returns:
        list[float]: Sum of squared distances to the nearest center after each iteration count.

    """
    samples = np.asarray(samples, dtype=np.float64)
    _check_samples(samples, k)
    init, _ = kmeans_plusplus(samples, k, random_state=seed)
    return [float(_kmeans(samples, init, i, 0.0).inertia_) for i in range(1, max_iter + 1)]


def build_codebook(training: Sequence[Arsrg], k: int = None, seed: int = None, max_iter: int = None,
                   tol: float = None) -> Codebook:
    """Cluster the pooled leaf descriptors of the training graphs into k words.

    k-means++ seeding from `seed`, then Lloyd iterations until max_iter or convergence within tol.

    Args:
        training (Sequence[Arsrg]): Training graphs.
        k (int): Number of words.
        seed (int): Seed of the k-means++ start.
        max_iter (int): Iteration cap, default 100.
        tol (float): Convergence tolerance, default 1e-6.

    Returns:
        Codebook: The trained codebook.

    Raises:
        InsufficientData: If there are fewer training descriptors than k.

    """
    k = int(k if k is not None else _cfg('k', 64))
    seed = int(seed if seed is not None else _cfg('seed', 0))
    max_iter = int(max_iter if max_iter is not None else _cfg('max_iter', 100))
    tol = float(tol if tol is not None else _cfg('tol', 1e-6))
    samples = pooled_descriptors(training)
    _check_samples(samples, k)
    with Timer('build_codebook', logger):
        init, _ = kmeans_plusplus(samples, k, random_state=seed)
        kmeans = _kmeans(samples, init, max_iter, tol)
    logger.info('Trained %d words on %d descriptors in %d iterations', k, samples.shape[0], kmeans.n_iter_)
    return Codebook(kmeans.cluster_centers_, seed)


def assign_words(descriptors: np.ndarray, cb: Codebook) -> np.ndarray:
    """Nearest codebook word of each descriptor, ties to the lowest index."""
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.size == 0:
        return np.empty(0, dtype=np.int64)
    if descriptors.shape[1] != cb.centers.shape[1]:
        raise DimensionMismatch(f'Descriptors have {descriptors.shape[1]} values, codebook {cb.centers.shape[1]}')
    return np.argmin(cdist(descriptors, cb.centers, 'sqeuclidean'), axis=1)


def embed(a: Arsrg, cb: Codebook, normalize: bool = False) -> Histogram:
    """Hard-assign every leaf to its nearest word and count.

    Args:
        a (Arsrg): Graph to embed.
        cb (Codebook): Codebook.
        normalize (bool): L1 normalize the counts. Ignored for graphs without leaves.

    Returns:
        Histogram: k word counts.

    """
    words = assign_words(descriptor_matrix(a.leaves), cb)
    counts = np.bincount(words, minlength=cb.k).astype(np.float64)
    if normalize and words.size:
        return Histogram(counts / counts.sum(), True)
    return Histogram(counts, False)


def knn_classify(query_hist: Histogram, train: Sequence[Tuple[Histogram, Hashable]], k_nn: int = None) -> Hashable:
    """Majority label among the k_nn nearest training histograms by Euclidean distance.

    Equal distances keep training order. When several labels share the top vote count, the label of the single
    nearest item wins, even if that label is not among them.

    Raises:
        EmptyTrainingSet: If train is empty.

    """
    k_nn = int(k_nn if k_nn is not None else _cfg('k_nn', 1))
    if k_nn < 1:
        raise ValueError(f'k_nn must be >= 1, got {k_nn}')
    if not train:
        raise EmptyTrainingSet('knn_classify needs at least one training histogram')
    matrix = np.stack([h.counts for h, _ in train])
    if matrix.shape[1] != query_hist.counts.size:
        raise DimensionMismatch(f'Histogram sizes differ: {query_hist.counts.size} vs {matrix.shape[1]}')
    distances = np.linalg.norm(matrix - query_hist.counts, axis=1)
    nearest = np.argsort(distances, kind='stable')[:k_nn]
    labels = [train[i][1] for i in nearest]
    (winner, top), *rest = Counter(labels).most_common()
    if rest and rest[0][1] == top:
        return labels[0]
    return winner


def leave_one_out_accuracy(items: Sequence[Tuple[Histogram, Hashable]], k_nn: int = 1) -> float:
    """Fraction of items whose label knn_classify recovers from all the other items."""
    if len(items) < 2:
        raise EmptyTrainingSet('Leave one out needs at least two items')
    correct = sum(knn_classify(hist, [*items[:i], *items[i + 1:]], k_nn) == label
                  for i, (hist, label) in enumerate(items))
    return correct / len(items)


def embeddings_csv(rows: Iterable[Tuple[str, Histogram]]) -> str:
    """One CSV row per image: image_id,c0,...,c(k-1)."""
    rows = list(rows)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    k = rows[0][1].counts.size if rows else 0
    writer.writerow(['image_id', *[f'c{i}' for i in range(k)]])
    for image_id, hist in rows:
        writer.writerow([image_id, *[f'{v:.9g}' for v in hist.counts.tolist()]])
    return buffer.getvalue()
