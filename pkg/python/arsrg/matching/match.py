"""Asymmetric region by region ARSRG matching, the whole image baseline and database ranking."""
from __future__ import annotations
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from arsrg.constants import DESCRIPTOR_SIZE, MATCH_REPORT_FORMAT, MATCH_REPORT_FORMAT_VERSION
from arsrg.documents import JsonDocument, require, require_type
from arsrg.enums import Matcher
from arsrg.exceptions import DimensionMismatch, EmptyGraph, EmptyInput, FormatError
from arsrg.features.keypoints import Keypoint, descriptor_matrix
from arsrg.graph.arsrg_graph import Arsrg
from arsrg.graph.rag import region_filter_mask
from arsrg.utils import yaml_cache
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()

ALL_COMPATIBLE = 'all-compatible'


def _cfg(key: str, default):
    return config.setting('matching', key, default)


@dataclass(frozen=True)
class MatchParams(object):
    """Matching settings. Defaults come from the matching section of arsrg_cfg.yml.

    Attributes:
        rho (float): Ratio test threshold in (0, 1], lower rejects more false matches.
        min_region_px (int): Regions smaller than this are dropped on both sides before matching.
        region_pairing (str): Only "all-compatible", every surviving query region against every surviving
            target region.
        matcher (Matcher): REGION for region by region matching, GLOBAL for the whole image baseline.

    """
    rho: float = field(default_factory=lambda: float(_cfg('rho', 0.7)))
    min_region_px: int = field(default_factory=lambda: int(_cfg('min_region_px', 50)))
    region_pairing: str = ALL_COMPATIBLE
    matcher: Matcher = field(default_factory=lambda: Matcher.parse(_cfg('matcher', 'region')))

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError(f'rho must be in (0, 1], got {self.rho}')
        if self.min_region_px < 0:
            raise ValueError(f'min_region_px must be >= 0, got {self.min_region_px}')
        if self.region_pairing != ALL_COMPATIBLE:
            raise ValueError(f'Unsupported region pairing "{self.region_pairing}"')
        object.__setattr__(self, 'matcher', Matcher.parse(self.matcher))

    def as_dict(self) -> dict:
        return {'rho': self.rho, 'min_region_px': self.min_region_px,
                'region_pairing': self.region_pairing, 'matcher': self.matcher.value}


class MatchPair(NamedTuple):
    query: int
    target: int
    distance: float


@dataclass(frozen=True, eq=False)
class MatchReport(JsonDocument):
    """Result of comparing a query ARSRG with a target ARSRG.

    Attributes:
        pairs (tuple[MatchPair]): Accepted leaf correspondences, each query leaf at most once.
        per_region (dict): Accepted pair count per (query region, target region) pairing used.
        score (float): Similarity in [0, 1].

    """
    query_id: str
    target_id: str
    pairs: Tuple[MatchPair, ...]
    per_region: Dict[Tuple[int, int], int]
    score: float
    params: MatchParams

    format_name = MATCH_REPORT_FORMAT
    format_version = MATCH_REPORT_FORMAT_VERSION

    def __repr__(self):
        return f'<MatchReport {self.query_id} -> {self.target_id} score={self.score:.4f} pairs={len(self.pairs)}>'

    def as_dict(self) -> dict:
        return {
            'query_id': self.query_id,
            'target_id': self.target_id,
            'score': self.score,
            'pairs': [[p.query, p.target, p.distance] for p in self.pairs],
            'per_region': [[q, t, count] for (q, t), count in sorted(self.per_region.items())],
            'params': self.params.as_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatchReport":
        params = require(data, 'params')
        try:
            match_params = MatchParams(float(require(params, 'rho', 'params')),
                                       int(require(params, 'min_region_px', 'params')),
                                       require(params, 'region_pairing', 'params'),
                                       require(params, 'matcher', 'params'))
            pairs = tuple(MatchPair(int(q), int(t), float(d))
                          for q, t, d in require_type(require(data, 'pairs'), list, 'pairs'))
            per_region = {(int(q), int(t)): int(c)
                          for q, t, c in require_type(require(data, 'per_region'), list, 'per_region')}
        except (TypeError, ValueError) as e:
            raise FormatError(str(e)) from e
        return cls(require_type(require(data, 'query_id'), str, 'query_id'),
                   require_type(require(data, 'target_id'), str, 'target_id'),
                   pairs, per_region, float(require(data, 'score')), match_params)


def descriptor_distance(a, b) -> float:
    """Euclidean distance between two 128-d descriptors.

    Raises:
        DimensionMismatch: If either vector is not 128 long.

    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != DESCRIPTOR_SIZE or b.size != DESCRIPTOR_SIZE:
        raise DimensionMismatch(f'Descriptors must have {DESCRIPTOR_SIZE} values, got {a.size} and {b.size}')
    return float(np.linalg.norm(a - b))


def _descriptors(leaves: Union[Sequence[Keypoint], np.ndarray]) -> np.ndarray:
    if isinstance(leaves, np.ndarray):
        matrix = leaves.reshape(-1, DESCRIPTOR_SIZE) if leaves.size else np.empty((0, DESCRIPTOR_SIZE))
        return matrix.astype(np.float64)
    return descriptor_matrix(list(leaves))


def _ratio_test(distances: np.ndarray, rho: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowe's ratio test on a (queries, targets) distance matrix.

    Returns:
        tuple: Accepted query rows, their nearest target columns and nearest distances.

    """
    empty = np.empty(0, dtype=np.int64)
    if distances.shape[0] == 0 or distances.shape[1] < 2:
        return empty, empty, np.empty(0)
    nearest = np.argmin(distances, axis=1)
    rows = np.arange(distances.shape[0])
    d1 = distances[rows, nearest]
    d2 = np.partition(distances, 1, axis=1)[:, 1]
    # d1 / d2 < rho, written without the division so d2 == 0 is rejected
    accepted = d1 < rho * d2
    return rows[accepted], nearest[accepted], d1[accepted]


def ratio_test_match(query, target, rho: float) -> List[MatchPair]:
    """Match each query leaf to its nearest target leaf when d1 / d2 < rho.

    Nearest neighbour ties go to the lower target index. A target with fewer than two leaves yields no matches.

    Args:
        query: Query keypoints or an (n, 128) descriptor array.
        target: Target keypoints or an (m, 128) descriptor array.
        rho (float): Ratio threshold.

    Returns:
        list[MatchPair]: Accepted (query, target, distance) triples in query order.

    """
    q, t = _descriptors(query), _descriptors(target)
    if len(q) == 0 or len(t) < 2:
        return []
    rows, cols, dists = _ratio_test(cdist(q, t), rho)
    return [MatchPair(int(r), int(c), float(d)) for r, c, d in zip(rows, cols, dists)]


def _surviving_members(graph: Arsrg, min_region_px: int) -> Dict[int, List[int]]:
    mask = region_filter_mask(graph.regions, min_region_px)
    return {region: leaves for region, leaves in graph.region_members().items() if mask[region]}


def _deduplicate(pairs: List[MatchPair]) -> Tuple[MatchPair, ...]:
    best: Dict[int, MatchPair] = {}
    for pair in pairs:
        kept = best.get(pair.query)
        if kept is None or (pair.distance, pair.target) < (kept.distance, kept.target):
            best[pair.query] = pair
    return tuple(best[q] for q in sorted(best))


def match_arsrg(query: Arsrg, target: Arsrg, params: MatchParams = None) -> MatchReport:
    """Asymmetric region by region comparison.

    Regions under min_region_px are dropped on both sides. The leaves of each surviving query region are ratio
    tested against the leaves of every surviving target region and the target region with the most accepted
    pairs is kept (ties to the larger target region, then the lower index). Each query leaf keeps its closest
    pair and score = pairs / surviving query leaves.

    Args:
        query (Arsrg): Query graph.
        target (Arsrg): Target graph.
        params (MatchParams): Matching settings, defaults from config.

    Returns:
        MatchReport: Pairs, per region counts and the score.

    Raises:
        EmptyGraph: If no query leaf survives region filtering.

    """
    params = params if params is not None else MatchParams()
    query_members = _surviving_members(query, params.min_region_px)
    target_members = {r: m for r, m in _surviving_members(target, params.min_region_px).items() if len(m) >= 2}
    surviving = sum(len(m) for m in query_members.values())
    if surviving == 0:
        raise EmptyGraph(f'No leaves of {query.image_id} survive filtering at min_region_px={params.min_region_px}')

    q_desc = descriptor_matrix(query.leaves)
    t_desc = descriptor_matrix(target.leaves)
    pairs: List[MatchPair] = []
    per_region: Dict[Tuple[int, int], int] = {}
    for q_region, q_leaves in query_members.items():
        if not target_members:
            break
        best_key, best_pairs = None, []
        for t_region, t_leaves in target_members.items():
            distances = cdist(q_desc[q_leaves], t_desc[t_leaves])
            rows, cols, dists = _ratio_test(distances, params.rho)
            key = (len(rows), int(target.regions.region_sizes[t_region]), -t_region)
            if best_key is None or key > best_key:
                best_key = key
                best_pairs = [MatchPair(q_leaves[r], t_leaves[c], float(d))
                              for r, c, d in zip(rows.tolist(), cols.tolist(), dists.tolist())]
        if best_pairs:
            per_region[(q_region, -best_key[2])] = len(best_pairs)
            pairs.extend(best_pairs)

    unique_pairs = _deduplicate(pairs)
    report = MatchReport(query.image_id, target.image_id, unique_pairs, per_region,
                         len(unique_pairs) / max(1, surviving), params)
    logger.debug('%r', report)
    return report


def match_global(query: Arsrg, target: Arsrg, params: MatchParams = None) -> MatchReport:
    """Whole image baseline: ratio test of all query leaves against all target leaves, no region structure.

    Raises:
        EmptyGraph: If the query has no leaves.

    """
    params = params if params is not None else MatchParams()
    if not query.leaves:
        raise EmptyGraph(f'{query.image_id} has no leaves')
    pairs = tuple(ratio_test_match(query.leaves, target.leaves, params.rho))
    return MatchReport(query.image_id, target.image_id, pairs, {}, len(pairs) / max(1, query.num_leaves), params)


def match(query: Arsrg, target: Arsrg, params: MatchParams = None) -> MatchReport:
    """Compare two graphs with the procedure params.matcher selects."""
    params = params if params is not None else MatchParams()
    if params.matcher == Matcher.GLOBAL:
        return match_global(query, target, params)
    return match_arsrg(query, target, params)


class RankedEntry(NamedTuple):
    image_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList(object):
    """Database entries for one query, best score first, ranks from 1."""
    query_id: str
    entries: Tuple[RankedEntry, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> List[str]:
        return [e.image_id for e in self.entries]

    def rank_of(self, image_id: str) -> int:
        """Rank of an image id, 0 when absent."""
        for entry in self.entries:
            if entry.image_id == image_id:
                return entry.rank
        return 0


def rank_database(query: Arsrg, db: Sequence[Arsrg], params: MatchParams = None, workers: int = 1) -> RankedList:
    """Score every database graph against the query and sort by score, ties keeping database order.

    Args:
        query (Arsrg): Query graph.
        db (Sequence[Arsrg]): Database graphs, at least one.
        params (MatchParams): Matching settings.
        workers (int): Threads used to score the database, the result does not depend on it.

    Returns:
        RankedList: One entry per database graph.

    """
    if not db:
        raise EmptyInput('Cannot rank an empty database')
    params = params if params is not None else MatchParams()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(lambda target: match(query, target, params).score, db))
    else:
        scores = [match(query, target, params).score for target in db]
    order = sorted(range(len(db)), key=lambda i: -scores[i])
    entries = tuple(RankedEntry(db[i].image_id, scores[i], rank) for rank, i in enumerate(order, start=1))
    return RankedList(query.image_id, entries)
