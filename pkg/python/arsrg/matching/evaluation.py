"""Retrieval metrics: Mean Reciprocal Rank, precision and recall at a cutoff."""
from __future__ import annotations
import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Set, Tuple

import numpy as np

from arsrg.exceptions import EmptyInput, EmptyRelevantSet
from arsrg.matching.match import RankedList


@dataclass(frozen=True)
class RetrievalSummary(object):
    """Aggregate retrieval quality over a query set."""
    mrr: float
    precision: float
    recall: float
    cutoff: int
    queries: int


def mrr(ranks_of_relevant: Sequence[int]) -> float:
    """Mean of 1 / rank.

    Args:
        ranks_of_relevant (Sequence[int]): 1-based ranks.

    Returns:
        float: Value in (0, 1].

    Raises:
        EmptyInput: If no ranks are given.

    """
    ranks = np.asarray(list(ranks_of_relevant), dtype=np.float64)
    if ranks.size == 0:
        raise EmptyInput('MRR of an empty rank list')
    if np.any(ranks < 1):
        raise ValueError(f'Ranks must be >= 1, got {ranks.min()}')
    return float(np.mean(1.0 / ranks))


def precision_recall(ranked: RankedList, relevant: Set[str], cutoff: int) -> Tuple[float, float]:
    """Precision and recall of the top `cutoff` entries.

    Args:
        ranked (RankedList): Ranking for one query.
        relevant (set[str]): Relevant image ids.
        cutoff (int): k, at least 1.

    Returns:
        tuple: (|top-k & relevant| / k, |top-k & relevant| / |relevant|)

    Raises:
        EmptyRelevantSet: If relevant is empty, recall is undefined.

    """
    if cutoff < 1:
        raise ValueError(f'cutoff must be >= 1, got {cutoff}')
    if not relevant:
        raise EmptyRelevantSet(f'No relevant images for query {ranked.query_id}')
    hits = len(set(ranked.ids()[:cutoff]) & set(relevant))
    return hits / cutoff, hits / len(relevant)


def first_relevant_rank(ranked: RankedList, relevant: Set[str]) -> int:
    """Rank of the first relevant entry, 0 when none is retrieved."""
    for entry in ranked:
        if entry.image_id in relevant:
            return entry.rank
    return 0


def evaluate_retrieval(rankings: Mapping[str, RankedList], relevant: Mapping[str, Set[str]],
                       cutoff: int) -> RetrievalSummary:
    """Average MRR, precision and recall over queries that have at least one relevant image.

    A query whose relevant images are never retrieved contributes a reciprocal rank of 0.

    Args:
        rankings (Mapping[str, RankedList]): Ranking per query id.
        relevant (Mapping[str, set]): Relevant ids per query id.
        cutoff (int): k for precision and recall.

    Returns:
        RetrievalSummary: The averages.

    """
    reciprocal, precisions, recalls = [], [], []
    for query_id, ranked in rankings.items():
        wanted = relevant.get(query_id) or set()
        if not wanted:
            continue
        rank = first_relevant_rank(ranked, wanted)
        reciprocal.append(1.0 / rank if rank else 0.0)
        precision, recall = precision_recall(ranked, wanted, cutoff)
        precisions.append(precision)
        recalls.append(recall)
    if not reciprocal:
        raise EmptyInput('No query has a relevant image')
    return RetrievalSummary(float(np.mean(reciprocal)), float(np.mean(precisions)), float(np.mean(recalls)),
                            cutoff, len(reciprocal))


def rankings_csv(rankings: Iterable[RankedList]) -> str:
    """Rankings as CSV text with header query_id,rank,target_id,score."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['query_id', 'rank', 'target_id', 'score'])
    for ranked in rankings:
        for entry in ranked:
            writer.writerow([ranked.query_id, entry.rank, entry.image_id, f'{entry.score:.6f}'])
    return buffer.getvalue()


def summaries_csv(rows: Iterable[Tuple[float, RetrievalSummary]]) -> str:
    """One CSV row per rho with header rho,mrr,precision,recall,cutoff."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['rho', 'mrr', 'precision', 'recall', 'cutoff'])
    for rho, summary in rows:
        writer.writerow([f'{rho:g}', f'{summary.mrr:.6f}', f'{summary.precision:.6f}',
                         f'{summary.recall:.6f}', summary.cutoff])
    return buffer.getvalue()
