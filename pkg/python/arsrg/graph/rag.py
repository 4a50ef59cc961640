"""Region Adjacency Graph, the second level of an ARSRG."""
from __future__ import annotations
from dataclasses import dataclass
from typing import List, NamedTuple

import numpy as np
import networkx as nx

from arsrg.segmentation.label_map import LabelMap, neighbor_pairs
from arsrg.utils.logging_setup import logger


class Neighbor(NamedTuple):
    region: int
    direction: str
    distance: float


@dataclass(frozen=True, eq=False)
class RegionGraph(object):
    """Undirected graph of regions. Region i holds LabelMap label i + 1.

    Attributes:
        adjacency (np.ndarray): Symmetric binary (n, n) uint8 matrix with a zero diagonal.
        region_sizes (np.ndarray): Pixel count of each region.
        region_centroids (np.ndarray): (n, 2) mean (x, y) pixel position of each region.

    """
    adjacency: np.ndarray
    region_sizes: np.ndarray
    region_centroids: np.ndarray

    def __post_init__(self):
        adjacency = np.asarray(self.adjacency, dtype=np.uint8)
        sizes = np.asarray(self.region_sizes, dtype=np.int64).reshape(-1)
        centroids = np.asarray(self.region_centroids, dtype=np.float64).reshape(-1, 2)
        n = sizes.size
        if adjacency.shape != (n, n) or centroids.shape[0] != n:
            raise ValueError(f'Inconsistent region graph shapes {adjacency.shape}, {sizes.shape}, {centroids.shape}')
        if not np.array_equal(adjacency, adjacency.T) or np.any(np.diag(adjacency)) or np.any(adjacency > 1):
            raise ValueError('Adjacency must be binary, symmetric and have a zero diagonal')
        if np.any(sizes < 1):
            raise ValueError('Every region must have at least one pixel')
        for name, value in (('adjacency', adjacency), ('region_sizes', sizes), ('region_centroids', centroids)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __repr__(self):
        return f'<RegionGraph regions={self.num_regions} edges={self.num_edges}>'

    def __eq__(self, other):
        if not isinstance(other, RegionGraph):
            return NotImplemented
        return (np.array_equal(self.adjacency, other.adjacency)
                and np.array_equal(self.region_sizes, other.region_sizes)
                and np.allclose(self.region_centroids, other.region_centroids, atol=1e-6))

    @property
    def num_regions(self) -> int:
        return int(self.region_sizes.size)

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum() // 2)

    def edges(self) -> List[tuple]:
        """Undirected edges as (i, j) pairs with i < j, in lexicographic order."""
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    @classmethod
    def from_edges(cls, sizes, centroids, edges) -> "RegionGraph":
        """Factory method to construct from an edge list.

        Args:
            sizes: Region pixel counts.
            centroids: (n, 2) region centroids.
            edges: Iterable of (i, j) region index pairs.

        Returns:
            RegionGraph: The graph.

        """
        n = len(sizes)
        adjacency = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ValueError(f'Invalid region edge ({i}, {j}) for {n} regions')
            adjacency[i, j] = adjacency[j, i] = 1
        return cls(adjacency, sizes, centroids)


def build_rag(lm: LabelMap) -> RegionGraph:
    """Build the RAG: regions i and j are adjacent iff a pixel of one has a pixel of the other in its
    8-neighbourhood. Neighbourhoods are clipped at the image border.

    Args:
        lm (LabelMap): Segmentation result.

    Returns:
        RegionGraph: Adjacency, sizes and centroids.

    """
    n = lm.num_regions
    flat = lm.labels.ravel()
    sizes = np.bincount(flat, minlength=n + 1)[1:]
    rows, cols = np.indices(lm.labels.shape)
    cx = np.bincount(flat, weights=cols.ravel().astype(np.float64), minlength=n + 1)[1:] / sizes
    cy = np.bincount(flat, weights=rows.ravel().astype(np.float64), minlength=n + 1)[1:] / sizes

    adjacency = np.zeros((n, n), dtype=np.uint8)
    pairs = neighbor_pairs(lm.labels, 8) - 1
    if len(pairs):
        adjacency[pairs[:, 0], pairs[:, 1]] = 1
        adjacency[pairs[:, 1], pairs[:, 0]] = 1
    rg = RegionGraph(adjacency, sizes, np.stack([cx, cy], axis=1))
    logger.debug('Built %r', rg)
    return rg


def region_filter_mask(rg: RegionGraph, min_size: int) -> np.ndarray:
    """Mark the regions large enough to carry information: mask[i] = region_sizes[i] >= min_size.

    Args:
        rg (RegionGraph): Region graph, not modified.
        min_size (int): Minimum region size in pixels, >= 0.

    Returns:
        np.ndarray: Boolean mask over regions.

    """
    if min_size < 0:
        raise ValueError(f'min_size must be >= 0, got {min_size}')
    return rg.region_sizes >= min_size


def direction_of(dx: float, dy: float) -> str:
    """Dominant direction of an offset in image coordinates, rows grow downward."""
    if abs(dx) >= abs(dy):
        return 'right' if dx >= 0 else 'left'
    return 'bottom' if dy > 0 else 'top'


def ordered_neighbors(rg: RegionGraph, region: int) -> List[Neighbor]:
    """Neighbours of a region, nearest centroid first, each tagged left, right, top or bottom.

    Args:
        rg (RegionGraph): Region graph.
        region (int): Region index.

    Returns:
        list[Neighbor]: Sorted by centroid distance, then index.

    """
    if not 0 <= region < rg.num_regions:
        raise IndexError(f'Region {region} out of range for {rg!r}')
    origin = rg.region_centroids[region]
    neighbours = []
    for other in np.flatnonzero(rg.adjacency[region]).tolist():
        dx, dy = rg.region_centroids[other] - origin
        neighbours.append(Neighbor(other, direction_of(dx, dy), float(np.hypot(dx, dy))))
    return sorted(neighbours, key=lambda nb: (nb.distance, nb.region))


def to_networkx(rg: RegionGraph) -> nx.Graph:
    """The RAG as a networkx graph with size and centroid node attributes.

    """
    graph = nx.Graph()
    for i in range(rg.num_regions):
        graph.add_node(i, size=int(rg.region_sizes[i]), centroid=tuple(rg.region_centroids[i].tolist()))
    graph.add_edges_from(rg.edges())
    return graph
