"""The three level ARSRG: a root for the image, RAG nodes for regions and SIFT leaves, plus per-region SNNGs."""
from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import networkx as nx
from scipy.spatial.distance import pdist

from arsrg.constants import ARSRG_FORMAT, ARSRG_FORMAT_VERSION
from arsrg.documents import JsonDocument, require, require_type
from arsrg.enums import LeafConfig
from arsrg.exceptions import FormatError, OutOfBounds
from arsrg.features.keypoints import Keypoint, position_matrix
from arsrg.graph.rag import RegionGraph
from arsrg.segmentation.label_map import LabelMap
from arsrg.utils import yaml_cache
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()

Edge = Tuple[int, int]


def default_tau(width: int, height: int) -> float:
    """SNNG threshold scaled to the image: tau_diagonal_fraction (default 0.1) times the diagonal."""
    fraction = float(config.setting('graph', 'tau_diagonal_fraction', 0.1))
    return fraction * float(np.hypot(width, height))


@dataclass(frozen=True)
class Snng(object):
    """SIFT Nearest-Neighbor Graph over the leaves of one region.

    Attributes:
        region (int): Region index, -1 when built outside a graph.
        members (tuple): Leaf indices of the region.
        edges (tuple): Undirected (i, j) pairs of members, i < j.
        tau (float): Distance threshold the edges were built with.

    """
    region: int
    members: Tuple[int, ...]
    edges: Tuple[Edge, ...]
    tau: float

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def to_networkx(self) -> nx.Graph:
        """The SNNG as a networkx graph over its member leaf indices."""
        graph = nx.Graph()
        graph.add_nodes_from(self.members)
        graph.add_edges_from(self.edges)
        return graph


def assign_keypoints(lm: LabelMap, kps: Sequence[Keypoint]) -> np.ndarray:
    """Vertical edges: map each leaf to the region holding the pixel nearest to its position.

    Args:
        lm (LabelMap): Segmentation of the image the keypoints came from.
        kps (Sequence[Keypoint]): Leaves.

    Returns:
        np.ndarray: Region index (label - 1) for every leaf.

    Raises:
        OutOfBounds: If a keypoint lies outside the image, ie the keypoints belong to another image.

    """
    assignment = np.empty(len(kps), dtype=np.int64)
    for i, kp in enumerate(kps):
        if not (0 <= kp.x < lm.width and 0 <= kp.y < lm.height):
            raise OutOfBounds(f'{kp!r} lies outside the {lm.width}x{lm.height} image')
        assignment[i] = lm.label_at(kp.x, kp.y) - 1
    return assignment


def build_snng(members: Sequence[Keypoint], tau: float, indices: Sequence[int] = None,
               region: int = -1) -> Snng:
    """Join every pair of members whose image-plane distance is strictly below tau.

    Args:
        members (Sequence[Keypoint]): Leaves of one region.
        tau (float): Threshold in pixels, > 0. Pairs exactly tau apart are not joined.
        indices (Sequence[int]): Leaf index of each member, default 0..n-1.
        region (int): Region index to record.

    Returns:
        Snng: The proximity graph.

    """
    if not tau > 0:
        raise ValueError(f'tau must be > 0, got {tau}')
    indices = tuple(int(i) for i in (indices if indices is not None else range(len(members))))
    if len(indices) != len(members):
        raise ValueError('indices and members differ in length')
    edges = ()
    if len(members) > 1:
        distances = pdist(position_matrix(members))
        rows, cols = np.triu_indices(len(members), k=1)
        close = distances < tau
        edges = tuple((indices[i], indices[j]) for i, j in zip(rows[close].tolist(), cols[close].tolist()))
    return Snng(region, indices, edges, float(tau))


def build_snngc(members: Sequence[Keypoint], indices: Sequence[int] = None, region: int = -1) -> Snng:
    """Complete SNNG: tau is set one pixel above the largest pairwise distance.

    Args:
        members (Sequence[Keypoint]): Leaves of one region, at least one.
        indices (Sequence[int]): Leaf index of each member, default 0..n-1.
        region (int): Region index to record.

    Returns:
        Snng: Complete graph with n(n-1)/2 edges.

    """
    if not members:
        raise ValueError('build_snngc needs at least one member')
    distances = pdist(position_matrix(members)) if len(members) > 1 else np.zeros(1)
    return build_snng(members, float(distances.max()) + 1.0, indices, region)


@dataclass(frozen=True, eq=False)
class Arsrg(JsonDocument):
    """Attributed Relational SIFT-based Regions Graph.

    Level one is the root, identified by image_id and the image size. Level two is the RegionGraph. Level three
    are the leaves, each tied to exactly one region by leaf_region. With LeafConfig.REGION_GRAPH the leaves of
    each region are also joined by an SNNG with threshold tau, stored flat in leaf_edges.

    """
    image_id: str
    width: int
    height: int
    regions: RegionGraph
    leaves: Tuple[Keypoint, ...]
    leaf_region: np.ndarray
    config: LeafConfig
    tau: Optional[float] = None
    leaf_edges: Optional[Tuple[Edge, ...]] = None

    format_name = ARSRG_FORMAT
    format_version = ARSRG_FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, 'config', LeafConfig.parse(self.config))
        object.__setattr__(self, 'leaves', tuple(self.leaves))
        leaf_region = np.asarray(self.leaf_region, dtype=np.int64).reshape(-1)
        leaf_region.setflags(write=False)
        object.__setattr__(self, 'leaf_region', leaf_region)
        if self.config == LeafConfig.REGION_GRAPH:
            object.__setattr__(self, 'leaf_edges', tuple(sorted((min(i, j), max(i, j))
                                                                for i, j in self.leaf_edges or ())))
        self.validate()

    def __repr__(self):
        return (f'<Arsrg {self.image_id} {self.width}x{self.height} regions={self.regions.num_regions} '
                f'leaves={len(self.leaves)} config={self.config}>')

    def __eq__(self, other):
        if not isinstance(other, Arsrg):
            return NotImplemented
        return self.as_json_bytes() == other.as_json_bytes()

    def validate(self) -> None:
        """Check the structural invariants, raising ValueError on the first violation.

        """
        if self.width < 1 or self.height < 1:
            raise ValueError(f'Invalid image size {self.width}x{self.height}')
        for i, kp in enumerate(self.leaves):
            try:
                kp.check(self.width, self.height)
            except ValueError as e:
                raise ValueError(f'leaves[{i}]: {e}') from e
        if self.leaf_region.size != len(self.leaves):
            raise ValueError(f'{len(self.leaves)} leaves but {self.leaf_region.size} region assignments')
        if self.leaf_region.size and (self.leaf_region.min() < 0
                                      or self.leaf_region.max() >= self.regions.num_regions):
            raise ValueError('Every leaf must belong to exactly one existing region')
        if self.config == LeafConfig.REGION:
            if self.leaf_edges is not None or self.tau is not None:
                raise ValueError('Region based graphs carry neither leaf edges nor tau')
            return
        if self.tau is None or not self.tau > 0:
            raise ValueError(f'Region graph based graphs need tau > 0, got {self.tau}')
        n = len(self.leaves)
        for i, j in self.leaf_edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ValueError(f'Invalid leaf edge ({i}, {j})')
            if self.leaf_region[i] != self.leaf_region[j]:
                raise ValueError(f'Leaf edge ({i}, {j}) crosses regions')
        if len(set(self.leaf_edges)) != len(self.leaf_edges):
            raise ValueError('Duplicate leaf edges')

    @property
    def num_leaves(self) -> int:
        return len(self.leaves)

    def region_members(self) -> Dict[int, List[int]]:
        """Leaf indices grouped by region, only regions owning leaves appear."""
        members: Dict[int, List[int]] = {}
        for leaf, region in enumerate(self.leaf_region.tolist()):
            members.setdefault(region, []).append(leaf)
        return dict(sorted(members.items()))

    def as_dict(self) -> dict:
        rg = self.regions
        return {
            'image': {'id': self.image_id, 'w': self.width, 'h': self.height},
            'regions': {'n': rg.num_regions,
                        'sizes': rg.region_sizes.tolist(),
                        'centroids': rg.region_centroids.tolist(),
                        'adjacency': [list(e) for e in rg.edges()]},
            'leaves': [{'x': kp.x, 'y': kp.y, 'scale': kp.scale, 'orientation': kp.orientation,
                        'descriptor': kp.descriptor.tolist()} for kp in self.leaves],
            'leaf_region': self.leaf_region.tolist(),
            'config': self.config.value,
            'tau': self.tau,
            'leaf_edges': None if self.leaf_edges is None else [list(e) for e in self.leaf_edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Arsrg":
        image = require(data, 'image')
        image_id = require_type(require(image, 'id', 'image'), str, 'image.id')
        width = require_type(require(image, 'w', 'image'), int, 'image.w')
        height = require_type(require(image, 'h', 'image'), int, 'image.h')

        regions = require(data, 'regions')
        n = require_type(require(regions, 'n', 'regions'), int, 'regions.n')
        sizes = require_type(require(regions, 'sizes', 'regions'), list, 'regions.sizes')
        centroids = require_type(require(regions, 'centroids', 'regions'), list, 'regions.centroids')
        adjacency = require_type(require(regions, 'adjacency', 'regions'), list, 'regions.adjacency')
        if len(sizes) != n or len(centroids) != n:
            raise FormatError(f'Expected {n} sizes and centroids', 'regions')
        try:
            rg = RegionGraph.from_edges(sizes, centroids, [tuple(e) for e in adjacency])
        except (TypeError, ValueError) as e:
            raise FormatError(str(e), 'regions') from e

        leaves = []
        for i, leaf in enumerate(require_type(require(data, 'leaves'), list, 'leaves')):
            path = f'leaves[{i}]'
            try:
                kp = Keypoint(require(leaf, 'x', path), require(leaf, 'y', path),
                              require(leaf, 'scale', path), require(leaf, 'orientation', path),
                              require(leaf, 'descriptor', path))
                kp.check(width, height)
                leaves.append(kp)
            except (TypeError, ValueError) as e:
                raise FormatError(str(e), path) from e

        leaf_region = require_type(require(data, 'leaf_region'), list, 'leaf_region')
        try:
            config = LeafConfig.parse(require(data, 'config'))
        except ValueError as e:
            raise FormatError(str(e), 'config') from e
        tau = require(data, 'tau')
        leaf_edges = require(data, 'leaf_edges')
        if config == LeafConfig.REGION_GRAPH and (tau is None or leaf_edges is None):
            raise FormatError('Region graph configuration needs tau and leaf_edges', 'config')
        if leaf_edges is not None:
            leaf_edges = tuple(tuple(require_type(e, list, 'leaf_edges')) for e in leaf_edges)
        try:
            return cls(image_id, width, height, rg, tuple(leaves), np.array(leaf_region, dtype=np.int64),
                       config, None if tau is None else float(tau), leaf_edges)
        except (TypeError, ValueError) as e:
            raise FormatError(f'Inconsistent graph: {e}') from e


def build_arsrg(img_id: str, lm: LabelMap, rg: RegionGraph, kps: Sequence[Keypoint],
                config: LeafConfig = LeafConfig.REGION, tau: float = None) -> Arsrg:
    """Assemble the ARSRG from a segmentation, its RAG and the image keypoints.

    Args:
        img_id (str): Identifier stored on the root.
        lm (LabelMap): Segmentation the RAG was built from.
        rg (RegionGraph): RAG of lm.
        kps (Sequence[Keypoint]): Leaves.
        config (LeafConfig): REGION for no leaf edges, REGION_GRAPH for per-region SNNGs.
        tau (float): SNNG threshold, default_tau() when None. Ignored for REGION.

    Returns:
        Arsrg: The graph.

    """
    config = LeafConfig.parse(config)
    if rg.num_regions != lm.num_regions or not np.array_equal(rg.region_sizes, lm.region_sizes()):
        raise ValueError(f'{rg!r} was not built from {lm!r}')
    leaf_region = assign_keypoints(lm, kps)
    leaf_edges = None
    if config == LeafConfig.REGION_GRAPH:
        tau = float(tau) if tau is not None else default_tau(lm.width, lm.height)
        graph = Arsrg(img_id, lm.width, lm.height, rg, tuple(kps), leaf_region, LeafConfig.REGION)
        leaf_edges = tuple(edge for snng in _region_snngs(graph, tau) for edge in snng.edges)
    else:
        tau = None
    arsrg = Arsrg(img_id, lm.width, lm.height, rg, tuple(kps), leaf_region, config, tau, leaf_edges)
    logger.debug('Built %r', arsrg)
    return arsrg


def _region_snngs(a: Arsrg, tau: float) -> List[Snng]:
    return [build_snng([a.leaves[i] for i in members], tau, members, region)
            for region, members in a.region_members().items()]


def snngs(a: Arsrg) -> List[Snng]:
    """Per-region SNNGs of a region graph based ARSRG, empty for region based graphs."""
    if a.config != LeafConfig.REGION_GRAPH:
        return []
    return _region_snngs(a, a.tau)


def leaf_adjacency_matrix(a: Arsrg) -> np.ndarray:
    """Materialize S_SIFT, the binary leaf adjacency matrix.

    Returns:
        np.ndarray: (n_leaves, n_leaves) uint8 matrix, all zero for region based graphs.

    """
    n = a.num_leaves
    matrix = np.zeros((n, n), dtype=np.uint8)
    for i, j in a.leaf_edges or ():
        matrix[i, j] = matrix[j, i] = 1
    return matrix


def ordered_leaf_neighbors(a: Arsrg, leaf: int) -> List[Tuple[int, float]]:
    """SNNG neighbours of a leaf as (leaf, distance), nearest first."""
    x, y = a.leaves[leaf].position
    neighbours = []
    for i, j in a.leaf_edges or ():
        if leaf in (i, j):
            other = j if i == leaf else i
            ox, oy = a.leaves[other].position
            neighbours.append((other, float(np.hypot(ox - x, oy - y))))
    return sorted(neighbours, key=lambda nb: (nb[1], nb[0]))


def summary(a: Arsrg) -> dict:
    """Counts describing an ARSRG, used by the inspect command.

    """
    members = a.region_members()
    return {
        'image_id': a.image_id,
        'size': [a.width, a.height],
        'config': a.config.value,
        'tau': a.tau,
        'regions': a.regions.num_regions,
        'region_edges': a.regions.num_edges,
        'leaves': a.num_leaves,
        'leaf_edges': len(a.leaf_edges or ()),
        'leaves_per_region': {str(region): len(leaves) for region, leaves in members.items()},
    }


def serialize(a: Arsrg) -> bytes:
    """Encode an ARSRG as a versioned JSON document."""
    return a.as_json_bytes()


def deserialize(stream_data: bytes) -> Arsrg:
    """Decode an ARSRG document, raising FormatError with the field path on malformed input."""
    return Arsrg.from_bytes(stream_data)
