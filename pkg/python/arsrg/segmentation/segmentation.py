"""Quantize, label and clean up regions: the first stage of graph construction."""
from __future__ import annotations
import heapq
import warnings
from dataclasses import dataclass, field
from collections import defaultdict

import numpy as np
from skimage import measure
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from scipy.spatial.distance import cdist

from arsrg.imaging.raster import RasterImage, to_rgb
from arsrg.segmentation.label_map import LabelMap, neighbor_pairs, relabel_in_scan_order
from arsrg.utils import yaml_cache
from arsrg.utils.arsrg_utils import Timer
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()


def _cfg(key: str, default):
    return config.setting('segmentation', key, default)


@dataclass(frozen=True)
class SegmentationParams(object):
    """Tunables for segment(). Defaults come from the segmentation section of arsrg_cfg.yml.

    """
    num_colors: int = field(default_factory=lambda: int(_cfg('num_colors', 16)))
    connectivity: int = field(default_factory=lambda: int(_cfg('connectivity', 8)))
    min_region_px: int = field(default_factory=lambda: int(_cfg('min_region_px', 50)))
    seed: int = field(default_factory=lambda: int(_cfg('seed', 0)))
    max_iter: int = field(default_factory=lambda: int(_cfg('max_iter', 50)))

    def __post_init__(self):
        if self.num_colors < 2:
            raise ValueError(f'num_colors must be >= 2, got {self.num_colors}')
        if self.connectivity not in (4, 8):
            raise ValueError(f'connectivity must be 4 or 8, got {self.connectivity}')
        if self.min_region_px < 1:
            raise ValueError(f'min_region_px must be >= 1, got {self.min_region_px}')
        if self.max_iter < 1:
            raise ValueError(f'max_iter must be >= 1, got {self.max_iter}')


def color_codes(img: RasterImage) -> np.ndarray:
    """Pack each pixel's channels into one integer so equal colors compare equal.

    Returns:
        np.ndarray: (height, width) int64 array.

    """
    px = img.pixels.astype(np.int64)
    if img.channels == 1:
        return px[:, :, 0]
    return (px[:, :, 0] << 16) | (px[:, :, 1] << 8) | px[:, :, 2]


def quantize_colors(img: RasterImage, params: SegmentationParams = None) -> RasterImage:
    """Reduce the image to at most num_colors palette colors with seeded k-means in RGB.

    Gray images are promoted to 3 identical channels first. K-means runs on the distinct colors weighted by
    their pixel counts, so an image with no more than num_colors distinct colors is returned unchanged.

    Args:
        img (RasterImage): Input image.
        params (SegmentationParams): num_colors, seed and max_iter are used.

    Returns:
        RasterImage: 3 channel quantized image.

    """
    params = params if params is not None else SegmentationParams()
    rgb = to_rgb(img)
    colors = rgb.pixels.reshape(-1, 3)
    distinct, inverse, counts = np.unique(colors, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    k = min(params.num_colors, len(distinct))
    if k == len(distinct):
        logger.debug('%d distinct colors, quantization is lossless', len(distinct))
        return rgb

    samples = distinct.astype(np.float64)
    kmeans = KMeans(n_clusters=k, init='k-means++', n_init=1, max_iter=params.max_iter,
                    random_state=params.seed)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ConvergenceWarning)
        kmeans.fit(samples, sample_weight=counts)
    palette = np.clip(np.rint(kmeans.cluster_centers_), 0, 255).astype(np.uint8)
    # argmin keeps the lowest palette index on ties
    nearest = np.argmin(cdist(samples, palette.astype(np.float64), 'sqeuclidean'), axis=1)
    quantized = palette[nearest][inverse].reshape(rgb.pixels.shape)
    logger.debug('Quantized %d distinct colors to %d', len(distinct), len(np.unique(palette, axis=0)))
    return RasterImage(quantized)


def label_connected_components(quantized: RasterImage, connectivity: int = 8) -> LabelMap:
    """Label maximal groups of same-colored neighbouring pixels.

    Labels follow raster-scan discovery order starting at 1.

    Args:
        quantized (RasterImage): 1 or 3 channel image.
        connectivity (int): 4 or 8.

    Returns:
        LabelMap: One label per connected same-color component.

    """
    if connectivity not in (4, 8):
        raise ValueError(f'connectivity must be 4 or 8, got {connectivity}')
    codes = color_codes(quantized)
    labels = measure.label(codes, background=-1, connectivity=1 if connectivity == 4 else 2)
    return LabelMap(relabel_in_scan_order(labels))


def merge_small_regions(lm: LabelMap, quantized: RasterImage, min_region_px: int,
                        connectivity: int = 8) -> LabelMap:
    """Absorb every region smaller than min_region_px into its adjacent region of closest mean color.

    The smallest undersized region is merged first (ties by lower label) and sizes, mean colors and adjacency
    are updated after each merge, until every region is large enough or only one region is left. Absorber
    ties go to the lower label.

    Args:
        lm (LabelMap): Label map matching the quantized image.
        quantized (RasterImage): Image the mean colors are taken from.
        min_region_px (int): Minimum surviving region area.
        connectivity (int): Neighbourhood defining adjacency, 4 or 8.

    Returns:
        LabelMap: Merged label map, recompacted to 1..n in scan order.

    """
    if (lm.width, lm.height) != (quantized.width, quantized.height):
        raise ValueError(f'{lm!r} does not match {quantized!r}')
    n = lm.num_regions
    flat = lm.labels.ravel()
    sizes = np.bincount(flat, minlength=n + 1).astype(np.int64)
    channels = quantized.pixels.reshape(-1, quantized.channels).astype(np.float64)
    sums = np.stack([np.bincount(flat, weights=channels[:, c], minlength=n + 1)
                     for c in range(quantized.channels)], axis=1)

    adjacency = defaultdict(set)
    for a, b in neighbor_pairs(lm.labels, connectivity).tolist():
        adjacency[a].add(b)
        adjacency[b].add(a)

    parent = np.arange(n + 1)
    alive = n
    heap = [(int(sizes[r]), r) for r in range(1, n + 1) if sizes[r] < min_region_px]
    heapq.heapify(heap)
    while heap and alive > 1:
        size, region = heapq.heappop(heap)
        if parent[region] != region or sizes[region] != size or size >= min_region_px:
            continue
        neighbours = sorted(adjacency[region])
        if not neighbours:
            continue
        mean = sums[region] / sizes[region]
        distances = [float(np.linalg.norm(sums[nb] / sizes[nb] - mean)) for nb in neighbours]
        absorber = neighbours[int(np.argmin(distances))]

        sizes[absorber] += sizes[region]
        sums[absorber] += sums[region]
        parent[region] = absorber
        alive -= 1
        for nb in adjacency.pop(region):
            adjacency[nb].discard(region)
            if nb != absorber:
                adjacency[nb].add(absorber)
                adjacency[absorber].add(nb)
        if sizes[absorber] < min_region_px:
            heapq.heappush(heap, (int(sizes[absorber]), absorber))

    # Resolve merge chains to their surviving root
    roots = parent.copy()
    for r in range(1, n + 1):
        root = r
        while roots[root] != root:
            root = roots[root]
        roots[r] = root
    merged = relabel_in_scan_order(roots[lm.labels])
    logger.debug('Merged %d regions down to %d (min_region_px=%d)', n, alive, min_region_px)
    return LabelMap(merged)


def segment(img: RasterImage, params: SegmentationParams = None) -> LabelMap:
    """Quantize, label and merge: merge_small_regions(label_connected_components(quantize_colors(img))).

    Args:
        img (RasterImage): Input image.
        params (SegmentationParams): Segmentation tunables, defaults from config.

    Returns:
        LabelMap: Final regions.

    """
    params = params if params is not None else SegmentationParams()
    with Timer('segment', logger):
        quantized = quantize_colors(img, params)
        lm = label_connected_components(quantized, params.connectivity)
        logger.debug('%d connected components before merging', lm.num_regions)
        return merge_small_regions(lm, quantized, params.min_region_px, params.connectivity)
