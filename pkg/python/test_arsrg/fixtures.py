"""Synthetic images, label maps, keypoints and graphs shared by the tests."""
from typing import List, Sequence

import cv2
import numpy as np

from arsrg.enums import LeafConfig
from arsrg.features.keypoints import Keypoint, normalize_descriptor
from arsrg.graph.arsrg_graph import Arsrg
from arsrg.graph.rag import RegionGraph
from arsrg.imaging.raster import RasterImage
from arsrg.segmentation.label_map import LabelMap

QUADRANT_COLORS = ((200, 30, 30), (30, 200, 30), (30, 30, 200), (220, 220, 40))


def quadrant_image(size: int = 64) -> RasterImage:
    """Four flat colored quadrants of size/2 x size/2."""
    half = size // 2
    pixels = np.zeros((size, size, 3), dtype=np.uint8)
    pixels[:half, :half] = QUADRANT_COLORS[0]
    pixels[:half, half:] = QUADRANT_COLORS[1]
    pixels[half:, :half] = QUADRANT_COLORS[2]
    pixels[half:, half:] = QUADRANT_COLORS[3]
    return RasterImage(pixels)


def quadrant_label_map(size: int = 64) -> LabelMap:
    """Labels 1 2 / 3 4 in quadrants."""
    half = size // 2
    labels = np.ones((size, size), dtype=np.int32)
    labels[:half, half:] = 2
    labels[half:, :half] = 3
    labels[half:, half:] = 4
    return LabelMap(labels)


def quadrant_of(x: float, y: float, size: int = 64) -> int:
    """0-based region index of the quadrant containing the rounded position."""
    half = size // 2
    col = min(int(np.floor(x + 0.5)), size - 1)
    row = min(int(np.floor(y + 0.5)), size - 1)
    return (2 if row >= half else 0) + (1 if col >= half else 0)


def stripes_label_map(width: int = 10, top_rows: int = 4, bottom_rows: int = 6) -> LabelMap:
    """Two horizontal stripes."""
    labels = np.ones((top_rows + bottom_rows, width), dtype=np.int32)
    labels[top_rows:] = 2
    return LabelMap(labels)


def constant_image(width: int = 32, height: int = 32, value=(90, 120, 150)) -> RasterImage:
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = value
    return RasterImage(pixels)


def random_color_image(rng: np.random.Generator, height: int, width: int, colors: int) -> RasterImage:
    """Random image drawn from a small palette, so components of every size appear."""
    palette = rng.integers(0, 256, size=(colors, 3), dtype=np.uint8)
    index = rng.integers(0, colors, size=(height, width))
    return RasterImage(palette[index])


def blocky_label_map(rng: np.random.Generator, height: int, width: int, regions: int) -> LabelMap:
    """Random label map of upsampled blocks, relabelled 1..n."""
    coarse = rng.integers(1, regions + 1, size=(max(1, height // 4), max(1, width // 4)))
    labels = np.kron(coarse, np.ones((4, 4), dtype=np.int64))[:height, :width]
    labels = np.pad(labels, ((0, height - labels.shape[0]), (0, width - labels.shape[1])), mode='edge')
    _, compact = np.unique(labels, return_inverse=True)
    return LabelMap(compact.reshape(labels.shape) + 1)


def blob_image(size: int = 64, center=(32.0, 32.0), sigma: float = 4.0) -> RasterImage:
    """Bright gaussian blob on a dark background."""
    rows, cols = np.indices((size, size))
    blob = np.exp(-((cols - center[0]) ** 2 + (rows - center[1]) ** 2) / (2 * sigma ** 2))
    return RasterImage(np.clip(20 + 220 * blob, 0, 255).astype(np.uint8))


def random_descriptor(rng: np.random.Generator) -> np.ndarray:
    return normalize_descriptor(rng.random(128))


def make_keypoint(x: float, y: float, descriptor=None, rng: np.random.Generator = None,
                  scale: float = 1.6, orientation: float = 0.0) -> Keypoint:
    if descriptor is None:
        descriptor = random_descriptor(rng if rng is not None else np.random.default_rng(0))
    return Keypoint(x, y, scale, orientation, descriptor)


def random_keypoints(rng: np.random.Generator, n: int, width: float = 100.0, height: float = 100.0) -> List[Keypoint]:
    return [make_keypoint(rng.uniform(0, width), rng.uniform(0, height), rng=rng) for _ in range(n)]


def make_graph(image_id: str, region_descriptors: Sequence[Sequence[np.ndarray]], region_sizes: Sequence[int] = None,
               config: LeafConfig = LeafConfig.REGION, tau: float = None) -> Arsrg:
    """Graph with a chain of regions, each owning leaves with the given descriptors.

    Leaves of region r sit on row r, one pixel apart, so positions never matter to matching.

    """
    n = len(region_descriptors)
    sizes = list(region_sizes) if region_sizes is not None else [100] * n
    centroids = [(float(r), float(r)) for r in range(n)]
    rg = RegionGraph.from_edges(sizes, centroids, [(r, r + 1) for r in range(n - 1)])
    leaves, leaf_region = [], []
    for region, descriptors in enumerate(region_descriptors):
        for i, descriptor in enumerate(descriptors):
            leaves.append(make_keypoint(float(i), float(region), descriptor))
            leaf_region.append(region)
    width = max([len(d) for d in region_descriptors] + [1])
    leaf_edges = () if config == LeafConfig.REGION_GRAPH else None
    return Arsrg(image_id, width, max(n, 1), rg, tuple(leaves), np.array(leaf_region, dtype=np.int64),
                 config, tau, leaf_edges)


def shape_image(seed: int, size: int = 150) -> RasterImage:
    """Uniform background with a few flat colored random polygons and ellipses."""
    rng = np.random.default_rng(seed)
    background = tuple(int(v) for v in rng.integers(0, 256, size=3))
    pixels = np.empty((size, size, 3), dtype=np.uint8)
    pixels[:] = background
    for _ in range(int(rng.integers(3, 6))):
        color = tuple(int(v) for v in rng.integers(0, 256, size=3))
        center = rng.integers(25, size - 25, size=2)
        if rng.random() < 0.7:
            count = int(rng.integers(4, 8))
            angles = np.sort(rng.uniform(0, 2 * np.pi, size=count))
            radii = rng.uniform(10, 28, size=count)
            points = np.stack([center[0] + radii * np.cos(angles), center[1] + radii * np.sin(angles)], axis=1)
            cv2.fillPoly(pixels, [np.round(points).astype(np.int32)], color)
        else:
            axes = tuple(int(v) for v in rng.integers(8, 24, size=2))
            cv2.ellipse(pixels, tuple(int(v) for v in center), axes, float(rng.uniform(0, 180)), 0, 360, color, -1)
    return RasterImage(pixels)


def shape_corpus(count: int = 20, size: int = 150) -> List[RasterImage]:
    return [shape_image(seed, size) for seed in range(count)]


def rotate90(img: RasterImage) -> RasterImage:
    return RasterImage(np.rot90(img.pixels).copy())
