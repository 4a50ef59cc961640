"""The LabelMap produced by segmentation, its neighbourhood helpers and its text format."""
from __future__ import annotations
from pathlib import Path
from dataclasses import dataclass
from typing import Union

import numpy as np

from arsrg.constants import LABEL_MAP_HEADER
from arsrg.exceptions import ArsrgIoError, FormatError
from arsrg.utils.arsrg_utils import atomic_write

# Half of each neighbourhood as (row, col) offsets; the other half is covered by symmetry.
HALF_NEIGHBORHOOD = {
    4: ((0, 1), (1, 0)),
    8: ((0, 1), (1, 0), (1, 1), (1, -1)),
}


@dataclass(frozen=True, eq=False)
class LabelMap(object):
    """Per-pixel region labels 1..num_regions as a (height, width) array, 0 is reserved for unlabeled.

    """
    labels: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError(f'Expected a non empty 2D label array, got shape {labels.shape}')
        present = np.unique(labels)
        if present[0] < 1 or present[-1] != present.size:
            raise ValueError('Labels must be exactly 1..num_regions with no gaps')
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)

    def __repr__(self):
        return f'<LabelMap {self.width}x{self.height} regions={self.num_regions}>'

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(np.array_equal(self.labels, other.labels))

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_regions(self) -> int:
        return int(self.labels.max())

    def region_sizes(self) -> np.ndarray:
        """Pixel count per region, index i holds region i + 1."""
        return np.bincount(self.labels.ravel(), minlength=self.num_regions + 1)[1:]

    def label_at(self, x: float, y: float) -> int:
        """Label of the pixel nearest to the sub-pixel position (x, y), clamped to the image.

        Args:
            x (float): Column.
            y (float): Row.

        Returns:
            int: Region label.

        """
        col = min(max(int(np.floor(x + 0.5)), 0), self.width - 1)
        row = min(max(int(np.floor(y + 0.5)), 0), self.height - 1)
        return int(self.labels[row, col])


def relabel_in_scan_order(labels: np.ndarray) -> np.ndarray:
    """Rename arbitrary positive labels to 1..n in raster-scan order of first appearance.

    Args:
        labels (np.ndarray): 2D array of positive integer labels.

    Returns:
        np.ndarray: int32 array with the same partition, labelled 1..n.

    """
    flat = labels.ravel()
    present, first_index = np.unique(flat, return_index=True)
    order = np.argsort(first_index, kind='stable')
    lookup = np.zeros(int(present[-1]) + 1, dtype=np.int32)
    lookup[present[order]] = np.arange(1, present.size + 1, dtype=np.int32)
    return lookup[labels]


def neighbor_pairs(labels: np.ndarray, connectivity: int = 8) -> np.ndarray:
    """Unique (a, b) pairs, a < b, of distinct labels found on neighbouring pixels.

    Args:
        labels (np.ndarray): 2D label array.
        connectivity (int): 4 or 8, borders are clipped.

    Returns:
        np.ndarray: (m, 2) int array of label pairs sorted lexicographically.

    """
    if connectivity not in HALF_NEIGHBORHOOD:
        raise ValueError(f'connectivity must be 4 or 8, got {connectivity}')
    h, w = labels.shape
    chunks = []
    for dr, dc in HALF_NEIGHBORHOOD[connectivity]:
        c0, c1 = max(0, -dc), w - max(0, dc)
        if dr >= h or c1 <= c0:
            continue
        a = labels[0:h - dr, c0:c1]
        b = labels[dr:h, c0 + dc:c1 + dc]
        mask = a != b
        if mask.any():
            chunks.append(np.stack([a[mask], b[mask]], axis=1))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.sort(np.concatenate(chunks).astype(np.int64), axis=1)
    return np.unique(pairs, axis=0)


def save_label_map(lm: LabelMap, path: Union[str, Path]) -> Path:
    """Write a LabelMap in the ARSRG-LM text format.

    Args:
        lm (LabelMap): Label map.
        path (str, Path): Destination.

    Returns:
        Path: The written path.

    """
    lines = [LABEL_MAP_HEADER, f'{lm.width} {lm.height} {lm.num_regions}']
    lines.extend(' '.join(str(v) for v in row) for row in lm.labels.tolist())
    try:
        return atomic_write(path, '\n'.join(lines) + '\n')
    except OSError as e:
        raise ArsrgIoError(f'Could not write {path}: {e}') from e


def load_label_map(path: Union[str, Path]) -> LabelMap:
    """Read a LabelMap in the ARSRG-LM text format.

    Args:
        path (str, Path): Source file.

    Returns:
        LabelMap: The label map.

    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ArsrgIoError(f'Could not read {path}: {e}') from e
    header, _, body = text.partition('\n')
    if header.strip() != LABEL_MAP_HEADER:
        raise FormatError(f'Expected header "{LABEL_MAP_HEADER}", got "{header.strip()}"', 'header')
    tokens = body.split()
    try:
        values = [int(t) for t in tokens]
    except ValueError as e:
        raise FormatError(f'Non integer token: {e}', 'labels') from e
    if len(values) < 3:
        raise FormatError('Missing width, height or num_regions', 'header')
    width, height, num_regions = values[:3]
    labels = values[3:]
    if width < 1 or height < 1 or len(labels) != width * height:
        raise FormatError(f'Expected {width}x{height} labels, got {len(labels)}', 'labels')
    try:
        lm = LabelMap(np.array(labels, dtype=np.int32).reshape(height, width))
    except ValueError as e:
        raise FormatError(str(e), 'labels') from e
    if lm.num_regions != num_regions:
        raise FormatError(f'Header says {num_regions} regions, labels hold {lm.num_regions}', 'num_regions')
    return lm
