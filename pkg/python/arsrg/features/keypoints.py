"""Scale and rotation invariant keypoints with 128-d descriptors: the ARSRG leaf attributes."""
from __future__ import annotations
import math
from pathlib import Path
from dataclasses import dataclass, field
from typing import List, Sequence, Union

import cv2
import numpy as np

from arsrg.constants import DESCRIPTOR_SIZE, KEYPOINT_HEADER
from arsrg.exceptions import ArsrgIoError, FormatError, TooSmall
from arsrg.imaging.raster import RasterImage, to_gray
from arsrg.utils import yaml_cache
from arsrg.utils.arsrg_utils import Timer, atomic_write
from arsrg.utils.logging_setup import logger

config = yaml_cache.get_arsrg_cfg()

TWO_PI = 2.0 * math.pi
UNIT_TOLERANCE = 0.01


def _cfg(key: str, default):
    return config.setting('features', key, default)


def normalize_descriptor(values) -> np.ndarray:
    """L2 normalize a descriptor, all-zero descriptors stay all-zero."""
    vector = np.asarray(values, dtype=np.float64).reshape(-1)
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


@dataclass(frozen=True, eq=False)
class Keypoint(object):
    """A keypoint at sub-pixel (x, y) with scale sigma, orientation in radians [0, 2pi) and a unit (or zero)
    128-d descriptor.

    """
    x: float
    y: float
    scale: float
    orientation: float
    descriptor: np.ndarray

    def __post_init__(self):
        descriptor = np.asarray(self.descriptor, dtype=np.float64).reshape(-1)
        if descriptor.size != DESCRIPTOR_SIZE:
            raise ValueError(f'Descriptor must have {DESCRIPTOR_SIZE} values, got {descriptor.size}')
        if self.scale <= 0:
            raise ValueError(f'Scale must be > 0, got {self.scale}')
        descriptor.setflags(write=False)
        object.__setattr__(self, 'descriptor', descriptor)
        object.__setattr__(self, 'x', float(self.x))
        object.__setattr__(self, 'y', float(self.y))
        object.__setattr__(self, 'scale', float(self.scale))
        object.__setattr__(self, 'orientation', float(self.orientation) % TWO_PI)

    def __repr__(self):
        return f'<Keypoint ({self.x:.2f}, {self.y:.2f}) scale={self.scale:.2f}>'

    def __eq__(self, other):
        if not isinstance(other, Keypoint):
            return NotImplemented
        return ((self.x, self.y, self.scale, self.orientation) == (other.x, other.y, other.scale, other.orientation)
                and np.array_equal(self.descriptor, other.descriptor))

    def is_close(self, other: "Keypoint", tol: float = 1e-5) -> bool:
        """Field by field comparison within tol."""
        return (abs(self.x - other.x) <= tol and abs(self.y - other.y) <= tol
                and abs(self.scale - other.scale) <= tol and abs(self.orientation - other.orientation) <= tol
                and bool(np.allclose(self.descriptor, other.descriptor, rtol=0, atol=tol)))

    @property
    def position(self) -> tuple:
        return self.x, self.y

    def check(self, width: int, height: int, tol: float = 1e-6) -> None:
        """Raise ValueError unless the keypoint lies inside a width x height image and its descriptor is
        non-negative with an L2 norm of 0 or 1 (within tol).

        """
        if not (0 <= self.x < width and 0 <= self.y < height):
            raise ValueError(f'Position ({self.x}, {self.y}) outside the {width}x{height} image')
        if not np.all(np.isfinite(self.descriptor)) or self.descriptor.min() < 0:
            raise ValueError('Descriptor values must be finite and >= 0')
        norm = float(np.linalg.norm(self.descriptor))
        if norm > 0 and abs(norm - 1.0) > tol:
            raise ValueError(f'Descriptor norm {norm:.6f} is neither 0 nor 1')


@dataclass(frozen=True)
class FeatureParams(object):
    """DoG detector settings. Defaults come from the features section of arsrg_cfg.yml."""
    octaves: int = field(default_factory=lambda: int(_cfg('octaves', 3)))
    scales_per_octave: int = field(default_factory=lambda: int(_cfg('scales_per_octave', 3)))
    contrast_threshold: float = field(default_factory=lambda: float(_cfg('contrast_threshold', 0.03)))
    edge_threshold: float = field(default_factory=lambda: float(_cfg('edge_threshold', 10)))
    min_dimension: int = field(default_factory=lambda: int(_cfg('min_dimension', 16)))
    sigma: float = 1.6


def descriptor_matrix(kps: Sequence[Keypoint]) -> np.ndarray:
    """Stack descriptors into an (n, 128) array."""
    if not kps:
        return np.empty((0, DESCRIPTOR_SIZE), dtype=np.float64)
    return np.stack([kp.descriptor for kp in kps])


def position_matrix(kps: Sequence[Keypoint]) -> np.ndarray:
    """Stack positions into an (n, 2) array of (x, y)."""
    if not kps:
        return np.empty((0, 2), dtype=np.float64)
    return np.array([kp.position for kp in kps], dtype=np.float64)


def _octave_index(packed: int) -> int:
    """Octave from an OpenCV packed keypoint octave, -1 being the upsampled base image."""
    octave = packed & 255
    return octave - 256 if octave >= 128 else octave


def detect_and_describe(img: RasterImage, params: FeatureParams = None) -> List[Keypoint]:
    """Detect DoG scale-space extrema and describe them with 4x4x8 gradient histograms.

    Extrema come from the first `octaves` octaves (counting the upsampled base) with `scales_per_octave`
    scales each, Lowe's contrast and edge thresholds, a 36 bin orientation histogram per keypoint and
    descriptors clamped at 0.2 and renormalized. The result is sorted so equal input gives an equal list.

    Args:
        img (RasterImage): Gray or RGB image.
        params (FeatureParams): Detector settings, defaults from config.

    Returns:
        list[Keypoint]: Keypoints with unit L2 descriptors.

    Raises:
        TooSmall: If the image is smaller than min_dimension on either side.

    """
    params = params if params is not None else FeatureParams()
    if min(img.width, img.height) < params.min_dimension:
        raise TooSmall(f'{img!r} is smaller than {params.min_dimension}px, too small for keypoint detection')

    gray = to_gray(img).plane().copy()
    sift = cv2.SIFT_create(nfeatures=0, nOctaveLayers=params.scales_per_octave,
                           contrastThreshold=params.contrast_threshold,
                           edgeThreshold=params.edge_threshold, sigma=params.sigma)
    with Timer('detect_and_describe', logger):
        cv_keypoints, descriptors = sift.detectAndCompute(gray, None)

    keypoints = []
    for cv_kp, descriptor in zip(cv_keypoints, descriptors if descriptors is not None else []):
        if _octave_index(cv_kp.octave) > params.octaves - 2:
            continue
        x, y = cv_kp.pt
        if not (0 <= x < img.width and 0 <= y < img.height):
            continue
        keypoints.append(Keypoint(x, y, cv_kp.size / 2.0, math.radians(cv_kp.angle),
                                  normalize_descriptor(descriptor)))
    keypoints.sort(key=lambda kp: (kp.y, kp.x, kp.scale, kp.orientation, tuple(kp.descriptor)))
    logger.debug('Detected %d keypoints on %r', len(keypoints), img)
    return keypoints


def _format_keypoint(kp: Keypoint) -> str:
    values = [kp.x, kp.y, kp.scale, kp.orientation, *kp.descriptor.tolist()]
    return ' '.join(f'{v:.9g}' for v in values)


def save_keypoints(kps: Sequence[Keypoint], path: Union[str, Path]) -> Path:
    """Write keypoints in the ARSRG-KP text format.

    Args:
        kps (Sequence[Keypoint]): Keypoints.
        path (str, Path): Destination.

    Returns:
        Path: The written path.

    """
    lines = [KEYPOINT_HEADER, str(len(kps))]
    lines.extend(_format_keypoint(kp) for kp in kps)
    try:
        return atomic_write(path, '\n'.join(lines) + '\n')
    except OSError as e:
        raise ArsrgIoError(f'Could not write {path}: {e}') from e


def _parse_keypoint(line: str, line_no: int) -> Keypoint:
    tokens = line.split(' ')
    if len(tokens) != 4 + DESCRIPTOR_SIZE:
        raise FormatError(f'Expected {4 + DESCRIPTOR_SIZE} columns, got {len(tokens)}', f'line {line_no}')
    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as e:
        raise FormatError(f'Not a decimal number: {e}', f'line {line_no}') from e
    if not np.all(np.isfinite(values)):
        raise FormatError('Non finite value', f'line {line_no}')
    x, y, scale, orientation = values[:4]
    descriptor = values[4:]
    if x < 0 or y < 0:
        raise FormatError(f'Negative position ({x}, {y})', f'line {line_no}')
    if scale <= 0:
        raise FormatError(f'Scale must be > 0, got {scale}', f'line {line_no}')
    if not 0 <= orientation <= TWO_PI:
        raise FormatError(f'Orientation {orientation} outside [0, 2pi)', f'line {line_no}')
    if descriptor.min() < 0 or descriptor.max() > 1:
        raise FormatError('Descriptor values must lie in [0, 1]', f'line {line_no}')
    norm = np.linalg.norm(descriptor)
    if norm > 0 and abs(norm - 1.0) > UNIT_TOLERANCE:
        raise FormatError(f'Descriptor norm {norm:.4f} is not within 1% of 1', f'line {line_no}')
    return Keypoint(x, y, scale, orientation, normalize_descriptor(descriptor))


def load_keypoints(path: Union[str, Path]) -> List[Keypoint]:
    """Read keypoints in the ARSRG-KP text format, renormalizing near-unit descriptors.

    Args:
        path (str, Path): Source file.

    Returns:
        list[Keypoint]: Parsed keypoints.

    Raises:
        ArsrgIoError: If the file cannot be read.
        FormatError: On a wrong header, count, column count or out of range value.

    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ArsrgIoError(f'Could not read {path}: {e}') from e
    if not lines or lines[0].strip() != KEYPOINT_HEADER:
        raise FormatError(f'Expected header "{KEYPOINT_HEADER}"', 'line 1')
    try:
        count = int(lines[1].strip())
    except (IndexError, ValueError):
        raise FormatError('Missing keypoint count', 'line 2') from None
    rows = [line.strip() for line in lines[2:] if line.strip()]
    if count < 0 or len(rows) != count:
        raise FormatError(f'Header announces {count} keypoints, file holds {len(rows)}', 'line 2')
    keypoints = [_parse_keypoint(row, i + 3) for i, row in enumerate(rows)]
    logger.debug('Loaded %d keypoints from %s', len(keypoints), path)
    return keypoints
