"""Loading, converting and resampling raster images."""
from __future__ import annotations
from pathlib import Path
from dataclasses import dataclass
from typing import Union

import cv2
import numpy as np
from PIL import Image, UnidentifiedImageError

from arsrg.exceptions import ArsrgIoError, FormatError
from arsrg.utils.logging_setup import logger

SUPPORTED_FORMATS = {'PNG', 'PPM'}
GRAY_MODES = {'1', 'L', 'LA', 'I', 'I;16', 'I;16B', 'I;16L'}
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class RasterImage(object):
    """An 8 bit image held as a (height, width, channels) uint8 array, 1 channel for gray and 3 for RGB.

    """
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim == 2:
            pixels = pixels[:, :, np.newaxis]
        if pixels.ndim != 3 or pixels.shape[2] not in (1, 3):
            raise ValueError(f'Expected (h, w, 1|3) pixels, got shape {pixels.shape}')
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError(f'Image must be at least 1x1, got {pixels.shape[1]}x{pixels.shape[0]}')
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
                raise ValueError('Pixel values must be in [0, 255]')
            pixels = pixels.astype(np.uint8)
        pixels = np.ascontiguousarray(pixels)
        pixels.setflags(write=False)
        object.__setattr__(self, 'pixels', pixels)

    def __repr__(self):
        return f'<RasterImage {self.width}x{self.height}x{self.channels}>'

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def flat(self) -> np.ndarray:
        """Row-major, channel-interleaved pixel values.

        Returns:
            np.ndarray: 1D uint8 array of length width * height * channels.

        """
        return self.pixels.reshape(-1)

    def plane(self) -> np.ndarray:
        """Returns a (height, width) view for gray images, (height, width, 3) for RGB."""
        return self.pixels[:, :, 0] if self.channels == 1 else self.pixels

    @classmethod
    def from_flat(cls, width: int, height: int, channels: int, values) -> "RasterImage":
        """Factory method to construct from a flat row-major list of values.

        Args:
            width (int): Width in pixels.
            height (int): Height in pixels.
            channels (int): 1 or 3.
            values: Iterable of width * height * channels intensities.

        Returns:
            RasterImage: The image.

        """
        values = np.asarray(values)
        if values.size != width * height * channels:
            raise ValueError(f'Expected {width * height * channels} values, got {values.size}')
        return cls(values.reshape(height, width, channels))


def load_image(path: Union[str, Path]) -> RasterImage:
    """Decode a PNG, PPM or PGM file.

    Args:
        path (str, Path): Image path.

    Returns:
        RasterImage: Decoded image, 1 channel for gray files.

    Raises:
        ArsrgIoError: If the file is missing or unreadable.
        FormatError: If the file is not a supported, intact image.

    """
    path = Path(path)
    if not path.is_file():
        raise ArsrgIoError(f'No such image file: {path}')
    try:
        with Image.open(path) as im:
            if im.format not in SUPPORTED_FORMATS:
                raise FormatError(f'Unsupported image format {im.format} in {path}')
            im.load()
            if im.mode in GRAY_MODES:
                if im.mode.startswith('I'):
                    array = (np.asarray(im, dtype=np.uint32) >> 8).astype(np.uint8)
                else:
                    array = np.asarray(im.convert('L'))
            else:
                array = np.asarray(im.convert('RGB'))
    except UnidentifiedImageError as e:
        raise FormatError(f'Could not identify image {path}') from e
    except (OSError, SyntaxError, ValueError) as e:
        if isinstance(e, PermissionError):
            raise ArsrgIoError(f'Could not read {path}: {e}') from e
        raise FormatError(f'Corrupt image {path}: {e}') from e
    image = RasterImage(array)
    logger.debug('Loaded %s as %r', path, image)
    return image


def save_image(img: RasterImage, path: Union[str, Path]) -> Path:
    """Encode an image as PNG, or as PGM/PPM when the suffix asks for it.

    Args:
        img (RasterImage): Image to write.
        path (str, Path): Destination path, suffix .png, .pgm or .ppm.

    Returns:
        Path: The written path.

    """
    path = Path(path)
    suffix = path.suffix.lower()
    im = Image.fromarray(np.ascontiguousarray(img.plane()))
    if suffix == '.pgm' and img.channels != 1:
        im = im.convert('L')
    elif suffix == '.ppm' and img.channels != 3:
        im = im.convert('RGB')
    fmt = 'PNG' if suffix == '.png' else 'PPM' if suffix in ('.pgm', '.ppm') else None
    if fmt is None:
        raise FormatError(f'Unsupported output suffix "{path.suffix}"')
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        im.save(path, format=fmt)
    except OSError as e:
        raise ArsrgIoError(f'Could not write {path}: {e}') from e
    return path


def resize_image(img: RasterImage, target_w: int, target_h: int) -> RasterImage:
    """Bilinear resampling with pixel-center alignment.

    Args:
        img (RasterImage): Source image.
        target_w (int): Target width, at least 1.
        target_h (int): Target height, at least 1.

    Returns:
        RasterImage: Image of exactly target_w x target_h, img itself when the size already matches.

    """
    if target_w < 1 or target_h < 1:
        raise ValueError(f'Target size must be at least 1x1, got {target_w}x{target_h}')
    if (img.width, img.height) == (target_w, target_h):
        return img
    resized = cv2.resize(img.plane().copy(), (target_w, target_h), interpolation=cv2.INTER_LINEAR)
    return RasterImage(resized)


def to_gray(img: RasterImage) -> RasterImage:
    """ITU-R BT.601 luma, gray = round(0.299R + 0.587G + 0.114B).

    Args:
        img (RasterImage): 1 or 3 channel image.

    Returns:
        RasterImage: Single channel image, img itself when already gray.

    """
    if img.channels == 1:
        return img
    luma = img.pixels.astype(np.float64) @ LUMA_WEIGHTS
    return RasterImage(np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8))


def to_rgb(img: RasterImage) -> RasterImage:
    """Promote a gray image to 3 identical channels, RGB images are returned as is.

    """
    if img.channels == 3:
        return img
    return RasterImage(np.repeat(img.pixels, 3, axis=2))


def parse_size(value: str) -> tuple:
    """Parse a "WxH" size string.

    Args:
        value (str): eg "150x150".

    Returns:
        tuple: (width, height)

    """
    try:
        w, h = (int(v) for v in value.lower().split('x'))
    except ValueError:
        raise ValueError(f'Expected WxH, got "{value}"') from None
    if w < 1 or h < 1:
        raise ValueError(f'Size must be at least 1x1, got "{value}"')
    return w, h
