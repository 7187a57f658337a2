"""Semantic extraction: turn a source image into the map a service transmits.

Desk-scale extractors are computed here (Canny edges, Sobel magnitude,
intensity quantization); heavyweight learned extractors (depth, pose,
learned edges) are supported only as precomputed PGM files located
through a ``{id}`` path template.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MissingMapError, ShapeError
from .image import BINARY, LABELS, SemanticMap, quantize_levels, read_pgm


@dataclass(frozen=True)
class Canny:
    """Fractional-threshold Canny parameters.

    ``low`` and ``high`` are fractions of the maximum gradient magnitude,
    so edge sets are invariant under positive affine intensity scaling.
    """

    low: float = 0.1
    high: float = 0.2
    sigma: float = 1.4

    def __post_init__(self):
        if not 0.0 < self.low < self.high <= 1.0:
            raise DomainError(f"need 0 < low < high <= 1, got low={self.low} high={self.high}")
        if self.sigma <= 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class SobelMagnitude:
    """Soft edge map: Sobel gradient magnitude rescaled to [0, 1]."""


@dataclass(frozen=True)
class QuantizeSegmentation:
    """Intensity quantization into K levels, a stand-in for learned segmentation."""

    levels: int

    def __post_init__(self):
        if self.levels < 2:
            raise DomainError(f"level count must be >= 2, got {self.levels}")


@dataclass(frozen=True)
class ExternalMap:
    """Precomputed map loaded from ``template`` with ``{id}`` substituted."""

    template: str

    def __post_init__(self):
        if "{id}" not in self.template:
            raise DomainError(f"template must contain '{{id}}', got {self.template!r}")


ExtractorKind = Canny | SobelMagnitude | QuantizeSegmentation | ExternalMap


def extractor_label(kind: ExtractorKind) -> str:
    """Stable comma-free name used in CSV output and tie-breaking."""
    if isinstance(kind, Canny):
        return f"canny(low={kind.low};high={kind.high};sigma={kind.sigma})"
    if isinstance(kind, SobelMagnitude):
        return "sobel"
    if isinstance(kind, QuantizeSegmentation):
        return f"quantize(k={kind.levels})"
    if isinstance(kind, ExternalMap):
        return f"external({kind.template})"
    raise DomainError(f"unknown extractor kind {kind!r}")


def _shifted(arr: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """View of arr shifted by (dy, dx) with border coordinates clamped."""
    h, w = arr.shape
    ys = np.clip(np.arange(h) + dy, 0, h - 1)
    xs = np.clip(np.arange(w) + dx, 0, w - 1)
    return arr[np.ix_(ys, xs)]


def _gaussian_blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1)
    weights = np.exp(-(offsets.astype(float) ** 2) / (2.0 * sigma * sigma))
    weights /= weights.sum()
    # Separable passes with per-axis clamping equal the 2D product kernel.
    out = np.zeros_like(arr)
    for k, off in enumerate(offsets):
        out += weights[k] * _shifted(arr, 0, off)
    final = np.zeros_like(arr)
    for k, off in enumerate(offsets):
        final += weights[k] * _shifted(out, off, 0)
    return final


def _sobel_gradients(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Paired differences keep flat regions at exactly zero gradient.
    gx = (
        (_shifted(arr, -1, 1) - _shifted(arr, -1, -1))
        + 2.0 * (_shifted(arr, 0, 1) - _shifted(arr, 0, -1))
        + (_shifted(arr, 1, 1) - _shifted(arr, 1, -1))
    )
    gy = (
        (_shifted(arr, 1, -1) - _shifted(arr, -1, -1))
        + 2.0 * (_shifted(arr, 1, 0) - _shifted(arr, -1, 0))
        + (_shifted(arr, 1, 1) - _shifted(arr, -1, 1))
    )
    return gx, gy


_SECTOR_NEIGHBORS = ((0, 1), (1, 1), (1, 0), (1, -1))


def canny(image: SemanticMap, params: Canny = Canny()) -> SemanticMap:
    """Binary edge map via blur, Sobel, non-maximum suppression, hysteresis.

    Stages: Gaussian blur (radius ceil(3*sigma), clamped borders), 3x3
    Sobel gradients, direction quantized to 4 sectors, keep-if->= NMS
    along the gradient, double threshold at low/high fractions of the
    maximum magnitude, then 8-connected hysteresis from strong pixels.
    """
    if min(image.width, image.height) < 5:
        raise DomainError(f"canny needs min dimension >= 5, got {image.width}x{image.height}")
    blurred = _gaussian_blur(image.pixels, params.sigma)
    gx, gy = _sobel_gradients(blurred)
    mag = np.hypot(gx, gy)
    gmax = mag.max()
    if gmax == 0.0:
        return SemanticMap(np.zeros_like(mag), kind=BINARY)

    deg = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int64)
    sector[(deg >= 22.5) & (deg < 67.5)] = 1
    sector[(deg >= 67.5) & (deg < 112.5)] = 2
    sector[(deg >= 112.5) & (deg < 157.5)] = 3

    nms = np.zeros_like(mag)
    for sec, (dy, dx) in enumerate(_SECTOR_NEIGHBORS):
        fwd = _shifted(mag, dy, dx)
        bwd = _shifted(mag, -dy, -dx)
        keep = (sector == sec) & (mag >= fwd) & (mag >= bwd)
        nms[keep] = mag[keep]

    strong = nms >= params.high * gmax
    weak = nms >= params.low * gmax
    edges = strong.copy()
    frontier = strong
    while frontier.any():
        reach = np.zeros_like(frontier)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy or dx:
                    reach |= _shifted(frontier, dy, dx)
        newly = reach & weak & ~edges
        edges |= newly
        frontier = newly
    return SemanticMap(edges.astype(np.float64), kind=BINARY)


def sobel_magnitude(image: SemanticMap) -> SemanticMap:
    """Gradient magnitude rescaled by its maximum; all-flat input gives zeros."""
    if min(image.width, image.height) < 3:
        raise DomainError(f"sobel needs min dimension >= 3, got {image.width}x{image.height}")
    gx, gy = _sobel_gradients(image.pixels)
    mag = np.hypot(gx, gy)
    gmax = mag.max()
    if gmax == 0.0:
        return SemanticMap(np.zeros_like(mag))
    return SemanticMap(mag / gmax)


def quantize_segmentation(image: SemanticMap, levels: int) -> SemanticMap:
    """Quantize intensities into K levels on the grid {0/(K-1), ..., 1}."""
    bins = quantize_levels(image.pixels, levels)
    return SemanticMap(bins / (levels - 1), kind=LABELS, levels=levels)


def external_map(template: str, image_id: str) -> SemanticMap:
    """Load the precomputed PGM at ``template`` with ``{id}`` substituted."""
    path = template.replace("{id}", image_id)
    if not os.path.exists(path):
        raise MissingMapError(f"external semantic map not found: {path}")
    return read_pgm(path)


def extract(kind: ExtractorKind, image: SemanticMap, image_id: str | None = None) -> SemanticMap:
    """Run the extractor ``kind`` on ``image``; external maps need ``image_id``."""
    if isinstance(kind, Canny):
        return canny(image, kind)
    if isinstance(kind, SobelMagnitude):
        return sobel_magnitude(image)
    if isinstance(kind, QuantizeSegmentation):
        return quantize_segmentation(image, kind.levels)
    if isinstance(kind, ExternalMap):
        if image_id is None:
            raise DomainError("external extractor needs an image id")
        loaded = external_map(kind.template, image_id)
        if (loaded.width, loaded.height) != (image.width, image.height):
            raise ShapeError(
                f"external map for {image_id!r} is {loaded.width}x{loaded.height}, "
                f"source image is {image.width}x{image.height}"
            )
        return loaded
    raise DomainError(f"unknown extractor kind {kind!r}")
