"""Image renderings of byte streams and the Gabor-grid texture descriptor.

Two renderings feed the same descriptor: the byteplot (one pixel per byte,
grayscale) and the bigram-DCT image (log counts of consecutive byte pairs
pushed through an orthonormal 2-D DCT).  The descriptor itself is a 320-d
vector: 20 Gabor band-pass filters applied in the frequency domain to the
image resampled to 64x64, each filter's response magnitude averaged over a
4x4 spatial grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .core import ByteStream, FeatureVector

# width schedule for the byteplot, keyed on file size in bytes (strict <)
_WIDTH_SCHEDULE = (
    (10_000, 32),
    (30_000, 64),
    (60_000, 128),
    (100_000, 256),
    (200_000, 384),
    (500_000, 512),
    (1_000_000, 768),
)
_WIDTH_MAX = 1024

GIST_SIZE = 64  # images are resampled to this square before filtering
GIST_GRID = 4  # responses averaged over a GIST_GRID x GIST_GRID grid
GIST_SCALES = (0.35, 0.175, 0.0875)  # radial centers, cycles per pixel
GIST_ORIENTATIONS = (8, 8, 4)  # orientations per scale; 20 filters total
_SIGMA_R_FACTOR = 0.55  # radial bandwidth relative to the center frequency
_SIGMA_T_FACTOR = 0.6  # angular bandwidth relative to orientation spacing


@dataclass(frozen=True)
class GrayImage:
    """A grayscale image with pixels in [0, 1], stored row-major."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pix = np.ascontiguousarray(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", pix)
        if pix.ndim != 2 or pix.shape[0] < 1 or pix.shape[1] < 1:
            raise ValueError(f"image must be 2-D and non-empty, got shape {pix.shape}")
        if not np.all(np.isfinite(pix)):
            raise ValueError("image contains non-finite pixels")
        if pix.min() < 0.0 or pix.max() > 1.0:
            raise ValueError("image pixels must lie in [0, 1]")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


def byteplot_width(size: int) -> int:
    """Row width for a file of ``size`` bytes."""
    for limit, width in _WIDTH_SCHEDULE:
        if size < limit:
            return width
    return _WIDTH_MAX


def byteplot_image(data: ByteStream) -> GrayImage:
    """Render one pixel per byte, byte/255, row width from the size schedule.

    The final row is zero-padded to full width.
    """
    raw = data.data
    if not raw:
        raise ValueError("empty stream")
    width = byteplot_width(len(raw))
    height = -(-len(raw) // width)  # ceil
    flat = np.zeros(width * height, dtype=np.float64)
    flat[: len(raw)] = np.frombuffer(raw, dtype=np.uint8)
    return GrayImage(pixels=(flat / 255.0).reshape(height, width))


def bigram_counts(data: ByteStream) -> np.ndarray:
    """256x256 matrix of consecutive byte-pair counts."""
    raw = data.data
    if len(raw) < 2:
        raise ValueError("insufficient bytes for bigrams")
    seq = np.frombuffer(raw, dtype=np.uint8)
    counts = np.zeros((256, 256), dtype=np.int64)
    np.add.at(counts, (seq[:-1], seq[1:]), 1)
    return counts


def dct_image_from_counts(counts: np.ndarray) -> GrayImage:
    """log1p the counts, take the orthonormal 2-D DCT, render |coefficients|
    min-max normalized to [0, 1].  A flat coefficient field maps to zeros."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (256, 256):
        raise ValueError(f"expected a 256x256 count matrix, got {counts.shape}")
    coeffs = np.abs(scipy.fft.dctn(np.log1p(counts), type=2, norm="ortho"))
    lo, hi = coeffs.min(), coeffs.max()
    if hi == lo:
        return GrayImage(pixels=np.zeros_like(coeffs))
    return GrayImage(pixels=(coeffs - lo) / (hi - lo))


def bigram_dct_image(data: ByteStream) -> GrayImage:
    return dct_image_from_counts(bigram_counts(data))


def _overlap_weights(n_src: int, n_out: int) -> np.ndarray:
    """Row i holds each source cell's share of output interval i.

    Exact box overlap, so downsampling is a true area average and the
    operator is linear.  Rows sum to 1.
    """
    weights = np.zeros((n_out, n_src), dtype=np.float64)
    scale = n_src / n_out
    for i in range(n_out):
        lo = i * scale
        hi = lo + scale
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_src)
        for j in range(j0, j1):
            weights[i, j] = min(hi, j + 1) - max(lo, j)
    return weights / scale


def resample_area(image: GrayImage, out_h: int = GIST_SIZE, out_w: int = GIST_SIZE) -> np.ndarray:
    """Area-average resample to ``out_h x out_w``; linear and deterministic."""
    rows = _overlap_weights(image.height, out_h)
    cols = _overlap_weights(image.width, out_w)
    return rows @ image.pixels @ cols.T


@lru_cache(maxsize=4)
def gabor_bank(size: int = GIST_SIZE) -> np.ndarray:
    """Frequency-domain transfer functions of the 20-filter Gabor bank.

    Single-sided Gaussian bumps: a radial Gaussian around each scale's
    center frequency times an angular Gaussian around each orientation,
    evaluated on the unshifted FFT grid.  The DC bin is zeroed exactly so a
    constant image excites nothing, and on an even grid the Nyquist row and
    column are zeroed too: those bins stand for +1/2 and -1/2 cycles at
    once, which would skew the orientation selectivity.
    """
    freqs = np.fft.fftfreq(size)
    fy, fx = np.meshgrid(freqs, freqs, indexing="ij")
    radius = np.hypot(fx, fy)
    angle = np.arctan2(fy, fx)

    filters = []
    for center, n_orient in zip(GIST_SCALES, GIST_ORIENTATIONS):
        sigma_r = _SIGMA_R_FACTOR * center
        sigma_t = _SIGMA_T_FACTOR * np.pi / n_orient
        for k in range(n_orient):
            theta = np.pi * k / n_orient
            dtheta = np.mod(angle - theta + np.pi, 2.0 * np.pi) - np.pi
            h = np.exp(
                -((radius - center) ** 2) / (2.0 * sigma_r**2)
                - dtheta**2 / (2.0 * sigma_t**2)
            )
            h[0, 0] = 0.0  # reject the mean exactly
            if size % 2 == 0:
                h[size // 2, :] = 0.0
                h[:, size // 2] = 0.0
            filters.append(h)
    bank = np.stack(filters)
    bank.setflags(write=False)
    return bank


def _grid_means(mag: np.ndarray) -> np.ndarray:
    cell = GIST_SIZE // GIST_GRID
    return mag.reshape(GIST_GRID, cell, GIST_GRID, cell).mean(axis=(1, 3)).ravel()


def gist(image: GrayImage, kind: str = "byteplot-gist") -> FeatureVector:
    """320-d Gabor-grid descriptor of an image.

    Order: scales outermost, then orientations, then the 4x4 grid row-major.
    Positively homogeneous: scaling the image scales the descriptor.
    """
    if kind not in ("byteplot-gist", "bigramdct-gist"):
        raise ValueError(f"gist kind must name an image family, got {kind!r}")
    resampled = resample_area(image)
    spectrum = np.fft.fft2(resampled)
    parts = [
        _grid_means(np.abs(np.fft.ifft2(spectrum * transfer)))
        for transfer in gabor_bank(GIST_SIZE)
    ]
    return FeatureVector(kind=kind, values=np.concatenate(parts))
