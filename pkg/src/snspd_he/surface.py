"""AFM height-map and TEM image analysis.

Covers strip-averaged line profiles, RMS roughness, the linear fit of surface
elevation against fluence, wrinkling amplitude of a surface trace, and the
depth-resolved dark-contrast statistics of a HAADF image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DomainError

DETREND_MODES = ("none", "mean", "linear")


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Heights in nm on a square pixel grid; rows are y, columns are x."""

    heights: np.ndarray
    pixel_size: float

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        if h.ndim != 2 or h.size == 0:
            raise DomainError("heights must be a non-empty 2D array")
        if not np.all(np.isfinite(h)):
            raise DomainError("heights contain non-finite values")
        if not self.pixel_size > 0:
            raise DomainError("pixel_size must be positive")
        object.__setattr__(self, "heights", h)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Image intensities with a depth (nm) for every row.

    ``pixel_size`` is the lateral pixel pitch in nm; it defaults to the mean
    row spacing of ``depth_axis``.
    """

    intensities: np.ndarray
    depth_axis: np.ndarray
    pixel_size: float | None = None

    def __post_init__(self):
        img = np.asarray(self.intensities, dtype=float)
        depth = np.asarray(self.depth_axis, dtype=float)
        if img.ndim != 2 or img.size == 0:
            raise DomainError("intensities must be a non-empty 2D array")
        if not np.all(np.isfinite(img)):
            raise DomainError("intensities contain non-finite values")
        if depth.shape != (img.shape[0],):
            raise DomainError("depth_axis needs one entry per image row")
        steps = np.diff(depth)
        if depth.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise DomainError("depth_axis must be strictly monotone")
        pitch = self.pixel_size
        if pitch is None:
            pitch = float(np.abs(steps).mean()) if depth.size > 1 else 1.0
        if not pitch > 0:
            raise DomainError("pixel_size must be positive")
        object.__setattr__(self, "intensities", img)
        object.__setattr__(self, "depth_axis", depth)
        object.__setattr__(self, "pixel_size", float(pitch))

    @classmethod
    def with_uniform_depth(cls, intensities, pixel_size: float, top_depth: float = 0.0) -> GrayImage:
        rows = np.asarray(intensities).shape[0]
        return cls(intensities, top_depth + pixel_size * np.arange(rows), pixel_size)


def strip_averaged_profile(hmap: HeightMap, axis: int = 1, strip_width: float | None = None,
                           center: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Line profile along ``axis`` averaged over a perpendicular strip.

    ``axis=1`` runs the profile along x (columns) and averages a band of rows;
    ``axis=0`` runs along y.  ``strip_width`` is in nm (default: one pixel) and
    the strip is centred on index ``center`` of the perpendicular axis
    (default: the middle).  Returns (positions in nm, mean heights in nm).
    """
    if axis not in (0, 1):
        raise DomainError("axis must be 0 or 1")
    h = hmap.heights if axis == 1 else hmap.heights.T
    n_across = h.shape[0]
    width_px = 1 if strip_width is None else int(round(strip_width / hmap.pixel_size))
    if width_px < 1:
        raise DomainError("strip narrower than one pixel")
    mid = n_across // 2 if center is None else int(center)
    start = mid - width_px // 2
    stop = start + width_px
    if start < 0 or stop > n_across:
        raise DomainError(f"strip of {width_px} px around index {mid} exceeds the map ({n_across} px)")
    profile = h[start:stop].mean(axis=0)
    positions = hmap.pixel_size * np.arange(h.shape[1])
    return positions, profile


def _plane_residual(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        x = np.arange(values.size, dtype=float)
        design = np.column_stack([np.ones_like(x), x])
    else:
        yy, xx = np.indices(values.shape, dtype=float)
        design = np.column_stack([np.ones(values.size), xx.ravel(), yy.ravel()])
    coeffs, *_ = np.linalg.lstsq(design, values.ravel(), rcond=None)
    return values.ravel() - design @ coeffs


def rms_roughness(values, detrend: str = "mean") -> float:
    """Root-mean-square height after removing nothing, the mean, or a best-fit line/plane.

    ``values`` is a 1D profile, a 2D region, or a :class:`HeightMap`.
    """
    if isinstance(values, HeightMap):
        values = values.heights
    h = np.asarray(values, dtype=float)
    if h.size < 2:
        raise DomainError("need at least 2 samples")
    if detrend == "none":
        resid = h.ravel()
    elif detrend == "mean":
        resid = h.ravel() - h.mean()
    elif detrend == "linear":
        resid = _plane_residual(h)
    else:
        raise DomainError(f"detrend must be one of {DETREND_MODES}")
    return float(np.sqrt(np.mean(resid**2)))


@dataclass(frozen=True)
class ElevationFit:
    slope: float  # nm per (ion/nm^2)
    intercept: float  # elevation at zero fluence, nm
    intercept_fluence: float  # fluence at zero elevation, ions/nm^2
    n_points: int


def elevation_onset_fit(fluence, elevation, exclusion_below: float = 250.0) -> ElevationFit:
    """Straight-line fit of elevation vs fluence using points at or above
    ``exclusion_below``; reports where the line crosses zero elevation."""
    fluence = np.asarray(fluence, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    if fluence.shape != elevation.shape:
        raise DomainError("fluence and elevation must have equal length")
    keep = fluence >= exclusion_below
    if np.count_nonzero(keep) < 2 or np.unique(fluence[keep]).size < 2:
        raise DomainError("need at least two distinct fluences at or above the exclusion limit")
    slope, intercept = np.polyfit(fluence[keep], elevation[keep], 1)
    if slope <= 0:
        raise DomainError(f"elevation does not rise with fluence (slope {slope:.4g})")
    return ElevationFit(float(slope), float(intercept), float(-intercept / slope), int(keep.sum()))


@dataclass(frozen=True)
class WrinklingAmplitude:
    range: float
    rms: float


def wrinkling_amplitude(heights) -> WrinklingAmplitude:
    """Peak-to-peak range and RMS of the deviation from the mean height of a trace."""
    h = np.asarray(heights, dtype=float)
    if h.ndim == 2 and h.shape[1] == 2:
        h = h[:, 1]
    if h.size < 2:
        raise DomainError("need at least 2 samples")
    dev = h - h.mean()
    return WrinklingAmplitude(float(dev.max() - dev.min()), float(np.sqrt(np.mean(dev**2))))


FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)
EIGHT_CONNECTED = ndimage.generate_binary_structure(2, 2)


def label_components(mask, connectivity: int = 4) -> tuple[np.ndarray, int]:
    """Connected-component labels (0 = background) and the component count."""
    structure = {4: FOUR_CONNECTED, 8: EIGHT_CONNECTED}.get(connectivity)
    if structure is None:
        raise DomainError("connectivity must be 4 or 8")
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=structure)
    return labels, int(count)


def dark_contrast_mask(image: GrayImage, background_window: int = 31, threshold: float = 1.5) -> np.ndarray:
    """Pixels darker than the local mean by more than ``threshold`` local standard deviations.

    Local statistics come from a square moving window (reflected at the edges).
    """
    if background_window < 3 or background_window % 2 == 0:
        raise DomainError("background_window must be odd and >= 3")
    if threshold < 0:
        raise DomainError("threshold must be >= 0")
    img = image.intensities
    spread = float(img.std())
    if spread <= 1e-12 * max(float(np.abs(img).max()), 1e-300):
        return np.zeros(img.shape, dtype=bool)
    # work on a standardised copy so the result is independent of gain and offset
    z = (img - img.mean()) / spread
    local_mean = ndimage.uniform_filter(z, size=background_window, mode="reflect")
    local_sq = ndimage.uniform_filter(z * z, size=background_window, mode="reflect")
    local_std = np.sqrt(np.clip(local_sq - local_mean**2, 0.0, None))
    flat = local_std <= 1e-9
    return ((z - local_mean) < -threshold * local_std) & ~flat


@dataclass(frozen=True)
class DarkContrastProfile:
    depth: np.ndarray  # nm
    area_fraction: np.ndarray
    mean_region_size: np.ndarray  # nm^2, NaN where no region touches the row


def dark_contrast_by_depth(image: GrayImage, background_window: int = 31, threshold: float = 1.5,
                           connectivity: int = 4) -> DarkContrastProfile:
    """Per-row dark-contrast area fraction and mean size of the regions crossing each row.

    Pipeline: local background subtraction, thresholding at ``threshold``
    local standard deviations, connected-component labelling.
    """
    mask = dark_contrast_mask(image, background_window, threshold)
    labels, count = label_components(mask, connectivity)
    pixel_area = image.pixel_size**2
    fraction = mask.mean(axis=1)
    sizes = np.zeros(count + 1)
    if count:
        sizes = np.bincount(labels.ravel(), minlength=count + 1).astype(float) * pixel_area
    mean_size = np.full(mask.shape[0], math.nan)
    for row in range(mask.shape[0]):
        present = np.unique(labels[row])
        present = present[present > 0]
        if present.size:
            mean_size[row] = sizes[present].mean()
    return DarkContrastProfile(image.depth_axis.copy(), fraction, mean_size)


def read_height_csv(path) -> HeightMap:
    """Plain-matrix CSV whose first line is ``pixel_size_nm,<value>``."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if len(header) < 2 or header[0].strip() != "pixel_size_nm":
            raise DomainError(f"{path}: first line must be 'pixel_size_nm,<value>'")
        pixel = float(header[1])
        heights = np.loadtxt(fh, delimiter=",", ndmin=2)
    return HeightMap(heights, pixel)


def write_height_csv(path, hmap: HeightMap) -> None:
    with open(path, "w") as fh:
        fh.write(f"pixel_size_nm,{hmap.pixel_size!r}\n")
        for row in hmap.heights:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_pgm(path) -> np.ndarray:
    """Binary (P5) or ASCII (P2) portable graymap, 8 or 16 bit."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos + 1)
    elif magic == b"P2":
        raw = np.array(data[pos:].split(), dtype=np.int64)[: width * height]
    else:
        raise DomainError(f"{path}: not a PGM file (magic {magic!r})")
    if raw.size != width * height:
        raise DomainError(f"{path}: truncated image data")
    return raw.reshape(height, width).astype(float)


def write_pgm(path, image, maxval: int | None = None) -> None:
    """Write a binary PGM; values are rounded and must fit in 0..65535."""
    img = np.rint(np.asarray(image, dtype=float)).astype(np.int64)
    if img.min() < 0 or img.max() > 65535:
        raise DomainError("PGM values must lie in 0..65535")
    maxval = int(img.max()) if maxval is None else maxval
    maxval = max(maxval, 1)
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode())
        fh.write(img.astype(dtype).tobytes())


def read_matrix_csv(path) -> np.ndarray:
    """Plain numeric matrix; a leading non-numeric header row is skipped."""
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")]
        skip = 0
    except ValueError:
        skip = 1
    return np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
