"""Image preparation and cell region identification.

Raw microscope images are converted to grayscale, illumination-normalized,
thresholded with Otsu's method, cleaned up with open/close morphology and
finally decomposed into connected components, each wrapped as a CellRegion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image; pixels is an (H, W) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"grayscale image must be 2-D and non-empty, got shape {p.shape}")
        if p.dtype != np.uint8:
            raise ValueError(f"grayscale image must be uint8, got {p.dtype}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """Foreground mask; bits is an (H, W) bool array."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {self.bits.shape}")
        if self.bits.dtype != np.bool_:
            raise ValueError(f"mask must be bool, got {self.bits.dtype}")

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class RegionMap:
    """Per-pixel region identity; ids is an (H, W) int32 array, 0 = background.

    Region ids are contiguous 1..R, assigned in raster order of each
    region's first pixel.
    """

    ids: np.ndarray

    @property
    def height(self) -> int:
        return self.ids.shape[0]

    @property
    def width(self) -> int:
        return self.ids.shape[1]

    @property
    def n_regions(self) -> int:
        return int(self.ids.max(initial=0))


@dataclass
class CellRegion:
    """One connected component.

    pixels and border_pixels are (N, 2) int arrays of (x, y) coordinates;
    border pixels are the region pixels 8-adjacent to any non-region pixel
    (pixels on the image edge count as adjacent to non-region).
    bbox is (min_x, min_y, max_x, max_y), inclusive.
    """

    id: int
    pixels: np.ndarray
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]
    border_pixels: np.ndarray = field(repr=False, default=None)

    @property
    def area(self) -> int:
        return len(self.pixels)


def to_grayscale(image: np.ndarray) -> GrayImage:
    """Convert a 3-channel color grid to luminance: round(0.299R + 0.587G + 0.114B)."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) color image, got shape {img.shape}")
    if img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError("empty image")
    rgb = img.astype(np.float64)
    lum = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return GrayImage(np.clip(np.rint(lum), 0, 255).astype(np.uint8))


def default_background_window(img: GrayImage) -> int:
    """Quarter of the smaller image side, rounded up to odd, at least 3."""
    w = max(3, -(-min(img.width, img.height) // 4))
    return w if w % 2 == 1 else w + 1


def normalize_illumination(img: GrayImage, background_window: int | None = None) -> GrayImage:
    """Divide out a smooth background estimated by mean filtering.

    Output = clamp(round(img / background * mean(background))); the background
    estimate is floored at 1 gray level so division is always defined.
    """
    if background_window is None:
        background_window = default_background_window(img)
    if background_window < 3 or background_window % 2 == 0:
        raise ValueError(f"background window must be odd and >= 3, got {background_window}")
    if background_window > img.width and background_window > img.height:
        raise ValueError(
            f"background window {background_window} exceeds both image dimensions "
            f"{img.width}x{img.height}"
        )
    pix = img.pixels.astype(np.float64)
    background = ndimage.uniform_filter(pix, size=background_window, mode="reflect")
    background = np.maximum(background, 1.0)
    out = pix / background * background.mean()
    return GrayImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def otsu_threshold(img: GrayImage, dark_foreground: bool = True) -> tuple[int, BinaryMask]:
    """Otsu's threshold over the 256-bin histogram.

    Returns the level t maximizing between-class variance of the split
    {v < t} / {v >= t}, lowest level on ties. Foreground is the strictly-below
    class when dark_foreground (stained cells on a bright background),
    otherwise the complement.
    """
    hist = np.bincount(img.pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if np.count_nonzero(hist) < 2:
        raise ValueError("constant image: no threshold separates it")
    # w0(t), mu0(t) for class {v < t}; candidate levels t = 0..255
    cum = np.concatenate(([0.0], np.cumsum(hist)))[:256]
    cum_mean = np.concatenate(([0.0], np.cumsum(hist * np.arange(256))))[:256]
    w0 = cum / total
    w1 = 1.0 - w0
    grand_mean = (hist * np.arange(256)).sum() / total
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = np.where(cum > 0, cum_mean / cum, 0.0)
        mu1 = np.where(total - cum > 0, (grand_mean * total - cum_mean) / (total - cum), 0.0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    level = int(np.argmax(between))  # argmax picks the lowest index on ties
    below = img.pixels < level
    mask = below if dark_foreground else ~below
    return level, BinaryMask(mask)


def disk_footprint(radius: int) -> np.ndarray:
    """Boolean disk: offsets with dx^2 + dy^2 <= radius^2."""
    if radius < 1:
        raise ValueError(f"structuring element radius must be >= 1, got {radius}")
    r = np.arange(-radius, radius + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius * radius


def dilate(mask: BinaryMask, footprint: np.ndarray) -> BinaryMask:
    # outside the image counts as background
    return BinaryMask(ndimage.maximum_filter(mask.bits, footprint=footprint, mode="constant", cval=False))


def erode(mask: BinaryMask, footprint: np.ndarray) -> BinaryMask:
    # outside the image counts as foreground, so erosion never eats the border by itself
    return BinaryMask(ndimage.minimum_filter(mask.bits, footprint=footprint, mode="constant", cval=True))


def morph_refine(mask: BinaryMask, se_radius: int = 2, iterations: int = 2) -> BinaryMask:
    """Apply (open then close) `iterations` times with a disk structuring element."""
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    fp = disk_footprint(se_radius)
    out = mask
    for _ in range(iterations):
        out = dilate(erode(out, fp), fp)  # open
        out = erode(dilate(out, fp), fp)  # close
    return out


def _region_border(region_bits: np.ndarray) -> np.ndarray:
    # border = region pixels 8-adjacent to a non-region pixel (image edge counts)
    interior = ndimage.minimum_filter(region_bits, size=3, mode="constant", cval=False)
    return region_bits & ~interior


def connected_components(
    mask: BinaryMask,
    connectivity: int = 8,
    min_area: int = 64,
    discard_border: bool = True,
) -> tuple[RegionMap, list[CellRegion]]:
    """Label maximal connected foreground sets and wrap survivors as CellRegions.

    Regions touching the image border or smaller than min_area are discarded
    as noise. Surviving ids are renumbered 1..R in raster order of each
    region's first pixel.
    """
    if connectivity == 8:
        structure = np.ones((3, 3), dtype=bool)
    elif connectivity == 4:
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")

    raw, n_raw = ndimage.label(mask.bits, structure=structure)
    if n_raw == 0:
        return RegionMap(np.zeros_like(raw, dtype=np.int32)), []

    areas = np.bincount(raw.ravel(), minlength=n_raw + 1)
    keep = areas >= min_area
    keep[0] = False
    if discard_border:
        edge_ids = np.unique(np.concatenate([raw[0, :], raw[-1, :], raw[:, 0], raw[:, -1]]))
        keep[edge_ids] = False

    # scipy labels in raster order of first pixel already; renumber survivors preserving it
    new_id = np.zeros(n_raw + 1, dtype=np.int32)
    new_id[keep] = np.arange(1, int(keep.sum()) + 1, dtype=np.int32)
    ids = new_id[raw]

    regions = []
    slices = ndimage.find_objects(ids)
    for idx, sl in enumerate(slices, start=1):
        local = ids[sl] == idx
        ys, xs = np.nonzero(local)
        ys = ys + sl[0].start
        xs = xs + sl[1].start
        full = np.zeros(ids.shape, dtype=bool)
        full[ys, xs] = True
        bys, bxs = np.nonzero(_region_border(full))
        regions.append(
            CellRegion(
                id=idx,
                pixels=np.column_stack([xs, ys]).astype(np.int64),
                bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
                centroid=(float(xs.mean()), float(ys.mean())),
                border_pixels=np.column_stack([bxs, bys]).astype(np.int64),
            )
        )
    return RegionMap(ids), regions


def regions_from_map(region_map: RegionMap) -> list[CellRegion]:
    """Rebuild CellRegions from a stored region map."""
    regions = []
    slices = ndimage.find_objects(region_map.ids)
    for idx, sl in enumerate(slices, start=1):
        if sl is None:
            continue
        local = region_map.ids[sl] == idx
        ys, xs = np.nonzero(local)
        ys = ys + sl[0].start
        xs = xs + sl[1].start
        full = np.zeros(region_map.ids.shape, dtype=bool)
        full[ys, xs] = True
        bys, bxs = np.nonzero(_region_border(full))
        regions.append(
            CellRegion(
                id=idx,
                pixels=np.column_stack([xs, ys]).astype(np.int64),
                bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
                centroid=(float(xs.mean()), float(ys.mean())),
                border_pixels=np.column_stack([bxs, bys]).astype(np.int64),
            )
        )
    return regions


def extract_patch(img: GrayImage, region: CellRegion, pad: int = 0) -> tuple[GrayImage, BinaryMask]:
    """Cut the region's bounding box (expanded by pad, clamped) out of the image.

    The mask marks the region's own pixels within the patch.
    """
    min_x, min_y, max_x, max_y = region.bbox
    x0 = max(0, min_x - pad)
    y0 = max(0, min_y - pad)
    x1 = min(img.width - 1, max_x + pad)
    y1 = min(img.height - 1, max_y + pad)
    patch = img.pixels[y0 : y1 + 1, x0 : x1 + 1]
    mask = np.zeros(patch.shape, dtype=bool)
    xs = region.pixels[:, 0] - x0
    ys = region.pixels[:, 1] - y0
    mask[ys, xs] = True
    return GrayImage(patch.copy()), BinaryMask(mask)


# ---------------------------------------------------------------------------
# PNG I/O

def read_image(path) -> np.ndarray:
    """Read a PNG as (H, W) uint8 grayscale or (H, W, 3) uint8 color."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            arr = np.asarray(im)
            if arr.dtype != np.uint8:
                arr = np.clip(arr, 0, 255).astype(np.uint8)
            return arr
        return np.asarray(im.convert("RGB"))


def load_grayscale(path) -> GrayImage:
    arr = read_image(path)
    if arr.ndim == 3:
        return to_grayscale(arr)
    return GrayImage(arr)


def write_mask_png(mask: BinaryMask, path) -> None:
    Image.fromarray(mask.bits.astype(np.uint8) * 255, mode="L").save(path)


def read_mask_png(path) -> BinaryMask:
    with Image.open(path) as im:
        return BinaryMask(np.asarray(im.convert("L")) > 0)


def write_region_map_png(region_map: RegionMap, path) -> None:
    ids = region_map.ids
    if ids.max(initial=0) > 65535:
        raise ValueError("region map has more than 65535 regions")
    Image.fromarray(ids.astype(np.uint16)).save(path)


def read_region_map_png(path) -> RegionMap:
    with Image.open(path) as im:
        return RegionMap(np.asarray(im, dtype=np.int32))
