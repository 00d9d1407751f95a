"""Seeded stochastic training augmentation and deterministic TTA crops.

Every random decision for an image is derived from (seed, item_key)
through a fixed hash (blake2b) feeding a fixed PRNG (PCG64), so the
augmentation stream is reproducible regardless of worker scheduling.

Transform order inside apply_transform: affine (rotate, shear, zoom)
with bilinear sampling and reflection padding, anchored crop or pad to
the policy's square size, flips, lighting, cutout.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .validation import check_image


@dataclass(frozen=True)
class AugmentationPolicy:
    """Bounds and probabilities for stochastic training transforms.

    ``crop_pad_size`` fixes the output side length and has no sensible
    universal default, so it is required.
    """

    crop_pad_size: int
    max_rotate: float = 45.0
    p_affine: float = 0.5
    do_flip: bool = True
    flip_vert: bool = True
    max_zoom: float = 1.05
    max_lighting: float = 0.2
    max_shear: float = 0.0
    cutout_holes: tuple = (1, 1)
    cutout_length: tuple = (16, 16)
    cutout_p: float = 0.5

    def __post_init__(self):
        if self.crop_pad_size < 1:
            raise ValueError(f"crop_pad_size must be >= 1, got {self.crop_pad_size}")
        for name in ("p_affine", "cutout_p"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.max_rotate < 0 or self.max_lighting < 0 or self.max_shear < 0:
            raise ValueError("rotation, lighting and shear bounds must be >= 0")
        if self.max_zoom < 1.0:
            raise ValueError(f"max_zoom must be >= 1, got {self.max_zoom}")
        for name in ("cutout_holes", "cutout_length"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} must be an increasing non-negative range")
        if self.cutout_length[0] < 1 and self.cutout_p > 0:
            raise ValueError("cutout_length must be >= 1 when cutout is enabled")


@dataclass(frozen=True)
class TransformSample:
    """One concrete draw from a policy.

    dx/dy anchor the crop (0 = left/top edge, 0.5 = centered, 1 =
    right/bottom edge); cutout is a tuple of (x, y, w, h) rectangles in
    output coordinates.
    """

    crop_size: int
    apply_affine: bool = False
    angle: float = 0.0
    dx: float = 0.5
    dy: float = 0.5
    zoom: float = 1.0
    shear: float = 0.0
    flip_h: bool = False
    flip_v: bool = False
    lighting: float = 0.0
    cutout: tuple = field(default=())

    @classmethod
    def identity(cls, crop_size: int) -> "TransformSample":
        return cls(crop_size=crop_size)

    @property
    def is_identity(self) -> bool:
        return (
            not self.apply_affine
            and not self.flip_h
            and not self.flip_v
            and self.lighting == 0.0
            and not self.cutout
        )


def transform_rng(seed: int, item_key: str) -> np.random.Generator:
    """PCG64 generator keyed by a stable hash of (seed, item_key)."""
    material = f"{seed}\x1f{item_key}".encode("utf-8")
    digest = hashlib.blake2b(material, digest_size=16).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))


def sample_transform(policy: AugmentationPolicy, seed: int, item_key: str) -> TransformSample:
    """Draw one TransformSample, deterministically in (seed, item_key).

    Draw order: affine coin, then (if affine) angle, dx, dy, zoom,
    shear; flip coins (only for enabled axes); lighting; cutout coin and
    rectangles. All values respect the policy bounds.
    """
    rng = transform_rng(seed, item_key)
    apply_affine = rng.random() < policy.p_affine
    if apply_affine:
        angle = rng.uniform(-policy.max_rotate, policy.max_rotate)
        dx = rng.random()
        dy = rng.random()
        zoom = rng.uniform(1.0, policy.max_zoom)
        shear = rng.uniform(-policy.max_shear, policy.max_shear)
    else:
        angle, dx, dy, zoom, shear = 0.0, 0.5, 0.5, 1.0, 0.0
    flip_h = bool(policy.do_flip and rng.random() < 0.5)
    flip_v = bool(policy.flip_vert and rng.random() < 0.5)
    lighting = rng.uniform(-policy.max_lighting, policy.max_lighting) if policy.max_lighting else 0.0
    cutout = ()
    if policy.cutout_p and rng.random() < policy.cutout_p:
        size = policy.crop_pad_size
        n_lo, n_hi = policy.cutout_holes
        rects = []
        for _ in range(int(rng.integers(n_lo, n_hi + 1))):
            l_lo, l_hi = policy.cutout_length
            side = min(int(rng.integers(l_lo, l_hi + 1)), size)
            x = int(rng.integers(0, size - side + 1))
            y = int(rng.integers(0, size - side + 1))
            rects.append((x, y, side, side))
        cutout = tuple(rects)
    return TransformSample(
        crop_size=policy.crop_pad_size,
        apply_affine=apply_affine,
        angle=angle,
        dx=dx,
        dy=dy,
        zoom=zoom,
        shear=shear,
        flip_h=flip_h,
        flip_v=flip_v,
        lighting=lighting,
        cutout=cutout,
    )


def _affine_resample(arr: np.ndarray, angle: float, zoom: float, shear: float) -> np.ndarray:
    """Rotate/shear/zoom about the center, bilinear, mirrored boundary.

    Positive angle turns content clockwise on screen (the y axis points
    down). Zoom >= 1 enlarges content, so centered zoom never samples
    outside the frame.
    """
    h, w = arr.shape[:2]
    theta = np.deg2rad(angle)
    sh = np.deg2rad(shear)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    shear_m = np.array([[1.0, np.tan(sh)], [0.0, 1.0]])
    inverse = np.linalg.inv(rot @ shear_m * zoom)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    rel = np.stack([xs - cx, ys - cy])
    src = np.tensordot(inverse, rel, axes=1)
    coords = [src[1] + cy, src[0] + cx]
    out = np.empty_like(arr)
    for ch in range(arr.shape[2]):
        out[..., ch] = map_coordinates(arr[..., ch], coords, order=1, mode="mirror")
    return out


def _crop_or_pad(arr: np.ndarray, size: int, dx: float, dy: float) -> np.ndarray:
    h, w = arr.shape[:2]
    if w >= size:
        x0 = int(round(dx * (w - size)))
        arr = arr[:, x0 : x0 + size]
    else:
        pad = size - w
        left = int(round(dx * pad))
        arr = np.pad(arr, ((0, 0), (left, pad - left), (0, 0)), mode="reflect")
    if h >= size:
        y0 = int(round(dy * (h - size)))
        arr = arr[y0 : y0 + size, :]
    else:
        pad = size - h
        top = int(round(dy * pad))
        arr = np.pad(arr, ((top, pad - top), (0, 0), (0, 0)), mode="reflect")
    return arr


def _adjust_lighting(arr: np.ndarray, magnitude: float) -> np.ndarray:
    # contrast-style jitter in logit space; exactly identity at 0
    p = (arr + 0.5) / 256.0
    logit = np.log(p / (1.0 - p))
    adjusted = 1.0 / (1.0 + np.exp(-logit * np.exp(magnitude)))
    return adjusted * 256.0 - 0.5


def apply_transform(img, t: TransformSample) -> np.ndarray:
    """Apply one sampled transform; output is a crop_size square image."""
    img = check_image(img)
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise ValueError("image must be at least 2x2")
    arr = img.astype(np.float64)
    if t.apply_affine and (t.angle != 0.0 or t.zoom != 1.0 or t.shear != 0.0):
        arr = _affine_resample(arr, t.angle, t.zoom, t.shear)
    arr = _crop_or_pad(arr, t.crop_size, t.dx, t.dy)
    if t.flip_h:
        arr = arr[:, ::-1]
    if t.flip_v:
        arr = arr[::-1, :]
    if t.lighting != 0.0:
        arr = _adjust_lighting(arr, t.lighting)
    out = np.clip(np.rint(arr), 0.0, 255.0).astype(np.uint8)
    out = np.ascontiguousarray(out)
    for x, y, cw, ch in t.cutout:
        out[y : y + ch, x : x + cw] = 0
    return out


def apply_cutout(img, rect, fill: int = 0) -> np.ndarray:
    """Blank one (x, y, w, h) rectangle to ``fill``; copy otherwise."""
    img = check_image(img)
    x, y, w, h = rect
    if w < 1 or h < 1 or x < 0 or y < 0 or x + w > img.shape[1] or y + h > img.shape[0]:
        raise ValueError(f"cutout rect {rect} outside image {img.shape[1]}x{img.shape[0]}")
    out = img.copy()
    out[y : y + h, x : x + w] = fill
    return out


def tta_variants(img, crop_size: int, scale: float = 1.05) -> list:
    """Eight deterministic test-time views of one image.

    Scales by ``scale`` (bilinear), takes the four corner crops in the
    order top-left, top-right, bottom-left, bottom-right, and emits
    (crop, horizontally flipped crop) for each. No randomness.
    """
    from PIL import Image

    img = check_image(img)
    if scale < 1.0:
        raise ValueError(f"scale must be >= 1, got {scale}")
    h, w = img.shape[:2]
    new_w, new_h = round(w * scale), round(h * scale)
    if crop_size > new_w or crop_size > new_h:
        raise ValueError(
            f"crop_size {crop_size} exceeds scaled dims {new_w}x{new_h}"
        )
    if (new_w, new_h) == (w, h):
        scaled = img
    else:
        scaled = np.asarray(
            Image.fromarray(img).resize((new_w, new_h), resample=Image.BILINEAR),
            dtype=np.uint8,
        )
    corners = (
        (0, 0),
        (new_w - crop_size, 0),
        (0, new_h - crop_size),
        (new_w - crop_size, new_h - crop_size),
    )
    variants = []
    for x, y in corners:
        crop = np.ascontiguousarray(scaled[y : y + crop_size, x : x + crop_size])
        variants.append(crop)
        variants.append(np.ascontiguousarray(crop[:, ::-1]))
    return variants


def contact_sheet(images, columns: int = 4, gap: int = 2) -> np.ndarray:
    """Tile same-sized images into one grid image (white separators)."""
    if not images:
        raise ValueError("no images to tile")
    imgs = [check_image(im) for im in images]
    h, w = imgs[0].shape[:2]
    if any(im.shape != imgs[0].shape for im in imgs):
        raise ValueError("contact sheet requires equally sized images")
    columns = max(1, min(columns, len(imgs)))
    rows = (len(imgs) + columns - 1) // columns
    sheet = np.full(
        (rows * h + gap * (rows - 1), columns * w + gap * (columns - 1), 3),
        255,
        dtype=np.uint8,
    )
    for i, im in enumerate(imgs):
        r, c = divmod(i, columns)
        y0 = r * (h + gap)
        x0 = c * (w + gap)
        sheet[y0 : y0 + h, x0 : x0 + w] = im
    return sheet
