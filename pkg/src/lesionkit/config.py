"""Run configuration as plain ``key = value`` text.

Augmentation keys carry the usual fastai-style names (max_rotate,
p_affine, do_flip, ...) so a config file reads like the training setup
it encodes. Lines starting with ``#`` and blank lines are ignored.
Unknown keys are errors: a typo silently falling back to a default
would change results without a trace.
"""

import hashlib
from dataclasses import dataclass, fields

from .augment import AugmentationPolicy
from .exceptions import FormatError


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_range(text: str) -> tuple:
    # "16..16" or a single number meaning a degenerate range
    parts = text.split("..") if ".." in text else [text, text]
    if len(parts) != 2:
        raise ValueError(f"not a range: {text!r}")
    lo, hi = (int(p.strip()) for p in parts)
    return (lo, hi)


@dataclass
class RunConfig:
    """Every tunable the CLI reads, with pipeline defaults.

    Sizes with no sensible universal value (crop_pad_size,
    target_short_side, tta_crop) default to None and must be set before
    the stages that need them run.
    """

    max_rotate: float = 45.0
    p_affine: float = 0.5
    do_flip: bool = True
    flip_vert: bool = True
    max_zoom: float = 1.05
    max_lighting: float = 0.2
    max_shear: float = 0.0
    crop_pad_size: int | None = None
    cutout_holes: tuple = (1, 1)
    cutout_length: tuple = (16, 16)
    cutout_p: float = 0.5
    border_threshold: float = 20.0
    min_keep: float = 0.25
    target_short_side: int | None = None
    bottom_crop: float = 0.0
    valid_fraction: float = 0.1
    weight_beta: float = 0.999
    tta_scale: float = 1.05
    tta_crop: int | None = None
    tta_beta: float = 0.4
    infer_timeout: float = 30.0

    def augmentation_policy(self) -> AugmentationPolicy:
        if self.crop_pad_size is None:
            raise ValueError("crop_pad_size is required for augmentation")
        return AugmentationPolicy(
            crop_pad_size=self.crop_pad_size,
            max_rotate=self.max_rotate,
            p_affine=self.p_affine,
            do_flip=self.do_flip,
            flip_vert=self.flip_vert,
            max_zoom=self.max_zoom,
            max_lighting=self.max_lighting,
            max_shear=self.max_shear,
            cutout_holes=self.cutout_holes,
            cutout_length=self.cutout_length,
            cutout_p=self.cutout_p,
        )


_PARSERS = {
    "max_rotate": float,
    "p_affine": float,
    "do_flip": _parse_bool,
    "flip_vert": _parse_bool,
    "max_zoom": float,
    "max_lighting": float,
    "max_shear": float,
    "crop_pad_size": int,
    "cutout_holes": _parse_range,
    "cutout_length": _parse_range,
    "cutout_p": float,
    "border_threshold": float,
    "min_keep": float,
    "target_short_side": int,
    "bottom_crop": float,
    "valid_fraction": float,
    "weight_beta": float,
    "tta_scale": float,
    "tta_crop": int,
    "tta_beta": float,
    "infer_timeout": float,
}

assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_config(text: str, origin: str = "<config>") -> RunConfig:
    config = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"{origin}: line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        if key not in _PARSERS:
            raise FormatError(f"{origin}: line {lineno}: unknown key {key!r}")
        try:
            setattr(config, key, _PARSERS[key](value.strip()))
        except ValueError as exc:
            raise FormatError(f"{origin}: line {lineno}: bad value for {key}: {exc}") from None
    return config


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, origin=str(path))


def config_digest(path_or_none) -> str:
    """Short stable digest of the config file bytes ('-' when absent)."""
    if path_or_none is None:
        return "-"
    with open(path_or_none, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]
