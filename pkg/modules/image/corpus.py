"""
Procedurally generated grayscale test corpus.

Every image is a deterministic function of (name, size, seed) and is confined
to [8, 247], so no clean pixel takes the 0/255 values the preprocessing step
treats as noise.
"""

import hashlib
from typing import Callable, Dict, List, Optional

import numpy as np

from modules.image.pgm import save_pgm
from modules.seconv.data_classes import PgmFormat
from modules.utils.errors import DataFormatError
from modules.utils.files_manager import read_json
from modules.utils.logger import get_logger
from modules.utils.paths import CORPUS_MANIFEST_PATH

logger = get_logger()

LOW, HIGH = 8, 247


def _to_grid(field: np.ndarray) -> np.ndarray:
    lo, hi = field.min(), field.max()
    scaled = (field - lo) / (hi - lo) if hi > lo else np.zeros_like(field)
    return np.round(LOW + scaled * (HIGH - LOW)).astype(np.uint8)


def _coords(size: int):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    return y / max(size - 1, 1), x / max(size - 1, 1)


def gradient(size: int, seed: int = 0) -> np.ndarray:
    y, x = _coords(size)
    return _to_grid(0.6 * x + 0.4 * y)


def rings(size: int, seed: int = 0) -> np.ndarray:
    y, x = _coords(size)
    r = np.hypot(x - 0.5, y - 0.5)
    return _to_grid(np.cos(18.0 * r) * np.exp(-2.0 * r))


def checker(size: int, seed: int = 0) -> np.ndarray:
    y, x = _coords(size)
    # smoothed edges keep the texture band-limited
    return _to_grid(np.tanh(4.0 * np.sin(8.0 * np.pi * x) * np.sin(8.0 * np.pi * y)))


def blobs(size: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    y, x = _coords(size)
    field = np.zeros((size, size))
    for _ in range(12):
        cy, cx = rng.random(2)
        width = 0.05 + 0.15 * rng.random()
        amplitude = rng.uniform(-1.0, 1.0)
        field += amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * width ** 2))
    return _to_grid(field)


def scene(size: int, seed: int = 0) -> np.ndarray:
    """Blobs over a gradient with fine texture; the closest stand-in for a natural photo."""
    rng = np.random.default_rng(seed + 1)
    y, x = _coords(size)
    base = 0.5 * (0.6 * x + 0.4 * y) + 0.35 * (blobs(size, seed).astype(np.float64) / 255.0)
    texture = 0.05 * np.sin(2 * np.pi * (rng.uniform(6, 12) * x + rng.uniform(6, 12) * y))
    return _to_grid(base + texture)


def _int_coords(size: int):
    y, x = np.mgrid[0:size, 0:size]
    return y.astype(np.int64), x.astype(np.int64)


# Integer-only textures: their bytes do not depend on floating point libraries,
# so their checksums are pinned in configs/corpus_manifest.json.

def ramp(size: int, seed: int = 0) -> np.ndarray:
    y, x = _int_coords(size)
    return (LOW + ((3 * x + 2 * y) * (HIGH - LOW)) // (5 * max(size - 1, 1))).astype(np.uint8)


def weave(size: int, seed: int = 0) -> np.ndarray:
    y, x = _int_coords(size)
    return (LOW + (x * x + 3 * y * y + 5 * x * y + 7 * seed) % (HIGH - LOW + 1)).astype(np.uint8)


def plaid(size: int, seed: int = 0) -> np.ndarray:
    y, x = _int_coords(size)
    return (LOW + ((x // 8 + y // 8) % 2) * 120 + (x * y + seed) % 100).astype(np.uint8)


GENERATORS: Dict[str, Callable[[int, int], np.ndarray]] = {
    "gradient": gradient,
    "rings": rings,
    "checker": checker,
    "blobs": blobs,
    "scene": scene,
    "ramp": ramp,
    "weave": weave,
    "plaid": plaid,
}


def make_image(name: str = "scene", size: int = 100, seed: int = 0) -> np.ndarray:
    if name not in GENERATORS:
        raise KeyError(f"Unknown corpus image '{name}'. Available: {sorted(GENERATORS)}")
    return GENERATORS[name](size, seed)


def image_set(count: int, size: int = 100, name: str = "scene", base_seed: int = 0) -> List[np.ndarray]:
    return [make_image(name, size, base_seed + i) for i in range(count)]


def corpus_manifest(size: int = 100, seed: int = 0, names: Optional[List[str]] = None) -> Dict[str, str]:
    """SHA-256 of the P5 bytes of each corpus image, pinning the corpus contents."""
    names = names or sorted(GENERATORS)
    return {
        name: hashlib.sha256(save_pgm(make_image(name, size, seed), PgmFormat.P5)).hexdigest()
        for name in names
    }


def verify_corpus(manifest_path: str = CORPUS_MANIFEST_PATH) -> Dict[str, str]:
    """Regenerate the pinned images and compare them with the shipped checksums."""
    manifest = read_json(manifest_path)
    try:
        pinned: Dict[str, str] = manifest["images"]
        actual = corpus_manifest(int(manifest["size"]), int(manifest["seed"]), sorted(pinned))
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"Corpus manifest is malformed ({e}): {manifest_path}") from e
    mismatched = sorted(name for name in pinned if actual[name] != pinned[name])
    if mismatched:
        raise DataFormatError(f"Corpus images {mismatched} do not match {manifest_path}")
    logger.debug("Corpus matches %d pinned checksums", len(pinned))
    return actual
