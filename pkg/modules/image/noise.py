from typing import List, Tuple

import numpy as np

from modules.seconv.data_classes import NoiseParams


def inject_sap(image: np.ndarray, noise: NoiseParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Corrupt an 8-bit grid with salt-and-pepper noise.

    Every pixel draws an independent Bernoulli(density) corruption flag and a
    Bernoulli(salt_fraction) salt flag from one PCG64 stream seeded with
    ``noise.seed``. Both draws are taken for the whole grid at once, so the
    result depends only on the seed and the grid shape.

    Returns the noisy grid and the ground-truth corruption mask (1 = corrupted).
    """
    image = np.asarray(image, dtype=np.uint8)
    rng = np.random.default_rng(noise.seed)
    corrupt_draw = rng.random(image.shape)
    salt_draw = rng.random(image.shape)

    corrupted = corrupt_draw < noise.density
    salt = salt_draw < noise.salt_fraction

    noisy = image.copy()
    noisy[corrupted & salt] = 255
    noisy[corrupted & ~salt] = 0
    return noisy, corrupted.astype(np.uint8)


def mask_to_pgm_grid(mask: np.ndarray) -> np.ndarray:
    """0 = clean, 255 = corrupted."""
    return (np.asarray(mask) != 0).astype(np.uint8) * 255


def mask_to_coordinates(mask: np.ndarray) -> List[List[int]]:
    return np.argwhere(np.asarray(mask) != 0).tolist()
