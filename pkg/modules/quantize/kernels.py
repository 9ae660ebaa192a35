"""
Convolution kernels, named fixtures and the JSON weight-file format.

Weight file schema::

    {"size": 3, "precision": "ternary", "weights": [1, 0, -1, 0, 1, 0, -1, 0, 1]}

``weights`` is row-major and holds size*size entries.
"""

import json
import os
import re
from typing import List, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from modules.seconv.data_classes import Precision
from modules.utils.errors import ShapeError, DomainError, WeightFileError, ConfigError
from modules.utils.files_manager import read_bytes


def check_kernel(size, precision, weights) -> None:
    """Raise ShapeError/DomainError for an invalid (size, precision, weights) triple."""
    if not isinstance(size, int) or isinstance(size, bool) or size < 1:
        raise DomainError(f"Kernel size must be a positive integer, got {size!r}")
    if size % 2 == 0:
        raise DomainError(f"Kernel size must be odd, got {size}")
    if len(weights) != size * size:
        raise ShapeError(f"Kernel of size {size} needs {size * size} weights, got {len(weights)}")
    try:
        precision = Precision(precision)
    except ValueError:
        raise DomainError(f"Unknown precision {precision!r}, expected 'full' or 'ternary'")
    for w in weights:
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not np.isfinite(w):
            raise DomainError(f"Weight {w!r} is not a finite number")
    if precision == Precision.TERNARY:
        if size < 3:
            raise DomainError(f"Ternary kernels need size >= 3, got {size}")
        bad = [w for w in weights if w not in (-1, 0, 1)]
        if bad:
            raise DomainError(f"Ternary weights must lie in {{-1, 0, 1}}, found {bad[0]!r}")


class Kernel(BaseModel):
    size: int = Field(description="Odd side length s")
    precision: Precision = Field(default=Precision.FULL)
    weights: List[float] = Field(description="Row-major s*s weights")

    @model_validator(mode="after")
    def validate_kernel(self):
        check_kernel(self.size, self.precision, self.weights)
        return self

    @classmethod
    def from_array(cls, array, precision: Precision = Precision.FULL) -> 'Kernel':
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ShapeError(f"Kernel must be square, got shape {array.shape}")
        weights = [float(w) for w in array.ravel()]
        if Precision(precision) == Precision.TERNARY:
            weights = [int(w) if float(w).is_integer() else w for w in weights]
        check_kernel(array.shape[0], precision, weights)
        return cls(size=array.shape[0], precision=precision, weights=weights)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64).reshape(self.size, self.size)

    @property
    def is_ternary(self) -> bool:
        return self.precision == Precision.TERNARY

    @property
    def is_non_negative(self) -> bool:
        return bool((self.array >= 0).all())

    def counts(self):
        """(nonzero, zero) weight counts."""
        nonzero = int(np.count_nonzero(self.array))
        return nonzero, self.size * self.size - nonzero


# Synthetic 3x3 ternary kernel with 5 nonzero and 4 zero weights, mirroring the
# pair counts of the published power analysis (ten +-1 pairs, eight 0 pairs
# across the two crossbars).
FIXTURE5 = [[0, 1, 0],
            [1, 1, -1],
            [0, 1, 0]]

CROSS3 = [[0, 1, 0],
          [1, 1, 1],
          [0, 1, 0]]

_ONES_PATTERN = re.compile(r"^ones(\d+)$")


def fixture_names() -> List[str]:
    return ["ones3", "ones5", "ones7", "ones9", "ones11", "ones13", "ones15", "fixture5", "cross3"]


def fixed_kernel(size: int) -> Kernel:
    """The all-ones ("fixed") kernel."""
    return Kernel.from_array(np.ones((size, size)), Precision.TERNARY if size >= 3 else Precision.FULL)


def get_kernel(name_or_path: str) -> Kernel:
    """Resolve a fixture name (``ones<s>``, ``fixture5``, ``cross3``) or a weight-file path."""
    match = _ONES_PATTERN.match(name_or_path)
    if match:
        size = int(match.group(1))
        if size % 2 == 0:
            raise ConfigError(f"Fixture '{name_or_path}' needs an odd size")
        return fixed_kernel(size)
    if name_or_path == "fixture5":
        return Kernel.from_array(FIXTURE5, Precision.TERNARY)
    if name_or_path == "cross3":
        return Kernel.from_array(CROSS3, Precision.TERNARY)
    if os.path.isfile(name_or_path):
        return load_weights(read_bytes(name_or_path))
    raise ConfigError(f"Unknown kernel '{name_or_path}'. Use a weight file or one of {fixture_names()}")


def load_weights(data: Union[bytes, str]) -> Kernel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise WeightFileError(f"Weight file is not valid JSON: {e}")
    if not isinstance(doc, dict) or not {"size", "precision", "weights"} <= set(doc):
        raise WeightFileError("Weight file needs the fields size, precision and weights")
    if not isinstance(doc["weights"], list):
        raise ShapeError("weights must be a row-major array")
    check_kernel(doc["size"], doc["precision"], doc["weights"])
    return Kernel(size=doc["size"], precision=doc["precision"], weights=doc["weights"])


def save_weights(kernel: Kernel) -> bytes:
    weights = kernel.weights
    if kernel.is_ternary:
        weights = [int(w) for w in weights]
    doc = {"size": kernel.size, "precision": Precision(kernel.precision).value, "weights": weights}
    return (json.dumps(doc) + "\n").encode("utf-8")
