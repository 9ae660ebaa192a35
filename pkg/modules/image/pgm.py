"""
Reader/writer for 8-bit PGM images (plain P2 and raw P5, maxval 255).
"""

import numpy as np

from modules.seconv.data_classes import PgmFormat
from modules.utils.errors import PgmFormatError, UnsupportedFormatError

_WHITESPACE = b" \t\n\r\v\f"


class _HeaderReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_space_and_comments(self):
        data = self.data
        while self.pos < len(data):
            c = data[self.pos:self.pos + 1]
            if c in _WHITESPACE and c:
                self.pos += 1
            elif c == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = len(data) if end < 0 else end + 1
            else:
                break

    def token(self, what: str) -> bytes:
        self.skip_space_and_comments()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1] not in _WHITESPACE \
                and self.data[self.pos:self.pos + 1] != b"#":
            self.pos += 1
        if self.pos == start:
            raise PgmFormatError(f"Missing {what}", start)
        return self.data[start:self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        if not tok.isdigit():
            raise PgmFormatError(f"Invalid {what} {tok!r}", start)
        return int(tok)


def load_pgm(data: bytes) -> np.ndarray:
    """
    Parse a P2 or P5 stream into a (height, width) uint8 grid.

    Raises PgmFormatError with the failing byte offset for malformed input and
    UnsupportedFormatError when maxval is not 255.
    """
    reader = _HeaderReader(data)
    magic = reader.token("magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmFormatError(f"Unknown magic number {magic!r}", 0)
    width = reader.integer("width")
    height = reader.integer("height")
    if width < 1 or height < 1:
        raise PgmFormatError(f"Invalid dimensions {width}x{height}", reader.pos)
    maxval_offset = reader.pos
    maxval = reader.integer("maxval")
    if maxval != 255:
        raise UnsupportedFormatError(f"Only maxval 255 is supported, got {maxval} (at byte offset {maxval_offset})")

    n_pixels = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if reader.pos >= len(data) or data[reader.pos:reader.pos + 1] not in _WHITESPACE:
            raise PgmFormatError("Missing whitespace after maxval", reader.pos)
        start = reader.pos + 1
        payload = data[start:start + n_pixels]
        if len(payload) < n_pixels:
            raise PgmFormatError(
                f"Truncated payload: expected {n_pixels} bytes, found {len(payload)}", start + len(payload)
            )
        return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()

    values = np.empty(n_pixels, dtype=np.uint8)
    for i in range(n_pixels):
        reader.skip_space_and_comments()
        if reader.pos >= len(data):
            raise PgmFormatError(f"Truncated payload: expected {n_pixels} samples, found {i}", reader.pos)
        sample_offset = reader.pos
        sample = reader.integer("sample")
        if sample > 255:
            raise PgmFormatError(f"Sample {sample} exceeds maxval", sample_offset)
        values[i] = sample
    return values.reshape(height, width)


def save_pgm(image: np.ndarray, pgm_format: PgmFormat = PgmFormat.P5) -> bytes:
    grid = np.asarray(image)
    if grid.ndim != 2:
        raise ValueError(f"Expected a 2-D grid, got shape {grid.shape}")
    if grid.size and (grid.min() < 0 or grid.max() > 255):
        raise ValueError("PGM samples must lie in 0..255")
    grid = grid.astype(np.uint8)
    height, width = grid.shape
    pgm_format = PgmFormat(pgm_format)
    header = f"{pgm_format.value}\n{width} {height}\n255\n".encode("ascii")

    if pgm_format == PgmFormat.P5:
        return header + grid.tobytes()

    # plain PGM lines must stay under 70 characters
    lines = []
    for row in grid:
        samples = [str(int(v)) for v in row]
        line = []
        length = 0
        for s in samples:
            if line and length + len(s) + 1 > 69:
                lines.append(" ".join(line))
                line, length = [], 0
            line.append(s)
            length += len(s) + 1
        lines.append(" ".join(line))
    return header + ("\n".join(lines) + "\n").encode("ascii")
