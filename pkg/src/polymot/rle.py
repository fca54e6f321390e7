"""Compressed run-length strings for binary masks.

The interchange format used by the MOTS result files: column-major run
lengths beginning with the count of zero pixels, then delta-coded (each
count from index 3 onward is stored minus the count two positions back,
mirroring the reference encoder's convention) and emitted as little-endian
groups of 5 payload bits plus a continuation bit, each group offset by
ASCII 48.  A set 0x10 bit in the final group sign-extends the value, so
negative deltas survive the trip.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, ParseError


def _mask_to_counts(mask: np.ndarray) -> list[int]:
    flat = np.asarray(mask, dtype=bool).ravel(order="F")
    if flat.size == 0:
        raise InvalidInputError("cannot encode an empty mask")
    changes = np.flatnonzero(np.diff(flat.view(np.int8)))
    bounds = np.concatenate(([0], changes + 1, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts.insert(0, 0)  # runs always start with the zero count
    return counts


def _counts_to_string(counts: list[int]) -> str:
    chars: list[str] = []
    for i, count in enumerate(counts):
        x = count - (counts[i - 2] if i > 2 else 0)
        more = True
        while more:
            group = x & 0x1F
            x >>= 5
            more = (x != -1) if (group & 0x10) else (x != 0)
            if more:
                group |= 0x20
            chars.append(chr(group + 48))
    return "".join(chars)


def encode_rle(mask: np.ndarray) -> str:
    """Compress a 2-D boolean mask to its run-length string."""
    if mask.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D, got shape {mask.shape}")
    return _counts_to_string(_mask_to_counts(mask))


def _string_to_counts(s: str) -> list[int]:
    counts: list[int] = []
    p = 0
    while p < len(s):
        x = 0
        k = 0
        more = True
        while more:
            if p >= len(s):
                raise ParseError("truncated run-length string")
            c = ord(s[p]) - 48
            if not (0 <= c <= 0x3F):
                raise ParseError(f"invalid run-length character {s[p]!r}")
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts


def decode_rle(s: str, height: int, width: int) -> np.ndarray:
    """Exact inverse of :func:`encode_rle` for an height x width mask."""
    if height < 1 or width < 1:
        raise InvalidInputError("mask dimensions must be positive")
    counts = _string_to_counts(s)
    if any(c < 0 for c in counts):
        raise ParseError("negative run length after delta decoding")
    if sum(counts) != height * width:
        raise ParseError(
            f"run lengths cover {sum(counts)} pixels, expected {height * width}")
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return flat.reshape((height, width), order="F")
