"""Cross-platform deterministic hashing for the simulator backends.

The key tuple is encoded as a tagged little-endian byte stream, folded
with 64-bit FNV-1a and finished with the splitmix64 output mix. Pure
integer arithmetic mod 2**64, so results are identical on every
platform and interpreter.
"""

from __future__ import annotations

from typing import Union

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

HashPart = Union[int, str, bytes]


def _encode(part: HashPart) -> bytes:
    if isinstance(part, bool):  # bool is an int; reject to keep keys explicit
        raise TypeError("bool is not a valid hash part")
    if isinstance(part, int):
        return b"i" + (part & _MASK64).to_bytes(8, "little")
    if isinstance(part, str):
        raw = part.encode("utf-8")
        return b"s" + len(raw).to_bytes(8, "little") + raw
    if isinstance(part, bytes):
        return b"b" + len(part).to_bytes(8, "little") + part
    raise TypeError(f"unhashable part type {type(part).__name__}")


def stable_hash64(*parts: HashPart) -> int:
    h = _FNV_OFFSET
    for part in parts:
        for byte in _encode(part):
            h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    # splitmix64 finalizer
    z = (h + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def unit_interval(h: int) -> float:
    """Map a 64-bit hash to [0, 1) using the top 53 bits (exact in a double)."""
    return (h >> 11) / float(1 << 53)
