"""Core domain types: binary descriptors, image features, local maps, paths."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import popcount_words

DEFAULT_DESCRIPTOR_WIDTH = 256


class Descriptor:
    """Fixed-width binary descriptor packed into uint64 words.

    Bit ``i`` lives at bit ``i % 64`` of word ``i // 64``; words are
    little-endian with respect to the integer value, so ``from_int`` /
    ``to_int`` round-trip. Width must be a multiple of 4 (hex contract).
    """

    __slots__ = ("words", "width")

    def __init__(self, words: np.ndarray, width: int = DEFAULT_DESCRIPTOR_WIDTH):
        if width <= 0 or width % 4 != 0:
            raise ConfigError(f"descriptor width must be a positive multiple of 4, got {width}")
        n_words = (width + 63) // 64
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.shape != (n_words,):
            raise ConfigError(f"expected {n_words} words for width {width}, got shape {words.shape}")
        # zero any padding bits beyond the declared width
        tail = width % 64
        if tail:
            words = words.copy()
            words[-1] &= np.uint64((1 << tail) - 1)
        self.words = words
        self.width = width

    @classmethod
    def _wrap(cls, words: np.ndarray, width: int) -> "Descriptor":
        # trusted fast path for bulk construction: words must already be a
        # contiguous uint64 row of the right length with padding bits clear
        d = cls.__new__(cls)
        d.words = words
        d.width = width
        return d

    @classmethod
    def from_int(cls, value: int, width: int = DEFAULT_DESCRIPTOR_WIDTH) -> "Descriptor":
        if value < 0 or value >> width:
            raise ConfigError(f"value does not fit in {width} bits")
        n_words = (width + 63) // 64
        raw = value.to_bytes(n_words * 8, "little")
        return cls(np.frombuffer(raw, dtype="<u8").astype(np.uint64), width)

    @classmethod
    def from_hex(cls, s: str, width: int | None = None) -> "Descriptor":
        if width is None:
            width = 4 * len(s)
        return cls.from_int(int(s, 16), width)

    def to_int(self) -> int:
        return int.from_bytes(self.words.astype("<u8").tobytes(), "little")

    def to_hex(self) -> str:
        return format(self.to_int(), f"0{self.width // 4}x")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Descriptor):
            return NotImplemented
        return self.width == other.width and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.width, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"Descriptor(0x{self.to_hex()}, width={self.width})"


def hamming_distance(a: Descriptor, b: Descriptor) -> int:
    """Number of differing bits between two equal-width descriptors."""
    if a.width != b.width:
        raise ValueError(f"descriptor width mismatch: {a.width} vs {b.width}")
    return popcount_words(np.bitwise_xor(a.words, b.words))


@dataclass
class Feature:
    """One image feature: sub-pixel position plus descriptor and per-strategy state.

    Exactly one of score/temporal is meaningful for a given strategy; the other
    stays at its default.
    """

    x: float
    y: float
    descriptor: Descriptor
    score: float = 0.0
    temporal: object = None  # FremenModel when the fremen strategy owns the map
    inserted_at: int = 0


@dataclass
class MapAlternative:
    """One alternative feature set for the multiple-map strategy."""

    features: list
    created_at: int


@dataclass
class LocalMap:
    """Features taught at one odometry distance along the path.

    ``alternatives`` holds extra feature sets appended by the multiple-map
    strategy; the taught set in ``features`` always acts as alternative 0.
    """

    index: int
    odometry_distance: float
    features: list
    alternatives: list = field(default_factory=list)


@dataclass
class PathMap:
    """Ordered local maps indexed by odometry distance."""

    local_maps: list
    image_width: int = 640
    descriptor_width: int = DEFAULT_DESCRIPTOR_WIDTH
    taught_at: float = 0.0

    def __post_init__(self):
        dists = [m.odometry_distance for m in self.local_maps]
        if any(b <= a for a, b in zip(dists, dists[1:])):
            raise ConfigError("local map odometry distances must be strictly increasing")
        self._distances = dists

    @property
    def length_m(self) -> float:
        return self._distances[-1] if self._distances else 0.0


def local_map_at(path: PathMap, d: float) -> LocalMap:
    """Local map whose odometry distance is the greatest value <= d."""
    if not path.local_maps:
        raise ValueError("path has no local maps")
    if d < 0 or d > path._distances[-1]:
        raise ValueError(f"odometry distance {d} outside [0, {path._distances[-1]}]")
    i = bisect.bisect_right(path._distances, d) - 1
    return path.local_maps[max(i, 0)]


def pack_features(features, n_words: int | None = None) -> np.ndarray:
    """Stack feature descriptors into a C-contiguous (n, n_words) uint64 matrix."""
    if not features:
        return np.zeros((0, n_words or 0), dtype=np.uint64)
    first = features[0].descriptor.words
    out = np.empty((len(features), first.shape[0]), dtype=np.uint64)
    for i, f in enumerate(features):
        w = f.descriptor.words
        if w.shape[0] != first.shape[0]:
            raise ValueError("descriptor width mismatch within feature list")
        out[i] = w
    return out
