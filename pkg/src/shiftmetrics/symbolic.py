"""Alphabets, words and cylinder indexing for one-sided full shifts.

Words are encoded big-endian in base ``|A|`` so that lexicographic order of
words coincides with numeric order of their codes.  Every array indexed by
words of a fixed length ``n`` in this package uses that order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, DomainError

__all__ = [
    "Alphabet",
    "Word",
    "CylinderIndex",
    "encode_word",
    "decode_word",
    "enumerate_words",
    "capacity",
    "check_capacity",
    "word_codes",
]

DEFAULT_CAPACITY = 2**24
_INDEX_LIMIT = 2**63


def capacity() -> int:
    """State/word count cap; ``SHIFTMETRICS_CAPACITY`` overrides the default."""
    raw = os.environ.get("SHIFTMETRICS_CAPACITY")
    if raw is None:
        return DEFAULT_CAPACITY
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"SHIFTMETRICS_CAPACITY must be an integer, got {raw!r}") from exc
    if value < 1:
        raise DomainError("SHIFTMETRICS_CAPACITY must be positive")
    return value


def check_capacity(count: int, what: str = "states") -> int:
    cap = capacity()
    if count > cap:
        raise CapacityError(f"{what}: {count} exceeds capacity {cap} (set SHIFTMETRICS_CAPACITY)")
    return count


@dataclass(frozen=True)
class Alphabet:
    """Finite ordered alphabet.  The order of ``symbols`` is the reference order."""

    symbols: tuple[str, ...]

    def __init__(self, symbols: Sequence):
        labels = tuple(str(s) for s in symbols)
        if len(labels) < 2:
            raise DomainError("an alphabet needs at least two symbols")
        if len(set(labels)) != len(labels):
            raise DomainError(f"alphabet labels must be distinct: {labels}")
        object.__setattr__(self, "symbols", labels)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, label) -> int:
        try:
            return self.symbols.index(str(label))
        except ValueError:
            raise DomainError(f"symbol {label!r} not in alphabet {self.symbols}") from None

    def word(self, labels) -> "Word":
        """Build a word from labels.

        A plain string is split into characters when every label of the
        alphabet is a single character; otherwise pass a sequence of labels.
        """
        if isinstance(labels, str):
            if all(len(s) == 1 for s in self.symbols):
                labels = list(labels)
            else:
                labels = labels.split()
        return Word(self, tuple(self.index(s) for s in labels))

    def count(self, n: int) -> int:
        """Number of words of length ``n``."""
        return self.size**n


@dataclass(frozen=True)
class Word:
    alphabet: Alphabet
    symbols: tuple[int, ...]

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        for s in symbols:
            if not 0 <= s < self.alphabet.size:
                raise DomainError(f"symbol index {s} out of range for |A|={self.alphabet.size}")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.alphabet, self.symbols[item])
        return self.symbols[item]

    def __add__(self, other: "Word") -> "Word":
        if other.alphabet != self.alphabet:
            raise DomainError("cannot concatenate words over different alphabets")
        return Word(self.alphabet, self.symbols + other.symbols)

    @property
    def length(self) -> int:
        return len(self.symbols)

    def labels(self) -> tuple[str, ...]:
        return tuple(self.alphabet.symbols[s] for s in self.symbols)

    def __str__(self) -> str:
        labels = self.labels()
        if all(len(s) == 1 for s in self.alphabet.symbols):
            return "".join(labels)
        return " ".join(labels)


@dataclass(frozen=True)
class CylinderIndex:
    length: int
    code: int


def encode_word(w: Word) -> CylinderIndex:
    code = 0
    base = w.alphabet.size
    for s in w.symbols:
        code = code * base + s
    return CylinderIndex(len(w), code)


def decode_word(c: CylinderIndex, alphabet: Alphabet) -> Word:
    base = alphabet.size
    if c.length < 0 or not 0 <= c.code < base**c.length:
        raise DomainError(f"code {c.code} out of range for length {c.length} over |A|={base}")
    digits = []
    code = c.code
    for _ in range(c.length):
        code, r = divmod(code, base)
        digits.append(r)
    return Word(alphabet, tuple(reversed(digits)))


def enumerate_words(alphabet: Alphabet, n: int) -> Iterator[Word]:
    """Yield all words of length ``n`` in increasing lexicographic order."""
    if n < 0:
        raise DomainError("word length must be nonnegative")
    if alphabet.size**n >= _INDEX_LIMIT:
        raise CapacityError(f"|A|^n = {alphabet.size}^{n} does not fit a 64-bit index")
    for code in range(alphabet.size**n):
        yield decode_word(CylinderIndex(n, code), alphabet)


def word_codes(size: int, n: int) -> np.ndarray:
    """Digit matrix of shape ``(size**n, n)``: row ``c`` holds the symbols of code ``c``."""
    count = size**n
    codes = np.arange(count, dtype=np.int64)
    digits = np.empty((count, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        digits[:, j] = codes % size
        codes //= size
    return digits
