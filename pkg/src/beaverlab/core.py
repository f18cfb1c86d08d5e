"""Exact dyadic arithmetic, bitstrings, and weight maps.

Every weight, budget, and threshold in this package is a nonnegative
rational with a power-of-two denominator, held exactly: all comparisons
that drive game adjudication and table queries are decided without any
rounding.  Floating point is deliberately absent.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping


class Dyadic:
    """Nonnegative rational num / 2**exp with arbitrary-precision num.

    Canonical form: num is odd (or zero with exp == 0) unless exp == 0,
    i.e. common factors of two are cancelled.  Values are immutable.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if num < 0:
            raise ValueError("dyadic values are nonnegative")
        if exp < 0:
            raise ValueError("exponent must be a natural number")
        if num == 0:
            exp = 0
        else:
            while num & 1 == 0 and exp > 0:
                num >>= 1
                exp -= 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "Dyadic":
        return cls(0, 0)

    @classmethod
    def one(cls) -> "Dyadic":
        return cls(1, 0)

    @classmethod
    def from_int(cls, n: int) -> "Dyadic":
        return cls(n, 0)

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """2**k for any integer k (negative k gives 1/2**|k|)."""
        if k >= 0:
            return cls(1 << k, 0)
        return cls(1, -k)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse the serialized form "num/2^exp" (or a bare integer)."""
        text = text.strip()
        if "/" not in text:
            return cls(int(text), 0)
        num_part, den_part = text.split("/", 1)
        if not den_part.startswith("2^"):
            raise ValueError(f"malformed dyadic: {text!r}")
        return cls(int(num_part), int(den_part[2:]))

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: "Dyadic") -> "Dyadic":
        if not isinstance(other, Dyadic):
            return NotImplemented
        if self.num == 0:
            return other
        if other.num == 0:
            return self
        e = max(self.exp, other.exp)
        return Dyadic(
            (self.num << (e - self.exp)) + (other.num << (e - other.exp)), e
        )

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        if not isinstance(other, Dyadic):
            return NotImplemented
        if other.num == 0:
            return self
        e = max(self.exp, other.exp)
        n = (self.num << (e - self.exp)) - (other.num << (e - other.exp))
        if n < 0:
            raise ValueError("dyadic subtraction went negative")
        return Dyadic(n, e)

    def __mul__(self, other):
        if isinstance(other, Dyadic):
            return Dyadic(self.num * other.num, self.exp + other.exp)
        if isinstance(other, int):
            if other < 0:
                raise ValueError("dyadic values are nonnegative")
            return Dyadic(self.num * other, self.exp)
        return NotImplemented

    __rmul__ = __mul__

    def shifted(self, k: int) -> "Dyadic":
        """Exact multiplication by 2**k (k may be negative)."""
        if k >= 0:
            return Dyadic(self.num << k, self.exp)
        return Dyadic(self.num, self.exp - k)

    # -- comparisons ---------------------------------------------------
    #
    # Cross-multiplying num * 2**exp directly can materialize integers
    # with billions of bits when exponents are far apart (game stages
    # legitimately produce such values), so magnitudes are compared via
    # bit lengths first; the shift is performed only when the two values
    # are provably within one binade of each other.

    def _cmp(self, other: "Dyadic") -> int:
        a, b = self.num, other.num
        if self.exp == other.exp:
            return (a > b) - (a < b)
        if a == 0:
            return -1 if b else 0
        if b == 0:
            return 1
        hi_a = a.bit_length() - self.exp   # 2**(hi_a - 1) <= self < 2**hi_a
        hi_b = b.bit_length() - other.exp
        if hi_a - 1 >= hi_b:
            return 1
        if hi_b - 1 >= hi_a:
            return -1
        e = max(self.exp, other.exp)
        a <<= e - self.exp
        b <<= e - other.exp
        return (a > b) - (a < b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.num == other.num and self.exp == other.exp

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def __lt__(self, other: "Dyadic") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "Dyadic") -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: "Dyadic") -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: "Dyadic") -> bool:
        return self._cmp(other) >= 0

    def __hash__(self) -> int:
        return hash((self.num, self.exp))

    def __bool__(self) -> bool:
        return self.num != 0

    def is_zero(self) -> bool:
        return self.num == 0

    # -- rendering -----------------------------------------------------

    def __str__(self) -> str:
        return f"{self.num}/2^{self.exp}"

    def __repr__(self) -> str:
        return f"Dyadic({self.num}, {self.exp})"


DYADIC_ZERO = Dyadic.zero()
DYADIC_ONE = Dyadic.one()


# -- bitstrings --------------------------------------------------------
#
# Bitstrings are plain Python strings over '0'/'1'; the on-disk and CLI
# serialization is the string itself (ASCII, no separators).

def validate_bits(s: str) -> str:
    """Return s unchanged if it is a valid bitstring, else raise ValueError."""
    if any(c not in "01" for c in s):
        raise ValueError(f"not a bitstring: {s!r}")
    return s


def all_bitstrings(length: int) -> Iterator[str]:
    """All bitstrings of exactly the given length, lexicographic order."""
    if length == 0:
        yield ""
        return
    for i in range(1 << length):
        yield format(i, f"0{length}b")


class WeightMap:
    """Finite partial map from natural index to positive dyadic weight.

    Absent indices weigh zero.  Instances are value objects: mutation
    happens only by building a new map.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, Dyadic] | Iterable[tuple[int, Dyadic]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        store: dict[int, Dyadic] = {}
        for index, weight in items:
            if index < 0:
                raise ValueError(f"negative index {index}")
            if not isinstance(weight, Dyadic):
                raise TypeError("weights must be Dyadic")
            if weight.is_zero():
                continue
            if index in store:
                raise ValueError(f"duplicate index {index}")
            store[index] = weight
        object.__setattr__(self, "_entries", store)

    def __setattr__(self, name, value):
        raise AttributeError("WeightMap is immutable")

    def get(self, index: int) -> Dyadic:
        return self._entries.get(index, DYADIC_ZERO)

    def items(self) -> list[tuple[int, Dyadic]]:
        """Entries in increasing index order."""
        return sorted(self._entries.items())

    def support(self) -> list[int]:
        return sorted(self._entries)

    def max_index(self) -> int | None:
        return max(self._entries) if self._entries else None

    def total(self) -> Dyadic:
        acc = DYADIC_ZERO
        for w in self._entries.values():
            acc = acc + w
        return acc

    def raised(self, index: int, delta: Dyadic) -> "WeightMap":
        """New map with delta added at index (delta must be positive)."""
        if delta.is_zero():
            raise ValueError("raise must be positive")
        d = dict(self._entries)
        d[index] = d.get(index, DYADIC_ZERO) + delta
        return WeightMap(d)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, index: int) -> bool:
        return index in self._entries

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightMap):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self):
        return hash(tuple(self.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}: {v}" for k, v in self.items())
        return f"WeightMap({{{inner}}})"


def weight_tail(w: WeightMap, start: int) -> Dyadic:
    """Exact sum of w(i) over all indices i >= start."""
    acc = DYADIC_ZERO
    for index, weight in w.items():
        if index >= start:
            acc = acc + weight
    return acc
