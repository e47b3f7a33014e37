"""Bit-dimension permutations over power-of-two index spaces.

A permutation over ``n`` index bits is stored as a destination-to-source map:
bit ``i`` of the permuted index is bit ``map[i]`` of the original.  Bit 0 is
the least significant bit.  In a memory layout the top ``p`` bits select the
bank (parallel segment) and the remaining ``n - p`` bits the address (serial
segment).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModeUnsupportedError


def log2_exact(value: int, what: str = "value") -> int:
    """Return log2 of a positive power of two, raising DomainError otherwise."""
    if not isinstance(value, (int, np.integer)) or value < 1 or value & (value - 1):
        raise DomainError(f"{what} must be a positive power of two, got {value!r}")
    return int(value).bit_length() - 1


def bit_reverse(value: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


@dataclass(frozen=True)
class BitPermutation:
    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.map)
        object.__setattr__(self, "map", m)
        if sorted(m) != list(range(len(m))):
            raise DomainError(f"bit map {m} is not a bijection on 0..{len(m) - 1}")

    @property
    def n(self) -> int:
        return len(self.map)

    @classmethod
    def identity(cls, n: int) -> "BitPermutation":
        return cls(tuple(range(n)))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "BitPermutation":
        if not (0 <= a < n and 0 <= b < n):
            raise DomainError(f"transposition ({a} {b}) outside {n} bits")
        m = list(range(n))
        m[a], m[b] = b, a
        return cls(tuple(m))

    @classmethod
    def from_index_map(cls, values) -> "BitPermutation":
        """Recover the permutation realising ``values[i] = perm(i)``.

        Raises DomainError if ``values`` is not induced by any bit-dimension
        permutation.
        """
        values = np.asarray(values, dtype=np.int64)
        size = values.size
        n = log2_exact(size, "index map length")
        inv = []
        for j in range(n):
            image = int(values[1 << j])
            if image <= 0 or image & (image - 1):
                raise DomainError("index map is not a bit-dimension permutation")
            inv.append(image.bit_length() - 1)
        if sorted(inv) != list(range(n)):
            raise DomainError("index map is not a bit-dimension permutation")
        m = [0] * n
        for j, i in enumerate(inv):
            m[i] = j
        perm = cls(tuple(m))
        if not np.array_equal(perm.apply_array(np.arange(size)), values):
            raise DomainError("index map is not a bit-dimension permutation")
        return perm

    def __call__(self, index: int) -> int:
        return apply_perm(self, index)

    def apply_array(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        out = np.zeros_like(idx)
        for i, src in enumerate(self.map):
            out |= ((idx >> src) & 1) << i
        return out

    def inverse(self) -> "BitPermutation":
        inv = [0] * self.n
        for i, src in enumerate(self.map):
            inv[src] = i
        return BitPermutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.map))

    def is_involution(self) -> bool:
        return compose(self, self).is_identity()

    def moved_bits(self) -> set[int]:
        return {i for i, v in enumerate(self.map) if i != v}

    def __repr__(self):
        return f"BitPermutation({list(self.map)})"


def apply_perm(perm: BitPermutation, index: int) -> int:
    """Permute the bits of ``index``: destination bit i takes source bit map[i]."""
    if not 0 <= index < (1 << perm.n):
        raise DomainError(f"index {index} outside [0, 2^{perm.n})")
    out = 0
    for i, src in enumerate(perm.map):
        out |= ((index >> src) & 1) << i
    return out


def compose(outer: BitPermutation, inner: BitPermutation) -> BitPermutation:
    """Permutation equal to applying ``inner`` first, then ``outer``."""
    if outer.n != inner.n:
        raise DomainError(f"cannot compose widths {outer.n} and {inner.n}")
    return BitPermutation(tuple(inner.map[outer.map[i]] for i in range(outer.n)))


def reverse_segment(n: int, hi: int, lo: int) -> BitPermutation:
    """Reverse bits ``hi..lo`` in place, leaving all other bits fixed."""
    if not 0 <= lo <= hi < n:
        raise DomainError(f"invalid segment [{hi}:{lo}] for {n} bits")
    m = list(range(n))
    for i in range(lo, hi + 1):
        m[i] = hi - (i - lo)
    return BitPermutation(tuple(m))


@dataclass(frozen=True)
class IndexLayout:
    """Split of an ``n``-bit index into ``p`` bank bits over ``n - p`` address bits.

    ``p == n`` is allowed for the degenerate single-address case (N = 2P).
    """

    n: int
    p: int

    def __post_init__(self):
        if not 1 <= self.p <= self.n:
            raise DomainError(f"need 1 <= p <= n, got p={self.p}, n={self.n}")

    @classmethod
    def for_parallelism(cls, N: int, P: int) -> "IndexLayout":
        return cls(log2_exact(N, "N"), log2_exact(2 * P, "2P"))

    @property
    def serial(self) -> int:
        return self.n - self.p

    @property
    def banks(self) -> int:
        return 1 << self.p

    @property
    def depth(self) -> int:
        return 1 << self.serial

    def bank(self, index: int) -> int:
        return index >> self.serial

    def address(self, index: int) -> int:
        return index & (self.depth - 1)


@dataclass(frozen=True)
class SwapStep:
    """One reshuffle circuit: parallel branch distance ``h`` and FIFO length ``l``."""

    h: int
    l: int

    def __post_init__(self):
        log2_exact(self.h, "h")
        log2_exact(self.l, "l")

    @property
    def h_bit(self) -> int:
        return self.h.bit_length() - 1

    @property
    def l_bit(self) -> int:
        return self.l.bit_length() - 1

    def as_tuple(self) -> tuple[int, int]:
        return (self.h, self.l)


def _stage_count(n: int, k: int) -> int:
    return -(-n // k)


def _check_common(N, s, k, P):
    n = log2_exact(N, "N")
    log2_exact(P, "P")
    if not 1 <= k <= 5:
        raise DomainError(f"radix exponent k must be in 1..5, got {k}")
    S = max(1, _stage_count(n, k))
    if not 1 <= s <= S:
        raise DomainError(f"stage {s} outside 1..{S}")
    return n, S


def w_pipeline(N: int, s: int, k: int, P: int) -> int:
    """Number of low serial bits reversed when stage ``s`` reads its banks."""
    n, S = _check_common(N, s, k, P)
    if N <= 1 << k:
        raise DomainError(f"formula defined for N > 2^k, got N={N}, k={k}")
    lp = log2_exact(P, "P")
    if s in (1, S):
        return n - 1 - lp
    return k * (n // k + s - S) + n % k - 1 - lp


def _low_reversal(n: int, p: int, w: int) -> BitPermutation:
    if w <= 0:
        return BitPermutation.identity(n)
    if n - p - 1 >= w:
        return reverse_segment(n, w - 1, 0)
    if n - p == 0:
        return BitPermutation.identity(n)
    return reverse_segment(n, n - p - 1, 0)


def sigma1(N: int, s: int, k: int, P: int) -> BitPermutation:
    """Address permutation of the serial bits (parallel bits untouched)."""
    n, _ = _check_common(N, s, k, P)
    lay = IndexLayout.for_parallelism(N, P)
    if N <= 1 << k:
        # single stage: the first-stage branch applies
        w = n - 1 - log2_exact(P, "P")
    else:
        w = w_pipeline(N, s, k, P)
    return _low_reversal(n, lay.p, w)


def sigma2(N: int, s: int, k: int, P: int) -> BitPermutation:
    """Reverse the parallel (bank) bits."""
    _check_common(N, s, k, P)
    lay = IndexLayout.for_parallelism(N, P)
    return reverse_segment(lay.n, lay.n - 1, lay.n - lay.p)


def sigma3_step(layout: IndexLayout, step: SwapStep) -> BitPermutation:
    """Exchange parallel bit ``h'`` with serial bit ``l'``."""
    if step.h_bit >= layout.p:
        raise DomainError(f"h={step.h} needs h' < p={layout.p}")
    if step.l_bit >= layout.serial:
        raise DomainError(f"l={step.l} needs l' < n-p={layout.serial}")
    return BitPermutation.transposition(
        layout.n, layout.n - layout.p + step.h_bit, step.l_bit
    )


def memory_range(N: int, k: int, allow_short: bool = True) -> bool:
    n = log2_exact(N, "N")
    lo = k if allow_short else 2 * k
    return lo < n <= 3 * k


def w_membased(N: int, s: int, k: int, P: int) -> tuple[int, int]:
    """(w, w~) for iteration ``s`` of the memory-based mode."""
    n = log2_exact(N, "N")
    if not memory_range(N, k):
        raise ModeUnsupportedError(
            f"memory-based mode needs N in (2^{k}, 2^{3 * k}], got N={N}"
        )
    _check_common(N, s, k, P)
    lp = log2_exact(P, "P")
    tail = k * (n // k - 1) + n % k - 1 - lp
    if n > 2 * k:
        w = n - 1 - lp if s in (1, 2) else tail
        w_tilde = tail if s == 2 else 0
    else:
        w = n - 1 - lp if s == 1 else 0
        w_tilde = 0
    return w, w_tilde


def sigma_tilde(N: int, s: int, k: int, P: int) -> BitPermutation:
    """Reverse the top w~ serial bits."""
    _, wt = w_membased(N, s, k, P)
    lay = IndexLayout.for_parallelism(N, P)
    if wt <= 0:
        return BitPermutation.identity(lay.n)
    wt = min(wt, lay.serial)
    return reverse_segment(lay.n, lay.serial - 1, lay.serial - wt)


def sigma1_membased(N: int, s: int, k: int, P: int) -> BitPermutation:
    w, _ = w_membased(N, s, k, P)
    lay = IndexLayout.for_parallelism(N, P)
    return _low_reversal(lay.n, lay.p, w)


def sigma_hat(N: int, s: int, k: int, P: int) -> BitPermutation:
    """Read permutation of memory-based iteration ``s``: sigma1, then sigma~."""
    return compose(sigma_tilde(N, s, k, P), sigma1_membased(N, s, k, P))
