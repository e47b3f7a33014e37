"""Functional model of one radix-2^k multi-path delay commutator (k <= 5).

The unit has five physical butterfly columns.  A radix-2^k stage uses the last
``k`` of them; the leading columns are bypassed.  Column ``j`` consumes index
digit ``n_j`` of the 32-point split ``a = 16 n1 + 8 n2 + 4 n3 + 2 n4 + n5`` and
produces frequency digit ``k_j`` of ``k1 + 2 k2 + 4 k3 + 8 k4 + 16 k5``.
Rotations after each column:

====== ===================================== ===========
column twiddle                               kind
====== ===================================== ===========
1      W32^(k1 (8 n2 + 4 n3 + 2 n4 + n5))     constant
2      (-j)^(n3 k2)                          trivial
3      W32^(2 (k2 + 2 k3)(2 n4 + n5))         constant
4      (-j)^(n5 k4)                          trivial
5      W_M^(kk n6)                           non-trivial
====== ===================================== ===========

``M`` is the length of the sub-transform the stage works on, ``kk`` the
stage's logical frequency index and ``n6`` the sample offset below the
stage's digit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .bitperm import bit_reverse, log2_exact
from .errors import DomainError

COLUMNS = 5

# constant rotator table (32 unit-circle points)
W32_ROM = np.exp(-2j * np.pi * np.arange(32) / 32)


class RotatorKind(Enum):
    TRIVIAL = "T"
    CONSTANT32 = "C"
    NON_TRIVIAL = "NT"
    NONE = "-"


_KINDS = (
    RotatorKind.CONSTANT32,
    RotatorKind.TRIVIAL,
    RotatorKind.CONSTANT32,
    RotatorKind.TRIVIAL,
    RotatorKind.NON_TRIVIAL,
)


def _check_k(k):
    if not 1 <= k <= COLUMNS:
        raise DomainError(f"radix exponent must be in 1..{COLUMNS}, got {k}")


def butterfly2(a: complex, b: complex) -> tuple[complex, complex]:
    return a + b, a - b


def twiddle(N: int, e: int) -> complex:
    """exp(-2 pi i e / N), exact at multiples of a quarter turn."""
    log2_exact(N, "N")
    e %= N
    if (4 * e) % N == 0:
        return (1, -1j, -1, 1j)[4 * e // N]
    return complex(np.exp(-2j * np.pi * e / N))


def bypass_config(k: int) -> tuple[bool, ...]:
    """Active mask over the five physical columns: the last ``k`` are active."""
    _check_k(k)
    return tuple(j >= COLUMNS - k for j in range(COLUMNS))


def classify_rotators(k: int) -> list[RotatorKind]:
    """Rotator kind after each active column, in processing order."""
    _check_k(k)
    return list(_KINDS[COLUMNS - k:])


def constant_bases(k: int) -> list[int | None]:
    """Root order each constant rotator actually spans once bypassed digits are zero.

    e.g. radix-2^4 uses W16 on its second column, radix-2^3 uses W8 on its first.
    """
    _check_k(k)
    out = []
    for j in range(COLUMNS - k + 1, COLUMNS + 1):
        if j == 1:
            out.append(32)
        elif j == 3:
            out.append({5: 32, 4: 16, 3: 8}[k])
        elif j in (2, 4):
            out.append(4)
        else:
            out.append(None)
    return out


def _digits_ok(values, hi, what):
    for v in values:
        if not 0 <= v < hi:
            raise DomainError(f"{what} digit {v} outside [0, {hi})")


def stage_twiddle_exponent(k: int, column: int, n_digits, k_digits,
                           span: int | None = None) -> tuple[int, int]:
    """Rotation after physical ``column`` as ``(exponent, base)``: W_base^exponent.

    ``n_digits`` = (n1..n6) and ``k_digits`` = (k1..k5[, k6]); digits belonging
    to bypassed columns must be zero.  Column 5 needs ``span`` (the
    sub-transform length M).  A bypassed column returns (0, 1).
    """
    _check_k(k)
    if not 1 <= column <= COLUMNS:
        raise DomainError(f"column must be in 1..{COLUMNS}")
    ns = tuple(n_digits) + (0,) * (6 - len(n_digits))
    ks = tuple(k_digits) + (0,) * (6 - len(k_digits))
    _digits_ok(ns[:5], 2, "n")
    _digits_ok(ks[:5], 2, "k")
    if ns[5] < 0 or ks[5] < 0:
        raise DomainError("n6/k6 must be non-negative")
    first = COLUMNS - k + 1
    if any(ns[j - 1] or ks[j - 1] for j in range(1, first)):
        raise DomainError("bypassed columns carry non-zero digits")
    if column < first:
        return 0, 1
    n1, n2, n3, n4, n5, n6 = ns
    k1, k2, k3, k4, k5 = ks[:5]
    if column == 1:
        return k1 * (8 * n2 + 4 * n3 + 2 * n4 + n5) % 32, 32
    if column == 2:
        return n3 * k2, 4
    if column == 3:
        return 2 * (k2 + 2 * k3) * (2 * n4 + n5) % 32, 32
    if column == 4:
        return n5 * k4, 4
    if span is None:
        raise DomainError("column 5 needs the sub-transform span")
    log2_exact(span, "span")
    if n6 >= span:
        raise DomainError(f"n6={n6} outside [0, {span})")
    kk = (k1 + 2 * k2 + 4 * k3 + 8 * k4 + 16 * k5) >> (COLUMNS - k)
    return kk * n6 % span, span


@lru_cache(maxsize=None)
def _column_rom_index(k: int, column: int) -> np.ndarray:
    """W32 ROM index applied after ``column`` (1..4) at each array slot.

    Slots hold k-digits for finished columns and n-digits for pending ones;
    physical digit j lives at slot bit 5 - j.
    """
    a = np.arange(1 << k)
    d = {j: (a >> (COLUMNS - j)) & 1 if j > COLUMNS - k else 0 for j in range(1, 6)}
    if column == 1:
        e = d[1] * (8 * d[2] + 4 * d[3] + 2 * d[4] + d[5])
    elif column == 2:
        e = 8 * d[3] * d[2]
    elif column == 3:
        e = 2 * (d[2] + 2 * d[3]) * (2 * d[4] + d[5])
    else:
        e = 8 * d[5] * d[4]
    return np.broadcast_to(np.asarray(e) % 32, a.shape).copy()


@dataclass(frozen=True)
class MdcConfig:
    """Static configuration of one stage's unit.

    ``span`` is the sub-transform length the stage splits (``2^k`` times the
    stride between the elements of a block).
    """

    k: int
    N: int
    stage: int
    span: int

    def __post_init__(self):
        _check_k(self.k)
        log2_exact(self.N, "N")
        log2_exact(self.span, "span")
        if not (1 << self.k) <= self.span <= self.N:
            raise DomainError(f"span {self.span} incompatible with k={self.k}, N={self.N}")

    @property
    def columns(self) -> int:
        return 1 << (self.k - 1)

    @property
    def stride(self) -> int:
        return self.span >> self.k

    @property
    def latency(self) -> int:
        return 1 << (self.k - 1)

    @property
    def rotators(self) -> list[RotatorKind]:
        kinds = [RotatorKind.NONE] * (COLUMNS - self.k)
        return kinds + classify_rotators(self.k)


@dataclass(frozen=True)
class Block:
    """2 x 2^(k-1) arrangement; ``data[r, c]`` is ``b_{r,c}``, row 0 the upper lane."""

    data: np.ndarray
    m: int = 0

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2 or d.shape[0] != 2:
            raise DomainError(f"block must have shape (2, C), got {d.shape}")
        log2_exact(d.shape[1], "block width")
        object.__setattr__(self, "data", d)

    @property
    def k(self) -> int:
        return self.data.shape[1].bit_length()

    def display(self) -> list[list]:
        """Rows with the first-arriving column on the right."""
        return [list(row[::-1]) for row in self.data.tolist()]


def output_arrangement(data: np.ndarray) -> np.ndarray:
    """Move ``b_{r,c}`` to lane ``c mod 2``, cycle ``r 2^(k-2) + c // 2``.

    Works on any array whose last two axes are (2, C).  For C = 1 the block
    passes unchanged.
    """
    data = np.asarray(data)
    C = data.shape[-1]
    if C == 1:
        return data.copy()
    lead = data.shape[:-2]
    x = data.reshape(lead + (2, C // 2, 2))          # r, c>>1, c&1
    x = np.moveaxis(x, -1, -3)                        # c&1, r, c>>1
    return x.reshape(lead + (2, C)).copy()


def input_arrangement(data: np.ndarray) -> np.ndarray:
    """Inverse of :func:`output_arrangement`."""
    data = np.asarray(data)
    C = data.shape[-1]
    if C == 1:
        return data.copy()
    lead = data.shape[:-2]
    x = data.reshape(lead + (2, 2, C // 2))          # c&1, r, c>>1
    x = np.moveaxis(x, -3, -1)
    return x.reshape(lead + (2, C)).copy()


def mdc_process_blocks(values: np.ndarray, ms, config: MdcConfig) -> np.ndarray:
    """Vectorised :func:`mdc_process_block` over a leading batch axis.

    ``values`` has shape (B, 2, C) in input arrangement; ``ms`` holds each
    block's leading index.  Returns (B, 2, C) in output arrangement.
    """
    values = np.asarray(values, dtype=np.complex128)
    k = config.k
    if values.ndim != 3 or values.shape[1:] != (2, config.columns):
        raise DomainError(f"blocks must have shape (B, 2, {config.columns}), got {values.shape}")
    B = values.shape[0]
    x = values.reshape(B, 1 << k)
    for j in range(COLUMNS - k + 1, COLUMNS + 1):
        bit = COLUMNS - j
        y = x.reshape(B, -1, 2, 1 << bit)
        u, v = y[:, :, 0, :], y[:, :, 1, :]
        x = np.stack((u + v, u - v), axis=2).reshape(B, 1 << k)
        if j < COLUMNS:
            x = x * W32_ROM[_column_rom_index(k, j)]
    low = np.asarray(ms, dtype=np.int64).reshape(B, 1) % config.stride
    kk = np.array([bit_reverse(a, k) for a in range(1 << k)], dtype=np.int64)
    e = (kk[None, :] * low) % config.span
    x = x * np.exp(-2j * np.pi * e / config.span)
    return output_arrangement(x.reshape(B, 2, config.columns))


def mdc_process_block(block: Block, config: MdcConfig) -> Block:
    """Transform one block; the result is in output arrangement.

    Slot ``a = r 2^(k-1) + c`` of the result (before rearrangement) carries
    frequency ``bitrev_k(a)`` of the block, rotated by the stage's
    non-trivial twiddle.
    """
    if block.data.shape != (2, config.columns):
        raise DomainError(f"block shape {block.data.shape} does not match k={config.k}")
    out = mdc_process_blocks(block.data[None], [block.m], config)[0]
    return Block(out, block.m)
