"""Memory banks driven by permuted circular counters, plus an access auditor.

A stream position ``pos`` (lane bits over time bits) is presented at counter
value ``pos mod depth``.  A schedule maps positions to locations: the top bits
of ``R(pos)`` / ``W(pos)`` select the bank, the rest the address.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bitperm import BitPermutation, compose, log2_exact
from .errors import ConflictError, DomainError

READ, WRITE = 0, 1
_OP_NAME = {READ: "R", WRITE: "W"}


@dataclass(frozen=True)
class CounterSchedule:
    """Address permutations used by one batch (or iteration) on one bank set."""

    index: int
    write: BitPermutation
    read: BitPermutation

    def __post_init__(self):
        if self.write.n != self.read.n:
            raise DomainError("read and write permutations differ in width")

    @property
    def sigma_mem(self) -> BitPermutation:
        """Stream reordering seen through the memory: the reader at position
        ``pos`` gets what the writer presented at ``sigma_mem(pos)``."""
        return compose(self.write.inverse(), self.read)


def initial_schedule(sigma_mem: BitPermutation) -> CounterSchedule:
    return CounterSchedule(1, BitPermutation.identity(sigma_mem.n), sigma_mem)


def next_schedule(prev: CounterSchedule, sigma_mem: BitPermutation) -> CounterSchedule:
    """Write where the previous batch read; read so the net reordering is ``sigma_mem``."""
    if sigma_mem.n != prev.read.n:
        raise DomainError("width mismatch")
    w = prev.read
    return CounterSchedule(prev.index + 1, w, compose(w, sigma_mem))


@dataclass
class AccessTrace:
    """Append-only record of bank accesses, stored as numpy chunks."""

    _chunks: list = field(default_factory=list)

    def record(self, cycles, op, banks, addresses, batch):
        cycles = np.asarray(cycles, dtype=np.int64).ravel()
        size = cycles.size
        self._chunks.append(np.stack([
            cycles,
            np.full(size, op, dtype=np.int64),
            np.asarray(banks, dtype=np.int64).ravel(),
            np.asarray(addresses, dtype=np.int64).ravel(),
            np.full(size, batch, dtype=np.int64),
        ]))

    def merge(self, other: "AccessTrace") -> None:
        self._chunks.extend(other._chunks)

    def as_array(self) -> np.ndarray:
        """(events, 5) array of cycle, op, bank, address, batch."""
        if not self._chunks:
            return np.zeros((0, 5), dtype=np.int64)
        return np.concatenate(self._chunks, axis=1).T

    def __len__(self):
        return sum(c.shape[1] for c in self._chunks)


class BankArray:
    """``count`` banks of ``depth`` complex words; bank ids are offset by ``base``."""

    def __init__(self, count: int, depth: int, base: int = 0,
                 trace: AccessTrace | None = None):
        log2_exact(count, "bank count")
        log2_exact(depth, "bank depth")
        self.count = count
        self.depth = depth
        self.base = base
        self.data = np.full((count, depth), np.nan + 0j, dtype=np.complex128)
        self.trace = trace

    @property
    def bits(self) -> int:
        return (self.count * self.depth).bit_length() - 1

    def _locations(self, perm: BitPermutation):
        if perm.n != self.bits:
            raise DomainError(f"schedule width {perm.n} != {self.bits} bank bits")
        pos = np.arange(self.count * self.depth, dtype=np.int64)
        loc = perm.apply_array(pos)
        bank = loc // self.depth
        addr = loc % self.depth
        if bank.max(initial=0) >= self.count:
            raise ConflictError("address outside bank array")
        return pos % self.depth, bank, addr

    def _log(self, op, t, bank, addr, cycle0, batch):
        if self.trace is not None:
            self.trace.record(cycle0 + t, op, bank + self.base, addr, batch)


def read_batch(banks: BankArray, schedule: CounterSchedule,
               cycle0: int = 0, batch: int = 0) -> np.ndarray:
    """Read a full batch; element ``pos`` of the result is the stream position."""
    t, bank, addr = banks._locations(schedule.read)
    banks._log(READ, t, bank, addr, cycle0, batch)
    return banks.data[bank, addr].copy()


def write_batch(banks: BankArray, schedule: CounterSchedule, stream,
                cycle0: int = 0, batch: int = 0) -> BankArray:
    stream = np.asarray(stream)
    t, bank, addr = banks._locations(schedule.write)
    if stream.size != t.size:
        raise DomainError(f"stream length {stream.size} != bank capacity {t.size}")
    banks._log(WRITE, t, bank, addr, cycle0, batch)
    banks.data[bank, addr] = stream
    return banks


def read_addresses(banks: BankArray, schedule: CounterSchedule) -> np.ndarray:
    """(bank, address) per stream position under the read permutation."""
    _, bank, addr = banks._locations(schedule.read)
    return np.stack([bank, addr], axis=1)


def _event(row) -> dict:
    cycle, op, bank, addr, batch = (int(v) for v in row)
    return {"cycle": cycle, "op": _OP_NAME[op], "bank": bank,
            "address": addr, "batch": batch}


@dataclass(frozen=True)
class AuditResult:
    conflicts: int
    first: dict | None

    def raise_if_conflicts(self):
        if self.conflicts:
            raise ConflictError(f"{self.conflicts} access conflicts, first {self.first}",
                                self.conflicts, self.first)


def audit_conflicts(trace: AccessTrace) -> AuditResult:
    """Check that every location alternates write, read, write, read...

    Within a cycle a read precedes a write to the same location.  A read with
    no fresh write before it, and a write that clobbers an unread value, each
    count as one conflict.
    """
    ev = trace.as_array()
    if ev.shape[0] == 0:
        return AuditResult(0, None)
    order = np.lexsort((ev[:, 1], ev[:, 0], ev[:, 3], ev[:, 2]))
    ev = ev[order]
    same_loc = np.zeros(ev.shape[0], dtype=bool)
    same_loc[1:] = (ev[1:, 2] == ev[:-1, 2]) & (ev[1:, 3] == ev[:-1, 3])
    prev_op = np.empty(ev.shape[0], dtype=np.int64)
    prev_op[0] = READ
    prev_op[1:] = ev[:-1, 1]
    # a location's history starts as if just read
    prev_op[~same_loc] = READ
    bad = ev[:, 1] == prev_op
    count = int(bad.sum())
    if not count:
        return AuditResult(0, None)
    hits = ev[bad]
    first = hits[np.lexsort((hits[:, 3], hits[:, 2], hits[:, 0]))[0]]
    return AuditResult(count, _event(first))


def dump_trace(trace: AccessTrace, fh) -> int:
    """Write the trace as newline-delimited JSON in cycle order; returns the count."""
    ev = trace.as_array()
    ev = ev[np.lexsort((ev[:, 3], ev[:, 2], ev[:, 1], ev[:, 0]))]
    for row in ev:
        fh.write(json.dumps(_event(row)) + "\n")
    return ev.shape[0]
