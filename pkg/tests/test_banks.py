import io
import json

import numpy as np
import pytest

from hybrid_fft.banks import (
    AccessTrace,
    BankArray,
    CounterSchedule,
    audit_conflicts,
    dump_trace,
    initial_schedule,
    next_schedule,
    read_addresses,
    read_batch,
    write_batch,
)
from hybrid_fft.bitperm import BitPermutation, compose, reverse_segment, sigma1, sigma_hat
from hybrid_fft.errors import ConflictError, DomainError
from hybrid_fft.processor import PlanConfig, plan, run


def test_schedule_alternation():
    sm = reverse_segment(6, 4, 0)
    s1 = initial_schedule(sm)
    assert s1.write.is_identity() and s1.read == sm
    s2 = next_schedule(s1, sm)
    assert s2.write == sm and s2.read.is_identity()
    s3 = next_schedule(s2, sm)
    assert s3.write.is_identity() and s3.read == sm


def test_schedule_identity():
    ident = BitPermutation.identity(5)
    s = initial_schedule(ident)
    for _ in range(4):
        assert s.read.is_identity() and s.write.is_identity()
        s = next_schedule(s, ident)


def test_schedule_recurrence_non_involution():
    sm = BitPermutation((1, 2, 3, 4, 0))
    s = initial_schedule(sm)
    for _ in range(6):
        nxt = next_schedule(s, sm)
        assert nxt.write == s.read
        assert nxt.sigma_mem == sm
        s = nxt


def test_schedule_width_mismatch():
    with pytest.raises(DomainError):
        next_schedule(initial_schedule(BitPermutation.identity(4)), BitPermutation.identity(5))
    with pytest.raises(DomainError):
        CounterSchedule(1, BitPermutation.identity(4), BitPermutation.identity(3))


def test_memory_stage2_read_is_sigma_hat():
    # with in-place writes the second iteration reads through sigma_hat(2)
    prev = CounterSchedule(1, BitPermutation.identity(12), sigma_hat(4096, 1, 5, 4))
    net = compose(prev.read.inverse(), sigma_hat(4096, 2, 5, 4))
    s2 = next_schedule(prev, net)
    assert s2.read == sigma_hat(4096, 2, 5, 4)
    assert s2.write == sigma_hat(4096, 1, 5, 4)


def test_identity_read_sequential():
    banks = BankArray(2, 16)
    sched = initial_schedule(BitPermutation.identity(5))
    addr = read_addresses(banks, sched)
    assert addr[:16, 1].tolist() == list(range(16))
    assert addr[16:, 0].tolist() == [1] * 16


def test_bitreversed_read_4096():
    banks = BankArray(2, 2048)
    sched = initial_schedule(sigma1(4096, 1, 5, 1))
    addr = read_addresses(banks, sched)
    rev = [int(f"{c:011b}"[::-1], 2) for c in range(2048)]
    assert addr[:2048, 1].tolist() == rev
    assert addr[:2048, 0].tolist() == [0] * 2048


def test_write_then_read():
    x = np.arange(64) + 0j
    ident = initial_schedule(BitPermutation.identity(6))
    banks = write_batch(BankArray(2, 32), ident, x)
    assert np.array_equal(read_batch(banks, ident), x)
    again = read_batch(banks, ident)
    assert np.array_equal(again, read_batch(banks, ident))


def test_write_sigma_mem_read_identity():
    sm = reverse_segment(6, 4, 0)
    x = np.arange(64) + 0j
    banks = write_batch(BankArray(2, 32), CounterSchedule(1, sm, sm), x)
    got = read_batch(banks, initial_schedule(BitPermutation.identity(6)))
    # location sm(pos) holds x[pos]
    assert np.array_equal(got[sm.apply_array(np.arange(64))], x)


def test_net_reordering():
    sm = reverse_segment(6, 4, 0)
    x = np.arange(64) + 0j
    banks = BankArray(2, 32)
    s1 = initial_schedule(sm)
    write_batch(banks, s1, x)
    got = read_batch(banks, s1)
    assert np.array_equal(got, x[sm.apply_array(np.arange(64))])


def test_stream_length_checked():
    with pytest.raises(DomainError):
        write_batch(BankArray(2, 8), initial_schedule(BitPermutation.identity(4)), np.zeros(8))
    with pytest.raises(DomainError):
        read_batch(BankArray(2, 8), initial_schedule(BitPermutation.identity(5)))


def _bank_pair_run(sm, batches, swap=None):
    """Consecutive batches through one bank pair with interleaved schedules."""
    n = sm.n
    D = 1 << (n - 1)
    trace = AccessTrace()
    banks = BankArray(2, D, 0, trace)
    scheds = [initial_schedule(sm)]
    for _ in range(batches):
        scheds.append(next_schedule(scheds[-1], sm))
    if swap is not None:
        s = scheds[swap]
        scheds[swap] = CounterSchedule(s.index, s.read, s.write)
    for j in range(batches + 1):
        if j >= 1:
            read_batch(banks, scheds[j - 1], j * D, j - 1)
        if j < batches:
            write_batch(banks, scheds[j], np.zeros(1 << n), j * D, j)
    return trace


def test_audit_clean_interleaving():
    assert audit_conflicts(_bank_pair_run(reverse_segment(7, 5, 0), 4)).conflicts == 0


def test_audit_detects_swapped_schedule():
    res = audit_conflicts(_bank_pair_run(reverse_segment(7, 5, 0), 4, swap=1))
    assert res.conflicts >= 1
    assert set(res.first) == {"cycle", "op", "bank", "address", "batch"}
    with pytest.raises(ConflictError) as exc:
        res.raise_if_conflicts()
    assert exc.value.count == res.conflicts


def test_audit_read_before_write():
    t = AccessTrace()
    t.record([0], 0, [0], [3], 0)
    t.record([1], 1, [0], [3], 0)
    res = audit_conflicts(t)
    assert res.conflicts == 1 and res.first["op"] == "R"


def test_audit_same_cycle_read_first():
    t = AccessTrace()
    t.record([0], 1, [0], [3], 0)
    t.record([5], 1, [0], [3], 1)
    t.record([5], 0, [0], [3], 0)
    assert audit_conflicts(t).conflicts == 0


def test_pipeline_run_conflict_free():
    trace = AccessTrace()
    x = np.random.default_rng(0).standard_normal((3, 64)) + 0j
    _, rep = run(PlanConfig(64, 5, 1, "pipeline"), x, trace=trace)
    assert rep.conflicts == 0 and len(trace) > 0


def test_memory_4096_p4_inplace():
    cfg = PlanConfig(4096, 5, 4, "memory")
    trace = AccessTrace()
    _, rep = run(cfg, np.ones(4096, complex), trace=trace)
    assert rep.conflicts == 0
    ev = trace.as_array()
    pl = plan(cfg)
    D = 4096 // 8
    start = D
    for st in pl.stages:
        reads = ev[(ev[:, 1] == 0) & (ev[:, 0] >= start) & (ev[:, 0] < start + D)]
        lo = start + st.latency
        writes = ev[(ev[:, 1] == 1) & (ev[:, 0] >= lo) & (ev[:, 0] < lo + D)]
        assert len(reads) == len(writes) == 4096
        # written back to exactly the locations just read, counter by counter
        r = reads[np.lexsort((reads[:, 3], reads[:, 2], reads[:, 0]))]
        w = writes[np.lexsort((writes[:, 3], writes[:, 2], writes[:, 0]))]
        assert np.array_equal(r[:, 2:4], w[:, 2:4])
        start += D + st.latency
    per_loc = np.unique(ev[:, 2] * 4096 + ev[:, 3], return_counts=True)[1]
    assert np.all(per_loc == 2 * (pl.S + 1))


def test_dump_trace_ndjson():
    t = AccessTrace()
    t.record([2, 1], 0, [1, 0], [5, 6], 3)
    buf = io.StringIO()
    assert dump_trace(t, buf) == 2
    lines = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert lines[0] == {"cycle": 1, "op": "R", "bank": 0, "address": 6, "batch": 3}
