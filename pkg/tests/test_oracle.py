import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_fft.bitperm import (
    BitPermutation,
    IndexLayout,
    reverse_segment,
    sigma1,
    sigma2,
    sigma3_step,
)
from hybrid_fft.errors import DomainError, NeedsNewProbeError, SearchFailure
from hybrid_fft.oracle import (
    apply_steps_to_stream,
    dft_direct,
    fft_radix2,
    layout_of_stream,
    probe_input,
    recover_output_order,
    route_layout,
    search_layout,
    search_sigma3_sequence,
    stream_of_layout,
)
from hybrid_fft.processor import stage_goal, stage_radices


def test_dft_examples():
    d = np.zeros(16, complex)
    d[0] = 1
    assert np.allclose(dft_direct(d), np.ones(16))
    assert np.allclose(dft_direct(np.ones(16)), 16 * d)


@pytest.mark.parametrize("N", [2, 8, 64, 512, 4096])
def test_oracles_agree(N):
    rng = np.random.default_rng(N)
    x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    assert np.max(np.abs(dft_direct(x) - fft_radix2(x))) < 1e-10 * max(1, N / 64)
    # third opinion from numpy
    assert np.max(np.abs(fft_radix2(x) - np.fft.fft(x))) < 1e-9


def test_fft_small_examples():
    assert np.allclose(fft_radix2([3, 5]), [8, -2])
    assert np.allclose(fft_radix2([0, 1, 0, 0]), [1, -1j, -1, 1j])
    with pytest.raises(DomainError):
        fft_radix2(np.ones(6))


def test_fft_parseval_65536():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(65536) + 1j * rng.standard_normal(65536)
    X = fft_radix2(x)
    assert np.sum(np.abs(X) ** 2) == pytest.approx(65536 * np.sum(np.abs(x) ** 2), rel=1e-9)


def test_recover_identity_and_bitreversal():
    ref = probe_input(8, 1)
    assert recover_output_order(ref, ref).is_identity()
    rev = reverse_segment(3, 2, 0)
    sim = np.empty(8, complex)
    sim[rev.apply_array(np.arange(8))] = ref
    assert recover_output_order(sim, ref) == rev


@settings(max_examples=30)
@given(st.integers(1, 10).flatmap(lambda n: st.permutations(range(n))), st.integers(0, 99))
def test_recover_random_perm(m, seed):
    perm = BitPermutation(tuple(m))
    N = 1 << perm.n
    ref = probe_input(N, seed)
    sim = np.empty(N, complex)
    sim[perm.apply_array(np.arange(N))] = ref
    got = recover_output_order(sim, ref)
    assert got == perm
    # input-independent: the same permutation aligns a second pair
    other = probe_input(N, seed + 1)
    sim2 = np.empty(N, complex)
    sim2[perm.apply_array(np.arange(N))] = other
    assert np.allclose(sim2[got.apply_array(np.arange(N))], other)


def test_recover_rejects_non_bit_permutation():
    ref = probe_input(8, 2)
    sim = ref[[0, 2, 1, 3, 4, 5, 7, 6]]
    with pytest.raises(DomainError):
        recover_output_order(sim, ref)


def test_recover_ambiguous_probe():
    with pytest.raises(NeedsNewProbeError):
        recover_output_order(np.ones(8), np.ones(8))


def test_layout_stream_roundtrip():
    lay = (3, 0, 2, 1)
    assert layout_of_stream(stream_of_layout(lay)) == lay


def _stage1_stream(n, P):
    N = 1 << n
    pos = np.arange(N)
    s = pos[sigma1(N, 1, 5, P).apply_array(pos)]
    return s[sigma2(N, 1, 5, P).apply_array(pos)]


def test_search_identical_is_empty():
    s = _stage1_stream(11, 1)
    assert search_sigma3_sequence(s, s, 1) == []


def test_search_stream_p1_row3():
    n, P = 13, 1
    lay = IndexLayout(n, 1)
    src = _stage1_stream(n, P)
    goal = stage_goal(n, 1, stage_radices(1 << n, 5), 1)
    steps = search_layout(layout_of_stream(src), goal, lay)
    dst = apply_steps_to_stream(src, steps, lay)
    assert [s.as_tuple() for s in search_sigma3_sequence(src, dst, P)] == [(1, 2), (1, 1), (1, 2)]


def test_search_stream_p4_row2():
    n, P = 12, 4
    lay = IndexLayout(n, 3)
    src = _stage1_stream(n, P)
    goal = stage_goal(n, 3, stage_radices(1 << n, 5), 1)
    steps = search_layout(layout_of_stream(src), goal, lay)
    dst = apply_steps_to_stream(src, steps, lay)
    got = search_sigma3_sequence(src, dst, P)
    assert [s.as_tuple() for s in got] == [(2, 1)]


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 9), st.sampled_from([1, 2, 4]), st.lists(st.tuples(
    st.integers(0, 2), st.integers(0, 8)), min_size=0, max_size=4))
def test_search_result_reproduces_target(n, P, raw_steps):
    lay = IndexLayout.for_parallelism(1 << n, P)
    if lay.serial < 1:
        return
    src = np.random.default_rng(n).permutation(n)
    src_stream = stream_of_layout(tuple(int(v) for v in src))
    dst = src_stream
    pos = np.arange(1 << n)
    from hybrid_fft.bitperm import SwapStep
    for h, l in raw_steps:
        stp = SwapStep(1 << (h % lay.p), 1 << (l % lay.serial))
        dst = dst[sigma3_step(lay, stp).apply_array(pos)]
    steps = search_sigma3_sequence(src_stream, dst, P)
    assert len(steps) <= len(raw_steps)
    assert np.array_equal(apply_steps_to_stream(src_stream, steps, lay), dst)


def test_search_rejects_bad_input():
    with pytest.raises(DomainError):
        search_sigma3_sequence(np.arange(8), np.arange(8) + 1, 1)
    with pytest.raises(SearchFailure):
        # full reversal of 6 bits in a 2-lane layout needs more than one step
        s = stream_of_layout(tuple(range(6)))
        d = stream_of_layout(tuple(range(6))[::-1])
        search_sigma3_sequence(s, d, 1, max_steps=1)


def test_route_always_succeeds():
    lay = IndexLayout(12, 3)
    rng = np.random.default_rng(4)
    for _ in range(20):
        cur = tuple(int(v) for v in rng.permutation(12))
        goal = stage_goal(12, 3, [2, 5, 5], 3)
        steps = route_layout(cur, goal, lay)
        from hybrid_fft.oracle import apply_steps
        out = apply_steps(cur, steps, lay)
        assert all(out[p] == lab for p, lab in goal.items())
