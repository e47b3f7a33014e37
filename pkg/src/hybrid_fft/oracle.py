"""Reference transforms, output-order recovery and the reshuffle-step search.

Layouts
-------
A stream of ``2^n`` samples occupies ``2^p`` lanes for ``2^(n-p)`` cycles.
Position bits follow :class:`~hybrid_fft.bitperm.IndexLayout`: lane bits on
top, time bits below.  When every sample's label is a bit permutation of its
position, the stream is summarised by a *layout* tuple where ``lay[j]`` is the
label bit carried by position bit ``j``.
"""

from __future__ import annotations

import numpy as np

from .bitperm import BitPermutation, IndexLayout, SwapStep, log2_exact, sigma3_step
from .errors import DomainError, NeedsNewProbeError, SearchFailure

MAX_SIGMA3_STEPS = 6


# -- reference transforms ---------------------------------------------------

def dft_direct(x) -> np.ndarray:
    """O(N^2) forward DFT with exactly reduced integer phase exponents."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    N = x.size
    if N == 0:
        raise DomainError("empty input")
    n_idx = np.arange(N, dtype=np.int64)
    roots = np.exp(-2j * np.pi * n_idx / N)
    out = np.empty(N, dtype=np.complex128)
    chunk = max(1, (1 << 22) // N)
    for start in range(0, N, chunk):
        k = n_idx[start:start + chunk, None]
        out[start:start + chunk] = roots[(k * n_idx[None, :]) % N] @ x
    return out


def fft_radix2(x) -> np.ndarray:
    """Iterative decimation-in-time radix-2 FFT."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    n = log2_exact(x.size, "FFT length")
    N = x.size
    idx = np.arange(N)
    rev = np.zeros(N, dtype=np.int64)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    a = x[rev].copy()
    half = 1
    while half < N:
        w = np.exp(-1j * np.pi * np.arange(half) / half)
        a = a.reshape(-1, 2 * half)
        top = a[:, :half].copy()
        bot = a[:, half:] * w
        a[:, :half] = top + bot
        a[:, half:] = top - bot
        a = a.ravel()
        half *= 2
    return a


def recover_output_order(simulated, reference, rtol: float = 1e-6) -> BitPermutation:
    """Find the bit permutation ``pi`` with ``simulated[pi(i)] == reference[i]``.

    Single-bit reference indices pin the permutation down; every other entry is
    then checked.  Raises NeedsNewProbeError when a probe value is not unique
    and DomainError when no bit-dimension permutation fits.
    """
    sim = np.asarray(simulated, dtype=np.complex128).ravel()
    ref = np.asarray(reference, dtype=np.complex128).ravel()
    if sim.size != ref.size:
        raise DomainError("length mismatch")
    n = log2_exact(ref.size, "length")
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    tol = rtol * scale
    images = []
    for j in range(n):
        dist = np.abs(sim - ref[1 << j])
        hits = np.flatnonzero(dist <= tol)
        if hits.size > 1:
            raise NeedsNewProbeError(f"reference value at {1 << j} is not unique")
        if hits.size == 0 or hits[0] == 0 or hits[0] & (hits[0] - 1):
            raise DomainError("simulated order is not a bit-dimension permutation")
        images.append(int(hits[0]).bit_length() - 1)
    if sorted(images) != list(range(n)):
        raise DomainError("simulated order is not a bit-dimension permutation")
    m = [0] * n
    for j, i in enumerate(images):
        m[i] = j
    pi = BitPermutation(tuple(m))
    mapped = pi.apply_array(np.arange(ref.size))
    if np.max(np.abs(sim[mapped] - ref)) > tol:
        raise DomainError("simulated order is not a bit-dimension permutation")
    return pi


def probe_input(N: int, seed: int = 0) -> np.ndarray:
    """Complex probe with strictly increasing magnitudes and random phases."""
    rng = np.random.default_rng(seed)
    mags = 1.0 + np.arange(N) / N
    return mags * np.exp(2j * np.pi * rng.random(N))


# -- layout helpers ----------------------------------------------------------

def layout_of_stream(labels) -> tuple[int, ...]:
    """Layout of a label stream, or DomainError if it is not bit-structured."""
    g = BitPermutation.from_index_map(labels)
    # label bit i = position bit g.map[i]
    return tuple(g.inverse().map)


def stream_of_layout(lay) -> np.ndarray:
    pos = np.arange(1 << len(lay), dtype=np.int64)
    out = np.zeros_like(pos)
    for j, b in enumerate(lay):
        out |= ((pos >> j) & 1) << b
    return out


def apply_steps(lay, steps, layout: IndexLayout) -> tuple[int, ...]:
    lay = list(lay)
    for st in steps:
        a = layout.serial + st.h_bit
        b = st.l_bit
        lay[a], lay[b] = lay[b], lay[a]
    return tuple(lay)


def apply_steps_to_stream(stream, steps, layout: IndexLayout) -> np.ndarray:
    """Run a stream through the reshuffle steps in order."""
    out = np.asarray(stream)
    pos = np.arange(out.size, dtype=np.int64)
    for st in steps:
        out = out[sigma3_step(layout, st).apply_array(pos)]
    return out


def _profile(lay, goal, steps, layout):
    prof = []
    cur = lay
    for st in steps:
        cur = apply_steps(cur, [st], layout)
        prof.append(sum(cur[pos] == lab for pos, lab in goal.items()))
    return prof


def _tie_key(lay, goal, steps, layout):
    return (
        sum(st.h for st in steps),
        [-x for x in _profile(lay, goal, steps, layout)],
        [(-st.h, -st.l) for st in steps],
    )


def search_layout(lay, goal: dict[int, int], layout: IndexLayout,
                  max_steps: int = MAX_SIGMA3_STEPS) -> list[SwapStep]:
    """Shortest reshuffle sequence placing ``goal`` label bits.

    ``goal`` maps position bit -> required label bit; unlisted positions are
    free.  Iterative deepening with an admissible bound: a label bit sitting on
    the wrong side of the lane/time split needs at least one swap, one stuck on
    the right side but wrong slot needs two, and a swap moves two bits.

    Among equally short sequences the winner has the least total ``h``, then
    places goal bits as early as possible, then prefers larger ``(h, l)``.
    """
    n = layout.n
    split = layout.serial
    if len(lay) != n:
        raise DomainError("layout width mismatch")
    want = {lab: pos for pos, lab in goal.items()}
    where0 = {lab: lay.index(lab) for lab in want}

    def bound(where):
        c = 0
        for lab, tgt in want.items():
            cur = where[lab]
            if cur != tgt:
                c += 1 if (cur >= split) != (tgt >= split) else 2
        return (c + 1) // 2

    lanes = range(split, n)
    times = range(split)
    found: list[list[SwapStep]] = []

    def dfs(where, seq, budget):
        b = bound(where)
        if b == 0:
            if budget == 0:
                found.append(list(seq))
            return
        if b > budget:
            return
        occ = {pos: lab for lab, pos in where.items()}
        for a in lanes:
            for t in times:
                la, lt = occ.get(a), occ.get(t)
                if la is None and lt is None:
                    continue
                nxt = dict(where)
                if la is not None:
                    nxt[la] = t
                if lt is not None:
                    nxt[lt] = a
                seq.append(SwapStep(1 << (a - split), 1 << t))
                dfs(nxt, seq, budget - 1)
                seq.pop()

    if split == 0:
        if bound(where0):
            raise SearchFailure("no time bits to swap with")
        return []
    for depth in range(max_steps + 1):
        dfs(where0, [], depth)
        if found:
            return min(found, key=lambda s: _tie_key(lay, goal, s, layout))
    raise SearchFailure(f"no reshuffle sequence within {max_steps} steps")


def route_layout(lay, goal: dict[int, int], layout: IndexLayout) -> list[SwapStep]:
    """Constructive reshuffle that always succeeds, without a length bound.

    Used when :func:`search_layout` exceeds its step budget.  The lowest lane
    bit is fixed first; time-bit targets are then filled one at a time.
    """
    split = layout.serial
    cur = list(lay)
    steps: list[SwapStep] = []

    def swap(a, t):
        cur[a], cur[t] = cur[t], cur[a]
        steps.append(SwapStep(1 << (a - split), 1 << t))

    spare_lanes = [a for a in range(split + 1, layout.n) if a not in goal]
    if split in goal and cur[split] != goal[split]:
        src = cur.index(goal[split])
        if src < split:
            swap(split, src)
        else:
            if split == 0:
                raise SearchFailure("no time bits to route through")
            t = next((t for t in range(split) if t not in goal), 0)
            swap(src, t)
            swap(split, t)
    for t in sorted(x for x in goal if x < split):
        lab = goal[t]
        src = cur.index(lab)
        if src == t:
            continue
        if src >= split:
            swap(src, t)
        elif spare_lanes:
            a = spare_lanes[0]
            swap(a, src)
            swap(a, t)
        else:
            swap(split, src)
            swap(split, t)
            swap(split, src)
    if any(cur[pos] != lab for pos, lab in goal.items()):
        raise SearchFailure("constructive routing failed")
    return steps


def search_sigma3_sequence(from_order, to_order, P: int,
                           max_steps: int = MAX_SIGMA3_STEPS) -> list[SwapStep]:
    """Reshuffle steps turning label stream ``from_order`` into ``to_order``.

    Both streams list one label per position (lane-major, time-minor) over
    ``2P`` lanes.  Raises SearchFailure if nothing fits in ``max_steps``.
    """
    src = np.asarray(from_order, dtype=np.int64)
    dst = np.asarray(to_order, dtype=np.int64)
    if src.shape != dst.shape or not np.array_equal(np.sort(src), np.sort(dst)):
        raise DomainError("orders are not the same multiset")
    layout = IndexLayout.for_parallelism(src.size, P)
    lay_from = layout_of_stream(src)
    lay_to = layout_of_stream(dst)
    goal = dict(enumerate(lay_to))
    steps = search_layout(lay_from, goal, layout, max_steps)
    if not np.array_equal(apply_steps_to_stream(src, steps, layout), dst):
        raise SearchFailure("search result does not reproduce the target stream")
    return steps
