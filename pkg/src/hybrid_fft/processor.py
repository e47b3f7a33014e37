"""Planner, execution engines and performance model.

Pipeline mode
    Stages map onto distinct MDC units chained through neighbouring bank
    pairs.  With ``P`` > 1 the four units split into ``P`` independent paths,
    each fed its own batches through a two-lane layout.
Memory mode
    ``P`` units with ``2P`` lanes iterate over all stages, reading and writing
    one shared bank set in place.

Every stage reads its banks through a permuted counter, exchanges lanes
(``sigma2``), runs a short chain of lane/time swaps (``sigma3``) and feeds
blocks to the MDC.  The stream labels used below are in-place DIF indices:
after the last stage, label ``L`` carries frequency ``bitrev_n(L)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .banks import (
    AccessTrace,
    BankArray,
    CounterSchedule,
    audit_conflicts,
    initial_schedule,
    next_schedule,
    read_batch,
    write_batch,
)
from .bitperm import (
    BitPermutation,
    IndexLayout,
    SwapStep,
    log2_exact,
    memory_range,
    sigma1,
    sigma2,
    sigma3_step,
    sigma_hat,
    w_membased,
    w_pipeline,
)
from .errors import (
    ConfigurationError,
    DomainError,
    ModeUnsupportedError,
    NumericError,
    SearchFailure,
)
from .mdc import Block, MdcConfig, mdc_process_blocks, output_arrangement
from .oracle import (
    MAX_SIGMA3_STEPS,
    apply_steps,
    dft_direct,
    fft_radix2,
    route_layout,
    search_layout,
)

MAX_N = 1 << 19
MDC_UNITS = 4
BUTTERFLIES_PER_UNIT = 5
PIPELINE, MEMORY = "pipeline", "memory"
DIRECT_ORACLE_MAX = 4096


# -- stage arithmetic --------------------------------------------------------

def stage_radices(N: int, k: int = 5) -> list[int]:
    n = log2_exact(N, "N")
    if n < 1:
        raise DomainError("N must be at least 2")
    if not 1 <= k <= 5:
        raise DomainError(f"k must be in 1..5, got {k}")
    S = -(-n // k)
    return [n - k * (S - 1)] + [k] * (S - 1)


def epsilon(N: int, s: int, radices) -> int:
    if not 0 <= s <= len(radices):
        raise DomainError(f"stage {s} outside 0..{len(radices)}")
    return N >> sum(radices[:s])


def block_leading_indices(N: int, s: int, radices) -> np.ndarray:
    """Leading index ``m`` of every block of stage ``s``, in canonical order."""
    S = len(radices)
    if not 1 <= s <= S:
        raise DomainError(f"stage {s} outside 1..{S}")
    if s == S:
        return np.arange(0, N, 1 << radices[-1], dtype=np.int64)
    prev, cur = epsilon(N, s - 1, radices), epsilon(N, s, radices)
    v = np.arange(N // prev, dtype=np.int64)[:, None] * prev
    return (v + np.arange(cur, dtype=np.int64)[None, :]).ravel()


def build_block(N: int, s: int, radices, m: int) -> Block:
    """Index block ``b[r, c] = m + eps_s (2^(k_s-1) r + c)``."""
    ks = radices[s - 1]
    eps = epsilon(N, s, radices)
    C = 1 << (ks - 1)
    d = eps * (C * np.arange(2)[:, None] + np.arange(C)[None, :])
    idx = m + d
    if m < 0 or idx.max() >= N:
        raise DomainError(f"block led by m={m} leaves [0, {N})")
    return Block(idx.astype(np.int64), m)


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class PlanConfig:
    N: int
    k: int = 5
    P: int = 1
    mode: str = PIPELINE
    allow_short: bool = False

    def __post_init__(self):
        if isinstance(self.N, bool) or not isinstance(self.N, int):
            raise ConfigurationError(f"N must be an integer, got {self.N!r}")
        try:
            n = log2_exact(self.N, "N")
        except DomainError as exc:
            raise ConfigurationError(str(exc)) from None
        if not 2 <= self.N <= MAX_N:
            raise ConfigurationError(f"N must be in [2, {MAX_N}], got {self.N}")
        if not 1 <= self.k <= 5:
            raise ConfigurationError(f"k must be in 1..5, got {self.k}")
        if self.P not in (1, 2, 4):
            raise ConfigurationError(f"P must be 1, 2 or 4, got {self.P}")
        if self.mode not in (PIPELINE, MEMORY):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        S = len(stage_radices(self.N, self.k))
        if self.mode == PIPELINE:
            if S * self.P > MDC_UNITS:
                raise ConfigurationError(
                    f"pipeline with P={self.P} needs {S * self.P} MDC units, "
                    f"only {MDC_UNITS} exist")
        else:
            if not memory_range(self.N, self.k, self.allow_short):
                lo = self.k if self.allow_short else 2 * self.k
                raise ModeUnsupportedError(
                    f"memory mode covers N in (2^{lo}, 2^{3 * self.k}], got N=2^{n}")
            serial = n - log2_exact(2 * self.P)
            if any(ks - 1 > serial for ks in stage_radices(self.N, self.k)):
                raise ConfigurationError(
                    f"N={self.N} is too short to fill {2 * self.P} lanes at radix 2^{self.k}")

    @property
    def n(self) -> int:
        return self.N.bit_length() - 1

    @property
    def layout(self) -> IndexLayout:
        """Lane layout of one datapath (a pipeline path uses two lanes)."""
        lanes_P = 1 if self.mode == PIPELINE else self.P
        return IndexLayout.for_parallelism(self.N, lanes_P)


# -- plan --------------------------------------------------------------------

@dataclass(frozen=True)
class StageSchedule:
    s: int
    k: int
    epsilon: int
    span: int
    w: int
    w_tilde: int
    read_perm: BitPermutation        # counter -> location of the stage's reads
    stream_perm: BitPermutation      # net reordering through the memory
    sigma2: BitPermutation
    steps: tuple[SwapStep, ...]
    searched: bool                   # False when the constructive router was needed
    block_m: np.ndarray = field(repr=False, compare=False)

    N: int = 0

    @property
    def latency(self) -> int:
        """Swap-chain delay plus MDC delay, in cycles."""
        return sum(st.l for st in self.steps) + (1 << (self.k - 1))

    @property
    def mdc(self) -> MdcConfig:
        return MdcConfig(self.k, self.N, self.s, self.span)


@dataclass(frozen=True)
class StagePlan:
    config: PlanConfig
    radices: tuple[int, ...]
    stages: tuple[StageSchedule, ...]
    output_perm: BitPermutation      # raw[output_perm(i)] = X[i]

    @property
    def S(self) -> int:
        return len(self.radices)

    @property
    def flagged(self) -> list[int]:
        return [st.s for st in self.stages if not st.searched]

    @property
    def fill_latency(self) -> int:
        return sum(st.latency for st in self.stages)


def _read_layout(lay, perm: BitPermutation):
    new = [0] * len(lay)
    for j, v in enumerate(lay):
        new[perm.map[j]] = v
    return tuple(new)


def stage_goal(n: int, p: int, radices, s: int) -> dict[int, int]:
    """Position bit -> label bit constraints for the blocks of stage ``s``."""
    ks = radices[s - 1]
    off = n - sum(radices[:s])
    goal = {n - p: off + ks - 1}
    for i in range(ks - 1):
        goal[i] = off + i
    return goal


def _mdc_layout(lay, layout: IndexLayout, ks: int):
    if ks == 1:
        return tuple(lay)
    L0 = layout.serial
    new = list(lay)
    new[L0] = lay[0]
    for i in range(ks - 2):
        new[i] = lay[i + 1]
    new[ks - 2] = lay[L0]
    return tuple(new)


def _to_blocks(stream, layout: IndexLayout, ks: int):
    units = layout.banks // 2
    C = 1 << (ks - 1)
    x = stream.reshape(units, 2, layout.depth // C, C)
    return x.transpose(0, 2, 1, 3).reshape(-1, 2, C)


def _from_blocks(blocks, layout: IndexLayout, ks: int):
    units = layout.banks // 2
    C = 1 << (ks - 1)
    x = blocks.reshape(units, layout.depth // C, 2, C)
    return x.transpose(0, 2, 1, 3).reshape(-1)


def _gather(perm: BitPermutation, size: int) -> np.ndarray:
    return perm.apply_array(np.arange(size, dtype=np.int64))


def _pipeline_w(cfg: PlanConfig, s: int) -> int:
    if cfg.N <= 1 << cfg.k:
        return cfg.n - 1
    return w_pipeline(cfg.N, s, cfg.k, 1)


def _find_steps(lay, goal, layout):
    try:
        return search_layout(lay, goal, layout, MAX_SIGMA3_STEPS), True
    except SearchFailure:
        return route_layout(lay, goal, layout), False


@lru_cache(maxsize=64)
def plan(config: PlanConfig) -> StagePlan:
    """Derive every stage's schedule and verify it with a symbolic dry run."""
    cfg = config
    N, n, k = cfg.N, cfg.n, cfg.k
    layout = cfg.layout
    radices = stage_radices(N, k)
    S = len(radices)
    lay = tuple(range(n))
    labels = np.arange(N, dtype=np.int64)
    prev_read = BitPermutation.identity(n)
    stages = []
    for s in range(1, S + 1):
        ks = radices[s - 1]
        if cfg.mode == PIPELINE:
            w, wt = _pipeline_w(cfg, s), 0
            s1 = sigma1(N, s, k, 1)
            read = s1
            stream_perm = s1
            s2 = sigma2(N, s, k, 1)
        else:
            w, wt = w_membased(N, s, k, cfg.P)
            read = sigma_hat(N, s, k, cfg.P)
            stream_perm = CounterSchedule(s, prev_read, read).sigma_mem
            prev_read = read
            s2 = sigma2(N, s, k, cfg.P)
        lay = _read_layout(_read_layout(lay, stream_perm), s2)
        goal = stage_goal(n, layout.p, radices, s)
        steps, searched = _find_steps(lay, goal, layout)
        lay = apply_steps(lay, steps, layout)

        # symbolic dry run of the same path on label streams
        labels = labels[_gather(stream_perm, N)][_gather(s2, N)]
        for st in steps:
            labels = labels[_gather(sigma3_step(layout, st), N)]
        blocks = _to_blocks(labels, layout, ks)
        eps = epsilon(N, s, radices)
        C = 1 << (ks - 1)
        ms = blocks[:, 0, 0].copy()
        expect = ms[:, None, None] + eps * (C * np.arange(2)[None, :, None]
                                            + np.arange(C)[None, None, :])
        if not np.array_equal(blocks, expect):
            raise ConfigurationError(f"stage {s}: reordered stream does not form valid blocks")
        if not np.array_equal(np.sort(ms), np.sort(block_leading_indices(N, s, radices))):
            raise ConfigurationError(f"stage {s}: block leaders differ from the expected set")
        labels = _from_blocks(output_arrangement(blocks), layout, ks)
        lay = _mdc_layout(lay, layout, ks)

        stages.append(StageSchedule(
            s=s, k=ks, epsilon=eps, span=epsilon(N, s - 1, radices), w=w, w_tilde=wt,
            read_perm=read, stream_perm=stream_perm, sigma2=s2, steps=tuple(steps),
            searched=searched, block_m=ms, N=N))

    if cfg.mode == MEMORY:
        # results sit in place at the last read locations; the sink reads linearly
        raw = np.empty(N, dtype=np.int64)
        raw[_gather(prev_read, N)] = labels
    else:
        raw = labels
    rev = BitPermutation(tuple(range(n))[::-1])
    freq_at = rev.apply_array(raw)
    out_perm = BitPermutation.from_index_map(freq_at).inverse()
    return StagePlan(cfg, tuple(radices), tuple(stages), out_perm)


# -- execution ---------------------------------------------------------------

@dataclass
class SimReport:
    n: int
    k: int
    mode: str
    parallelism: int
    stages: int
    radices: list[int]
    iterations: int
    cycles_model: int
    cycles_observed: int
    conflicts: int
    utilization: float
    max_abs_error: float | None
    output_permutation: list[int]
    lanes: int
    fill_latency: int
    w_per_stage: list
    sigma3: list
    flagged: list[int]
    batches: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _stage_compute(stream, st: StageSchedule, layout: IndexLayout, post):
    blocks = _to_blocks(stream[post], layout, st.k)
    out = mdc_process_blocks(blocks, st.block_m, st.mdc)
    return _from_blocks(out, layout, st.k)


def _post_read_gathers(pl: StagePlan, layout: IndexLayout) -> list[np.ndarray]:
    """Lane exchange followed by the swap chain, as one gather per stage."""
    N = pl.config.N
    out = []
    for st in pl.stages:
        g = _gather(st.sigma2, N)
        for step in st.steps:
            g = g[_gather(sigma3_step(layout, step), N)]
        out.append(g)
    return out


def _schedule_chain(sigma_mem: BitPermutation, count: int) -> list[CounterSchedule]:
    out = [initial_schedule(sigma_mem)]
    while len(out) < count:
        out.append(next_schedule(out[-1], sigma_mem))
    return out


def _run_pipeline(pl: StagePlan, xs, trace: AccessTrace):
    """Each path owns S + 1 bank pairs: pair 0 is filled by the source, pair
    ``s`` is written by stage ``s`` and the last pair is drained by the sink.
    Stage ``s`` reads batch ``j`` during slot ``j + s`` while stage ``s - 1``
    writes batch ``j + 1`` to the same addresses; reads win within a cycle.
    """
    cfg = pl.config
    S, P = pl.S, cfg.P
    layout = cfg.layout
    D = layout.depth
    lat = [st.latency for st in pl.stages]
    lcum = [sum(lat[:i]) for i in range(S + 1)]
    posts = _post_read_gathers(pl, layout)
    mems = [st.stream_perm for st in pl.stages] + [BitPermutation.identity(cfg.n)]
    outputs = [None] * len(xs)
    for g in range(P):
        mine = list(range(g, len(xs), P))
        if not mine:
            continue
        B = len(mine)
        base = g * (S + 1) * layout.banks
        sets = [BankArray(layout.banks, D, base + i * layout.banks, trace)
                for i in range(S + 1)]
        chains = [_schedule_chain(m, B) for m in mems]
        # within a slot, downstream consumers read before upstream producers write
        for tau in range(B + S + 1):
            jj = tau - S - 1
            if 0 <= jj < B:
                outputs[mine[jj]] = read_batch(sets[S], chains[S][jj],
                                               (jj + S + 1) * D + lcum[S], mine[jj])
            for s in range(S, 0, -1):
                jj = tau - s
                if not 0 <= jj < B:
                    continue
                t0 = (jj + s) * D + lcum[s - 1]
                stream = read_batch(sets[s - 1], chains[s - 1][jj], t0, mine[jj])
                res = _stage_compute(stream, pl.stages[s - 1], layout, posts[s - 1])
                write_batch(sets[s], chains[s][jj], res, t0 + lat[s - 1], mine[jj])
            if tau < B:
                write_batch(sets[0], chains[0][tau], xs[mine[tau]], tau * D, mine[tau])
    return outputs, S * D + lcum[S]


def _run_memory(pl: StagePlan, xs, trace: AccessTrace):
    """One bank set, stages in sequence, results written where they were read."""
    cfg = pl.config
    layout = cfg.layout
    D = layout.depth
    posts = _post_read_gathers(pl, layout)
    ident = BitPermutation.identity(cfg.n)
    linear = CounterSchedule(0, ident, ident)
    bank = BankArray(layout.banks, D, 0, trace)
    outputs = []
    t = 0
    for j, x in enumerate(xs):
        write_batch(bank, linear, x, t, j)
        t += D
        prev = ident
        for st, post in zip(pl.stages, posts):
            sched = CounterSchedule(st.s, prev, st.read_perm)
            stream = read_batch(bank, sched, t, j)
            res = _stage_compute(stream, st, layout, post)
            # in place: the next write schedule is this read schedule
            write_batch(bank, CounterSchedule(st.s + 1, st.read_perm, st.read_perm),
                        res, t + st.latency, j)
            t += D + st.latency
            prev = st.read_perm
        outputs.append(read_batch(bank, linear, t, j))
    return outputs, pl.S * D + pl.fill_latency


def unscramble(raw, pl: StagePlan) -> np.ndarray:
    """Natural-order spectrum from the raw output order."""
    raw = np.asarray(raw)
    return raw[..., pl.output_perm.apply_array(np.arange(pl.config.N))]


def reference_transform(x) -> np.ndarray:
    x = np.asarray(x)
    return dft_direct(x) if x.size <= DIRECT_ORACLE_MAX else fft_radix2(x)


@dataclass(frozen=True)
class Metrics:
    iterations: int
    cycles_model: int
    utilization: float
    lanes: int


def metrics(config: PlanConfig) -> Metrics:
    """Closed-form iteration count, cycle count and butterfly utilization.

    Provisioning is four units of five butterflies.  A pipeline path keeps
    ``n`` butterflies busy, so ``P`` paths use ``P n`` of 20.  Memory mode
    keeps ``P`` units busy on ``n / S`` butterflies each on average.
    """
    n, k, P = config.n, config.k, config.P
    S = -(-n // k)
    provisioned = MDC_UNITS * BUTTERFLIES_PER_UNIT
    if config.mode == PIPELINE:
        lanes = 2
        util = P * n / provisioned
    else:
        lanes = 2 * P
        util = P * n / (S * provisioned)
    return Metrics(S, S * config.N // lanes, util, lanes)


def average_utilization(P: int, ns, mode: str = PIPELINE, k: int = 5) -> float:
    vals = [metrics(PlanConfig(1 << n, k, P, mode, allow_short=True)).utilization
            for n in ns]
    return sum(vals) / len(vals)


@dataclass(frozen=True)
class ComparisonRow:
    design: str
    lanes: int
    iterations: int
    cycles: int


def comparison(N: int) -> list[ComparisonRow]:
    """Iteration and cycle counts of memory-based designs with a given radix
    exponent and lane count, next to this processor (radix 2^5, 4 lanes)."""
    n = log2_exact(N, "N")
    rows = [("radix-2^3 memory-based", 3, 2), ("radix-2 memory-based", 2, 2),
            ("radix-2^3 memory-based", 3, 4), ("adaptive radix-2^5", 5, 4)]
    out = []
    for name, per_iter, lanes in rows:
        it = -(-n // per_iter)
        out.append(ComparisonRow(name, lanes, it, it * N // lanes))
    return out


def _as_batches(x, N):
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != N:
        raise DomainError(f"input must hold batches of {N} samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("input contains non-finite samples")
    return arr


def run(config: PlanConfig, x, verify: bool = True,
        trace: AccessTrace | None = None) -> tuple[np.ndarray, SimReport]:
    """Simulate ``config`` on one batch (shape (N,)) or several (shape (B, N)).

    Returns the raw-order output (same shape as ``x``) and a report.  Raises
    ConflictError if the access audit finds any conflict.
    """
    pl = plan(config)
    xs = _as_batches(x, config.N)
    trace = trace if trace is not None else AccessTrace()
    engine = _run_pipeline if config.mode == PIPELINE else _run_memory
    outs, observed = engine(pl, xs, trace)
    raw = np.stack(outs)
    if not np.all(np.isfinite(raw)):
        raise NumericError("simulation produced non-finite values")
    audit = audit_conflicts(trace)
    audit.raise_if_conflicts()
    err = None
    if verify:
        got = unscramble(raw, pl)
        err = max(float(np.max(np.abs(g - reference_transform(v))))
                  for g, v in zip(got, xs))
    met = metrics(config)
    report = SimReport(
        n=config.n, k=config.k, mode=config.mode, parallelism=config.P,
        stages=pl.S, radices=list(pl.radices), iterations=met.iterations,
        cycles_model=met.cycles_model, cycles_observed=observed,
        conflicts=audit.conflicts, utilization=met.utilization,
        max_abs_error=err, output_permutation=list(pl.output_perm.map),
        lanes=met.lanes, fill_latency=pl.fill_latency,
        w_per_stage=[st.w if config.mode == PIPELINE else [st.w, st.w_tilde]
                     for st in pl.stages],
        sigma3=[[list(step.as_tuple()) for step in st.steps] for st in pl.stages],
        flagged=pl.flagged, batches=len(xs),
    )
    out = raw[0] if np.asarray(x).ndim == 1 else raw
    return out, report
