"""Bit-true simulator of an adaptive hybrid radix-2^k FFT processor."""

from .banks import (
    AccessTrace,
    BankArray,
    CounterSchedule,
    audit_conflicts,
    next_schedule,
    read_batch,
    write_batch,
)
from .bitperm import (
    BitPermutation,
    IndexLayout,
    SwapStep,
    apply_perm,
    compose,
    reverse_segment,
    sigma1,
    sigma2,
    sigma3_step,
    sigma_hat,
    w_membased,
    w_pipeline,
)
from .errors import (
    ConfigurationError,
    ConflictError,
    DomainError,
    ModeUnsupportedError,
    NeedsNewProbeError,
    NumericError,
    SearchFailure,
)
from .mdc import Block, MdcConfig, RotatorKind, butterfly2, mdc_process_block, twiddle
from .oracle import dft_direct, fft_radix2, recover_output_order, search_sigma3_sequence
from .processor import (
    PlanConfig,
    SimReport,
    StagePlan,
    block_leading_indices,
    build_block,
    epsilon,
    metrics,
    plan,
    run,
    stage_radices,
    unscramble,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
