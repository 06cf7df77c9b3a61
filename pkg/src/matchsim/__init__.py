"""Deferred-acceptance simulation for uniformly random matching markets."""

from .analysis import (
    RankSummary,
    Thresholds,
    chernoff_lower,
    chernoff_upper,
    count_likes,
    phi,
    reception_histogram,
    reference_curves,
    summarize,
)
from .engine import (
    DAOutcome,
    DeferredAcceptance,
    MarketConfig,
    ProposalEvent,
    StopRule,
    popular_count,
    replay,
    run_da,
)
from .errors import ContractViolation, ExhaustedError, InstanceTooLarge, IntegrityError
from .oracle import StableSet, blocking_pairs, check_lattice, enumerate_stable
from .prefs import (
    ExplicitPreferences,
    HospitalRankState,
    LazyPermutationState,
    freeze,
    sample_explicit,
)
from .rng import SeedSpec, derive_stream, uniform_below

__version__ = "0.1.0"
