"""divwin: exact divisor-in-short-interval statistics.

Counts, for every n up to a bound x, the divisors of n falling in a window
(y, z], together with the derived window parameters, the asymptotic
envelopes they feed, and a six-way classification of the integers carrying
at least two window divisors.
"""

from .classify import ClassContext, ClassCounts, PairBucket, classify, classify_all, pair_bucket
from .errors import (
    ConfigError,
    ConsistencyError,
    DivwinError,
    DomainError,
    ManifestMismatchError,
    OutOfRangeError,
)
from .oracle import ProbeResult, histogram_naive, probe_lemma1, probe_lemma2, probe_lemma3, tau_naive
from .params import (
    DerivedParams,
    Window,
    derive,
    envelope_h,
    envelope_ratio,
    f_hall,
    hall_prediction,
    q_function,
    stirling_balance,
    xi_to_z,
    z0,
    z_sub_h,
)
from .arith import (
    Factorization,
    PairParts,
    bar_omega,
    bar_omega_in,
    big_omega_in,
    divisors_in_window,
    factorize,
    in_p_star,
    omega_in,
    pair_decompose,
)
from .sieve import (
    Checkpoint,
    SegmentResult,
    SieveConfig,
    TauHistogram,
    build_prime_table,
    first_moment,
    run,
    sieve_segment,
)

__version__ = "0.1.0"
