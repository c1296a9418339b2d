"""Window parameter algebra and asymptotic envelopes.

A window is the real interval (y, z] together with a count bound x.  Its
width is measured on a logarithmic ladder: eta = log(z/y), beta with
eta = (log y)^(-beta), and the normalized coordinate xi with
beta = log 4 - 1 - xi / sqrt(loglog y).  xi = 0 sits at the critical
width z = z0(y); xi maximal sits at z = e*y.  All logarithms are natural,
and "log2" always means the iterated natural log (log log), never base 2.

Everything here is a pure function of its arguments and safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, OutOfRangeError

LOG4 = math.log(4.0)

# Absolute slack for boundary classification: windows constructed to land
# exactly on xi = 0 or beta = 0 only do so to ~1e-12 in floats.
_EDGE_TOL = 1e-9

# Upward nudge applied before flooring float products, so that a value that
# is an integer up to rounding error lands on that integer.
_FLOOR_NUDGE = 1e-12


def nudged_floor(value: float) -> int:
    return math.floor(value + _FLOOR_NUDGE)


def iterated_log(value: float) -> float:
    """log log value; requires value > e so the result is positive."""
    if value <= math.e:
        raise DomainError(f"iterated log needs value > e, got {value}")
    return math.log(math.log(value))


@dataclass(frozen=True)
class Window:
    """A count bound x and the divisor interval (y, z].

    Only the integers in (y, z] matter for divisibility; the real y and z
    are kept for the derived parameters.  Range flags are advisory, never
    errors.
    """

    x: int
    y: float
    z: float

    def __post_init__(self) -> None:
        if self.x < 1:
            raise DomainError(f"x must be a positive integer, got {self.x}")
        if not self.y > 1.0:
            raise DomainError(f"y must exceed 1, got {self.y}")
        if not self.z > self.y:
            raise DomainError(f"need z > y, got y={self.y}, z={self.z}")

    @property
    def d_lo(self) -> int:
        """Smallest integer divisor candidate in (y, z]."""
        return math.floor(self.y) + 1

    @property
    def d_hi(self) -> int:
        """Largest integer divisor candidate in (y, z]."""
        return math.floor(self.z)

    @property
    def is_empty(self) -> bool:
        return self.d_hi < self.d_lo

    @property
    def paper_xy_range(self) -> bool:
        """True iff 10 <= y <= sqrt(x)."""
        return 10.0 <= self.y <= math.sqrt(self.x)

    @property
    def paper_z_range(self) -> bool:
        """True iff z0(y) <= z <= e*y."""
        return z0(self.y) <= self.z <= math.e * self.y

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z}


@dataclass(frozen=True)
class DerivedParams:
    """Closed-form window parameters: eta, beta, xi, lambda and friends.

    cap_k is the prime-multiplicity budget floor(lambda * loglog z); k0 and
    z_threshold are the eps-dependent cutoffs (2 - 3*eps)*loglog z and
    exp((log z)^(1 - 4*eps)) used by the classifier.
    """

    eps: float
    eta: float
    log_y: float
    log_z: float
    log2_y: float
    log2_z: float
    beta: float
    xi: float
    lam: float
    q_lambda: float
    cap_k: int
    k0: float
    z_threshold: float
    in_range: bool

    @property
    def xi_bound(self) -> float:
        """Upper end of the admissible xi interval, (log 4 - 1)*sqrt(loglog y)."""
        return (LOG4 - 1.0) * math.sqrt(self.log2_y)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "eta": self.eta,
            "log_y": self.log_y,
            "log_z": self.log_z,
            "log2_y": self.log2_y,
            "log2_z": self.log2_z,
            "beta": self.beta,
            "xi": self.xi,
            "lambda": self.lam,
            "q_lambda": self.q_lambda,
            "cap_k": self.cap_k,
            "k0": self.k0,
            "z_threshold": self.z_threshold,
            "in_range": self.in_range,
        }


def q_function(w: float) -> float:
    """Rate function Q(w) = w log w - w + 1 (the integral of log t from 1 to w).

    Q(1) = 0 exactly; Q is defined by the same formula on all of (0, inf).
    """
    if w <= 0.0:
        raise DomainError(f"q_function needs w > 0, got {w}")
    return w * math.log(w) - w + 1.0


def f_hall(xi: float) -> float:
    """Gaussian window weight: (1/sqrt(pi)) * integral of exp(-u^2) up to xi/log 4.

    Total function of xi, nondecreasing, with limits 0 and 1.
    """
    return 0.5 * (1.0 + math.erf(xi / LOG4))


def z0(y: float) -> float:
    """Critical window top y * exp((log y)^(1 - log 4)).

    Below this width almost every counted integer has exactly one window
    divisor; above it, several divisors become common.
    """
    if y <= 1.0:
        raise DomainError(f"z0 needs y > 1, got {y}")
    return y * math.exp(math.log(y) ** (1.0 - LOG4))


def xi_to_z(y: float, xi: float) -> float:
    """Window top z with normalized width coordinate xi; inverse of derive.

    z = y * exp(exp(xi*sqrt(loglog y)) / (log y)^(log 4 - 1)); xi = 0 gives
    z0(y) and xi at its upper bound gives e*y.
    """
    l2y = iterated_log(y)
    width = math.exp(xi * math.sqrt(l2y)) / math.log(y) ** (LOG4 - 1.0)
    return y * math.exp(width)


def z_sub_h(z: float, h: int) -> float:
    """Root ladder z^(exp(-h)); h = 0 returns z itself."""
    if z <= 1.0:
        raise DomainError(f"z_sub_h needs z > 1, got {z}")
    if h == 0:
        return z
    return math.exp(math.exp(-h) * math.log(z))


def derive(win: Window, eps: float = 0.01) -> DerivedParams:
    """Evaluate every derived parameter of a window.

    Out-of-range windows (xi < 0, i.e. z below z0, or beta < 0, i.e. z
    beyond e*y) are computed and reported through in_range, never rejected.
    """
    if not 0.0 < eps < 0.1:
        raise DomainError(f"eps must lie in (0, 0.1), got {eps}")
    if win.y <= math.e:
        raise DomainError(f"derive needs y > e, got y={win.y}")

    log_y = math.log(win.y)
    log_z = math.log(win.z)
    log2_y = math.log(log_y)
    log2_z = math.log(log_z)
    eta = math.log(win.z / win.y)
    beta = -math.log(eta) / log2_y
    sqrt_l2y = math.sqrt(log2_y)
    xi = (LOG4 - 1.0 - beta) * sqrt_l2y
    lam = (1.0 + beta) / math.log(2.0)
    cap_k = nudged_floor(lam * log2_z)
    in_range = -_EDGE_TOL <= xi <= (LOG4 - 1.0) * sqrt_l2y + _EDGE_TOL
    # far beyond the e*y edge (beta < -1) the rate function loses its
    # argument; out-of-range windows are flagged, never rejected
    q_lam = q_function(lam) if lam > 0.0 else math.nan
    return DerivedParams(
        eps=eps,
        eta=eta,
        log_y=log_y,
        log_z=log_z,
        log2_y=log2_y,
        log2_z=log2_z,
        beta=beta,
        xi=xi,
        lam=lam,
        q_lambda=q_lam,
        cap_k=cap_k,
        k0=(2.0 - 3.0 * eps) * log2_z,
        z_threshold=math.exp(log_z ** (1.0 - 4.0 * eps)),
        in_range=in_range,
    )


def envelope_h(win: Window, dp: DerivedParams) -> float:
    """Order-of-magnitude envelope beta*x / ((xi+1) * (log y)^Q(lambda)).

    No implied constant is applied.  Refuses out-of-range parameters: the
    comparison is only asserted for xi in its admissible interval.  At the
    beta = 0 edge the envelope degenerates to 0.
    """
    if not dp.in_range:
        raise OutOfRangeError(
            f"envelope only asserted for xi in [0, {dp.xi_bound:.6g}], got xi={dp.xi:.6g}"
        )
    beta = max(dp.beta, 0.0)
    return beta * win.x / ((dp.xi + 1.0) * math.exp(dp.q_lambda * dp.log2_y))


def envelope_ratio(dp: DerivedParams) -> float:
    """Predicted ceiling shape (xi + 1) / sqrt(loglog y) for the multi-divisor fraction."""
    if dp.log2_y <= 0.0:
        raise DomainError("envelope_ratio needs loglog y > 0")
    return (dp.xi + 1.0) / math.sqrt(dp.log2_y)


def stirling_balance(dp: DerivedParams, k: int) -> tuple[float, float]:
    """Both sides of the factorial balance at multiplicity k.

    Returns (lhs, rhs) with
        lhs = eta * (2 loglog z)^k / (k! * (log z)^2)
        rhs = 1 / ((log y)^Q(lambda) * sqrt(loglog y)).
    lhs is nondecreasing in k up to cap_k, and at k = cap_k the two sides
    agree within an absolute constant.  Factorials are handled in log space
    so cap_k of a hundred or more cannot overflow.
    """
    if not 0 <= k <= dp.cap_k:
        raise DomainError(f"k must lie in [0, {dp.cap_k}], got {k}")
    log_lhs = (
        math.log(dp.eta)
        + k * math.log(2.0 * dp.log2_z)
        - math.lgamma(k + 1.0)
        - 2.0 * dp.log2_z
    )
    log_rhs = -dp.q_lambda * dp.log2_y - 0.5 * math.log(dp.log2_y)
    return math.exp(log_lhs), math.exp(log_rhs)


def hall_prediction(first_moment: int, dp: DerivedParams) -> float:
    """Moment-weighted prediction f_hall(-xi) * sum of all window divisor counts.

    The caller is responsible for reporting whether x clears the validity
    threshold exp(log z * loglog z); this function applies the formula
    unconditionally.
    """
    if first_moment < 0:
        raise DomainError(f"first_moment must be nonnegative, got {first_moment}")
    return f_hall(-dp.xi) * first_moment


def hall_x_threshold(dp: DerivedParams) -> float:
    """Count bound above which the moment-weighted prediction is asserted."""
    exponent = dp.log_z * dp.log2_z
    return math.exp(exponent) if exponent < 709.0 else math.inf
