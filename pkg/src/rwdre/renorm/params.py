"""Scale parameters for the block analysis and the constants report.

The gamma recursion and the two large-C_0 conditions are evaluated
numerically.  At desk scale (C_0 = 2 or 3, small r) the large-C_0
conditions usually fail; that is reported, not enforced, because the
block measurements remain meaningful at any parameter point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model import ConfigError

#: largest block side the int64 kernels can index safely
MAX_DELTA = 2 ** 40

#: theta must satisfy (1 - e^-theta) - theta/2 >= theta/4
DEFAULT_THETA = 0.5


def const1_product(c0: int = 2, tol: float = 1e-15) -> float:
    """prod_{j>=1} [1 - c0^(-j/4)]^(-1), truncated once the factor is
    within tol of 1.  At c0=2 this is the worst case over c0 >= 2."""
    if c0 < 2:
        raise ConfigError(f"c0 must be >= 2, got {c0}")
    prod = 1.0
    j = 1
    while True:
        f = 1.0 / (1.0 - c0 ** (-j / 4.0))
        prod *= f
        if f - 1.0 < tol:
            return prod
        j += 1


def gamma_sequence(gamma0: float, c0: int, r_max: int) -> np.ndarray:
    """gamma_0 .. gamma_{r_max}: gamma_1 = gamma_0 and
    gamma_{r+1} = gamma_0 * prod_{j=1..r} [1 - c0^(-j/4)]^(-1).

    The recursion only makes sense while the values stay in (0, 1/2]
    (they are lower fractions of a mean); requesting a prefix that
    escapes that interval is an error naming the bound.  The strictest
    reading of the feasibility condition fixes the infinite product at
    base 2; that global form is reported by check_constants, while this
    function gates only the values it actually returns, so that small-c0
    desk runs with short prefixes remain constructible.
    """
    if not (0.0 < gamma0 <= 0.5):
        raise ConfigError(f"gamma0 must lie in (0, 1/2], got {gamma0!r}")
    if c0 < 2:
        raise ConfigError(f"c0 must be >= 2, got {c0}")
    if r_max < 0:
        raise ConfigError(f"r_max must be >= 0, got {r_max}")
    out = np.empty(r_max + 1, dtype=np.float64)
    out[0] = gamma0
    prod = 1.0
    for r in range(1, r_max + 1):
        if r >= 2:
            prod *= 1.0 / (1.0 - c0 ** (-(r - 1) / 4.0))
        out[r] = gamma0 * prod
        if out[r] > 0.5:
            raise ConfigError(
                f"gamma_{r} = {out[r]:.6g} exceeds 1/2 at c0={c0}; the "
                f"feasibility product bound gamma0 * prod [1-c0^(-j/4)]^-1 "
                f"<= 1/2 fails for this prefix")
    return out


@dataclass(frozen=True)
class RenormParams:
    """One scale of the block hierarchy.

    delta = c0^(6r) is the block side; gammas holds gamma_0..gamma_r.
    """

    c0: int
    gamma0: float
    r: int
    mu: float
    gammas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.c0 < 2 or int(self.c0) != self.c0:
            raise ConfigError(f"c0 must be an integer >= 2, got {self.c0!r}")
        if self.r < 0 or int(self.r) != self.r:
            raise ConfigError(f"r must be a nonnegative integer, got {self.r!r}")
        if not (self.mu >= 0.0 and math.isfinite(self.mu)):
            raise ConfigError(f"mu must be finite and >= 0, got {self.mu!r}")
        if int(self.c0) ** (6 * int(self.r)) > MAX_DELTA:
            raise ConfigError(
                f"delta = {self.c0}^(6*{self.r}) overflows the supported "
                f"block size {MAX_DELTA}")
        object.__setattr__(
            self, "gammas", gamma_sequence(self.gamma0, self.c0, self.r))

    @property
    def delta(self) -> int:
        """Block side c0^(6r), exact integer."""
        return int(self.c0) ** (6 * int(self.r))

    @property
    def gamma_r(self) -> float:
        return float(self.gammas[self.r])

    @property
    def q_len(self) -> int:
        """Side of the counting window, c0^r."""
        return int(self.c0) ** int(self.r)

    @property
    def u_threshold(self) -> float:
        """Bad-block particle threshold gamma_r * mu * c0^r.

        mu = 0 makes the literal threshold 0 and the strict comparison
        vacuous; the empty environment is treated as the mu -> 0 limit,
        where any window with zero particles is below threshold.
        """
        if self.mu == 0.0:
            return 0.5
        return self.gamma_r * self.mu * self.q_len

    @property
    def pedestal_threshold(self) -> float:
        """gamma_0 * mu * delta (the version used for the pedestal count)."""
        return self.gamma0 * self.mu * self.delta

    def to_dict(self) -> dict:
        return {"c0": self.c0, "gamma0": self.gamma0, "r": self.r,
                "mu": self.mu}

    @staticmethod
    def from_dict(obj: dict) -> "RenormParams":
        try:
            return RenormParams(c0=int(obj["c0"]),
                                gamma0=float(obj["gamma0"]),
                                r=int(obj["r"]), mu=float(obj["mu"]))
        except KeyError as exc:
            raise ConfigError(f"missing renorm key: {exc.args[0]}") from exc


def chernoff_bound(c: float, theta: float = DEFAULT_THETA) -> float:
    """Upper bound exp(theta*c/2 - c*(1 - e^-theta)) for
    P{Poisson(c) <= c/2}.

    Requires (1 - e^-theta) - theta/2 >= theta/4, which guarantees the
    exponent is <= -c*theta/4 < 0.
    """
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    if theta <= 0 or (1.0 - math.exp(-theta)) - theta / 2.0 < theta / 4.0:
        raise ValueError(
            f"theta={theta!r} violates (1-e^-theta) - theta/2 >= theta/4")
    return math.exp(theta * c / 2.0 - c * (1.0 - math.exp(-theta)))


def _const3_lhs_rhs(c0: int, r: int, c4: float):
    lhs = (c0 ** (-r / 2.0)
           - (1.0 - c4 * r * math.log(c0) / c0 ** r)
           * (1.0 - math.exp(-(c0 ** (-r / 2.0))))
           / (1.0 - c0 ** (-r / 4.0)))
    rhs = -0.5 * c0 ** (-3.0 * r / 4.0)
    return lhs, rhs


def _const4_log(c0: int, r: int, gamma0: float, mu: float) -> float:
    """log of 9*c0^(12(r+1))*exp(-gamma0*mu*c0^(r/4)/2); holds iff <= 0."""
    return (math.log(9.0) + 12.0 * (r + 1) * math.log(c0)
            - 0.5 * gamma0 * mu * c0 ** (r / 4.0))


def check_constants(params: RenormParams, c4: float, r_max: int,
                    c0_range=range(2, 65)) -> dict:
    """Report on the two large-C_0 conditions and the global feasibility
    product; never raises on a failed condition.

    c4 is an external input (it cannot be derived here).  Returns per-r
    verdicts for r = 1..r_max at the params' own c0, the first violated
    r per condition (None if none), and the minimal c0 in c0_range
    passing both conditions for all r <= r_max.
    """
    rows = []
    first_bad3 = None
    first_bad4 = None
    for r in range(1, r_max + 1):
        lhs, rhs = _const3_lhs_rhs(params.c0, r, c4)
        ok3 = lhs <= rhs
        log4 = _const4_log(params.c0, r, params.gamma0, params.mu)
        ok4 = log4 <= 0.0
        if not ok3 and first_bad3 is None:
            first_bad3 = r
        if not ok4 and first_bad4 is None:
            first_bad4 = r
        rows.append({"r": r, "const3_lhs": lhs, "const3_rhs": rhs,
                     "const3_ok": ok3, "const4_log": log4,
                     "const4_ok": ok4})
    minimal_c0 = None
    for c0 in c0_range:
        good = True
        for r in range(1, r_max + 1):
            lhs, rhs = _const3_lhs_rhs(c0, r, c4)
            if lhs > rhs or _const4_log(c0, r, params.gamma0,
                                        params.mu) > 0.0:
                good = False
                break
        if good:
            minimal_c0 = c0
            break
    prod2 = const1_product(2)
    return {
        "c0": params.c0,
        "gamma0": params.gamma0,
        "mu": params.mu,
        "c4": c4,
        "rows": rows,
        "first_violated_const3": first_bad3,
        "first_violated_const4": first_bad4,
        "minimal_c0_passing_both": minimal_c0,
        "feasibility_product_base2": prod2,
        "global_gamma_cap_ok": params.gamma0 * prod2 <= 0.5,
    }
