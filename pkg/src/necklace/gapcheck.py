"""Non-resonance certificates for the shifted operators ``-Δ - ω²k² + α``.

Everything is evaluated at the band edges ``l ∈ {0, 1/2}``: ``√λ_m(l)`` is
monotone in ``a(l)``, and ``a`` is monotone on ``[0, 1/2]``, so the
infimum over ``l`` of a distance to a fixed level sits at one of the two
endpoints (or is zero when the band straddles the level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CertificationError
from .spectrum import A_HALF, DELTA0

_EDGES = (0.0, 0.5)
_A_EDGE = (0.0, A_HALF)


@dataclass(frozen=True)
class FrequencyConfig:
    """``ω = k0/2``, harmonics ``k ∈ κℤ_odd`` with ``|k| ≤ K``."""

    k0: int = 1
    kappa: int = 1
    alpha: float = 0.0
    A: float | None = None
    p: float = 3.0
    K: int | None = None

    def __post_init__(self):
        if self.k0 < 1 or self.k0 % 2 == 0:
            raise ValueError("k0 must be an odd positive integer")
        if self.kappa < 1 or self.kappa % 2 == 0:
            raise ValueError("kappa must be an odd positive integer")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.A is None:
            object.__setattr__(self, "A", float(self.alpha))
        if self.A < self.alpha:
            raise ValueError("A must be >= alpha")
        if self.p <= 1:
            raise ValueError("p must be > 1")
        if self.K is None:
            object.__setattr__(self, "K", self.kappa)
        if self.K % self.kappa or (self.K // self.kappa) % 2 == 0:
            raise ValueError("K must be an odd multiple of kappa")

    @classmethod
    def with_harmonics(cls, J: int, **kw) -> "FrequencyConfig":
        kappa = kw.get("kappa", 1)
        return cls(K=kappa * (2 * J - 1), **kw)

    @property
    def omega(self) -> float:
        return self.k0 / 2

    @property
    def num_harmonics(self) -> int:
        return (self.K // self.kappa + 1) // 2

    @property
    def harmonics(self) -> np.ndarray:
        """Positive retained ``k = κ j`` with ``j = 1, 3, …, 2J-1``."""
        return self.kappa * np.arange(1, 2 * self.num_harmonics, 2)

    @property
    def delta0(self) -> float:
        return DELTA0

    def to_dict(self) -> dict:
        return {"k0": self.k0, "kappa": self.kappa, "alpha": self.alpha, "A": self.A,
                "p": self.p, "K": self.K}


@dataclass
class GapCertificate:
    delta_star: float
    delta: float | None
    delta0: float
    worst_pair: dict
    pairs: list = field(repr=False)
    k_enum: int = 0
    tail_bound: float = math.inf
    k_tail: int = 0
    coverage: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.delta_star > 0 and (self.delta is None or self.delta > 0)

    def to_dict(self) -> dict:
        return {"delta_star": self.delta_star, "delta": self.delta, "delta0": self.delta0,
                "worst_pair": self.worst_pair, "certified": self.certified,
                "k_enum": self.k_enum, "k_tail": self.k_tail, "tail_bound": self.tail_bound,
                "coverage": self.coverage}


def _sqrt_band(m: int, a: float) -> float:
    return abs(m + a)


def _pair_distance(m, k, cfg: FrequencyConfig):
    """``min_l |λ_m(l) - ω²k² + α|`` and the minimizing ``l``."""
    vals = [_sqrt_band(m, a) ** 2 - cfg.omega ** 2 * k * k + cfg.alpha for a in _A_EDGE]
    if vals[0] * vals[1] <= 0:
        # the band crosses the level; locate l for the report
        return 0.0, float("nan")
    i = int(np.argmin(np.abs(vals)))
    return abs(vals[i]), _EDGES[i]


def tail_bounds(k: int, cfg: FrequencyConfig):
    """Exact per-case worst values over ``m`` and ``l`` at harmonic ``k``.

    Case 1 (``|m| ≥ (kk0+1)/2``) and case 2 (``|m| ≤ (kk0-1)/2``); both
    increase with ``k``.
    """
    K = k * cfg.k0
    d0 = DELTA0
    case1 = K * d0 / 2 + d0 * d0 / 4 + cfg.alpha
    case2 = K * d0 / 2 - d0 * d0 / 4 - cfg.alpha
    return case1, case2


def delta_star(cfg: FrequencyConfig, max_k: int | None = None) -> GapCertificate:
    """Infimum of ``|λ_m(l) - ω²k² + α|`` over ``m ∈ ℤ``, ``l``, ``k ∈ κℤ_odd``.

    Enumerates ``k`` until the case bounds of the next harmonic exceed the
    enumerated minimum, so the returned value is the exact infimum.
    A value of 0 flags resonance; nothing is raised.
    """
    pairs = []
    best = math.inf
    worst = None
    k = cfg.kappa
    cap = max_k or 10 ** 6
    while True:
        mmax = int(math.ceil(cfg.omega * k)) + 2
        for m in range(-mmax, mmax + 1):
            d, l = _pair_distance(m, k, cfg)
            pairs.append({"m": m, "k": k, "l": l, "distance": d})
            if d < best:
                best, worst = d, {"m": m, "k": k, "l": l}
        k_next = k + 2 * cfg.kappa
        tail = min(tail_bounds(k_next, cfg))
        if tail >= best and tail > 0 or k_next > cap:
            break
        k = k_next
    return GapCertificate(
        delta_star=best, delta=None, delta0=DELTA0, worst_pair=worst, pairs=pairs,
        k_enum=k, tail_bound=tail, k_tail=k_next,
        coverage={"enumerated": f"k <= {k}", "tail": f"k >= {k_next} via case bounds"},
    )


def delta_sqrt(cfg: FrequencyConfig, n_enum: int = 20) -> float:
    """Lower bound for ``inf |√λ_m(l) - √(ω²k² - α)|`` over ``|k| > K``.

    ``n_enum`` harmonics beyond ``K`` are enumerated; the remainder is covered
    by the case bounds (case 1 decreases to δ0/2, case 2 increases towards it).
    """
    k_first = cfg.K + 2 * cfg.kappa
    if cfg.omega ** 2 * k_first ** 2 <= cfg.alpha:
        raise ValueError("omega^2 k^2 <= alpha for a harmonic beyond K")
    best = math.inf
    k = k_first
    for _ in range(n_enum):
        root = math.sqrt(cfg.omega ** 2 * k * k - cfg.alpha)
        mmax = int(math.ceil(root)) + 2
        for m in range(-mmax, mmax + 1):
            vals = [_sqrt_band(m, a) - root for a in _A_EDGE]
            d = 0.0 if vals[0] * vals[1] <= 0 else min(abs(v) for v in vals)
            best = min(best, d)
        k += 2 * cfg.kappa
    K = k * cfg.k0
    case2 = math.sqrt(K * K / 4 - cfg.alpha) - ((K - 1) / 2 + A_HALF)
    return min(best, DELTA0 / 2, case2)


def sufficient_inequalities(kappa: int, k0: int, A: float) -> dict:
    """The three sufficient inequalities of the large-κ argument, with A in place of α."""
    d0 = DELTA0
    xi = 1 - 4 * A / (kappa * kappa * k0 * k0)
    if xi <= 0:
        return {"i": False, "ii": False, "iii": False}
    shift = A / (kappa * math.sqrt(xi))
    return {
        "i": shift <= d0 / 2,
        "ii": kappa * d0 - 0.5 - A >= kappa * d0 / 2,
        "iii": 1 - 2 * A_HALF - shift >= d0 / 2,
    }


def minimal_kappa(k0: int, A: float, alpha: float = 0.0, kappa_max: int = 100001) -> int:
    """Smallest odd κ satisfying the sufficient inequalities, checked by ``delta_star``."""
    if not A >= alpha >= 0:
        raise ValueError("need A >= alpha >= 0")
    for kappa in range(1, kappa_max + 1, 2):
        if all(sufficient_inequalities(kappa, k0, A).values()):
            cert = delta_star(FrequencyConfig(k0=k0, kappa=kappa, alpha=alpha, A=A))
            if cert.delta_star <= 0:
                raise CertificationError(f"kappa={kappa} passes the inequalities but resonates")
            return kappa
    raise ValueError("no admissible kappa below kappa_max")


def smallest_certified_kappa(k0: int, alpha: float, kappa_max: int = 10001) -> int:
    """Smallest odd κ with ``delta_star > 0`` found by direct scan."""
    for kappa in range(1, kappa_max + 1, 2):
        if delta_star(FrequencyConfig(k0=k0, kappa=kappa, alpha=alpha)).delta_star > 0:
            return kappa
    raise ValueError("no certified kappa below kappa_max")


def classify_mode(cfg: FrequencyConfig, m: int, k: int) -> str:
    """Sign of ``λ_m(l) - ω²k² + α`` (constant in ``l`` for certified configs)."""
    K = abs(k) * cfg.k0
    sign = "+" if 2 * abs(m) >= K + 1 else "-"
    for a in _A_EDGE:
        d = _sqrt_band(m, a) ** 2 - cfg.omega ** 2 * k * k + cfg.alpha
        if (d > 0) != (sign == "+") or d == 0:
            raise CertificationError(
                f"mode (m={m}, k={k}) classified {sign} but band edge value is {d:.3e}")
    return sign
