"""TX switching schedules and the firing-time matrix they imply."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import ConfigurationError, FeasibilityError

_REL = 1e-12


@dataclass(frozen=True)
class Timing:
    """Sounder timing constants (seconds) and dimensions.

    ``t0`` is the RX switch interval, ``t1`` the TX switch interval and
    ``T0`` the separation between MIMO snapshots.
    """

    t0: float = 620e-6 / 64
    t1: float = 620e-6 / 8
    T0: float = 620e-6
    M_T: int = 8
    M_R: int = 8
    M_f: int = 129
    T: int = 4

    def __post_init__(self):
        for name in ("M_T", "M_R", "M_f", "T"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        if min(self.t0, self.t1, self.T0) <= 0:
            raise ConfigurationError("switching intervals must be positive")
        if self.t1 < self.M_R * self.t0 * (1 - _REL):
            raise FeasibilityError(
                f"TX dwell t1={self.t1:g}s cannot hold an RX sweep of {self.M_R}x{self.t0:g}s")
        if self.T0 < self.M_T * self.t1 * (1 - _REL):
            raise FeasibilityError(
                f"snapshot separation T0={self.T0:g}s cannot hold a TX sweep of "
                f"{self.M_T}x{self.t1:g}s")

    @classmethod
    def back_to_back(cls, T0=620e-6, M_T=8, M_R=8, M_f=129, T=4) -> "Timing":
        """Switching that fills the snapshot: t1 = T0/M_T, t0 = t1/M_R."""
        t1 = T0 / M_T
        return cls(t0=t1 / M_R, t1=t1, T0=T0, M_T=M_T, M_R=M_R, M_f=M_f, T=T)

    @property
    def nu_up(self) -> float:
        """Target Doppler design limit M_T / (2 T0)."""
        return self.M_T / (2 * self.T0)

    def to_dict(self) -> dict:
        return {"t0_s": self.t0, "t1_s": self.t1, "T0_s": self.T0, "M_T": self.M_T,
                "M_R": self.M_R, "M_f": self.M_f, "T": self.T}

    @classmethod
    def from_dict(cls, d: dict) -> "Timing":
        try:
            return cls(t0=float(d["t0_s"]), t1=float(d["t1_s"]), T0=float(d["T0_s"]),
                       M_T=int(d["M_T"]), M_R=int(d["M_R"]), M_f=int(d["M_f"]), T=int(d["T"]))
        except KeyError as exc:
            raise ConfigurationError(f"timing block is missing key {exc}") from None


def check_feasible(S: np.ndarray) -> None:
    """Raise FeasibilityError unless every column is a permutation of 1..M_T."""
    S = np.asarray(S)
    if S.ndim != 2 or S.size == 0:
        raise FeasibilityError("schedule must be a non-empty M_T x T matrix")
    ref = np.arange(1, S.shape[0] + 1)
    for t in range(S.shape[1]):
        if not np.array_equal(np.sort(S[:, t]), ref):
            raise FeasibilityError(
                f"column {t + 1} of the schedule is not a permutation of 1..{S.shape[0]}")


@dataclass(frozen=True, eq=False)
class SwitchingSchedule:
    """Integer matrix S_T (M_T x T, 1-based slot indices) plus timing."""

    S: np.ndarray
    timing: Timing
    label: str = ""

    def __post_init__(self):
        S = np.array(self.S, dtype=np.int64)
        check_feasible(S)
        if S.shape != (self.timing.M_T, self.timing.T):
            raise ConfigurationError(
                f"schedule shape {S.shape} does not match timing "
                f"({self.timing.M_T}, {self.timing.T})")
        S.flags.writeable = False
        object.__setattr__(self, "S", S)

    def __eq__(self, other):
        return (isinstance(other, SwitchingSchedule) and self.timing == other.timing
                and np.array_equal(self.S, other.S))

    def __hash__(self):
        return hash((self.S.tobytes(), self.timing))

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.S == np.arange(1, self.S.shape[0] + 1)[:, None]))

    @property
    def eta(self) -> np.ndarray:
        return eta_from_schedule(self)

    def with_label(self, label: str) -> "SwitchingSchedule":
        return replace(self, label=label)


def eta_from_schedule(s: SwitchingSchedule) -> np.ndarray:
    """Firing time of TX antenna m in snapshot t (seconds), shape (M_T, T)."""
    tm = s.timing
    t = np.arange(tm.T)[None, :]
    return t * tm.M_T * tm.t1 + (s.S - 1) * tm.t1


def uniform_schedule(timing: Timing) -> SwitchingSchedule:
    S = np.tile(np.arange(1, timing.M_T + 1)[:, None], (1, timing.T))
    return SwitchingSchedule(S, timing, "uniform")


def dense_schedule(timing: Timing, divisor: float = 8,
                   compress_switching: bool = True) -> SwitchingSchedule:
    """Uniform pattern with snapshot separation T0 / divisor.

    When the TX sweep no longer fits the shortened snapshot, the switch
    intervals are compressed by the same factor if ``compress_switching``;
    otherwise a FeasibilityError is raised.
    """
    if divisor < 1:
        raise ConfigurationError("dense divisor must be >= 1")
    T0 = timing.T0 / divisor
    t0, t1 = timing.t0, timing.t1
    if T0 < timing.M_T * t1 * (1 - _REL):
        if not compress_switching:
            raise FeasibilityError(
                f"T0/{divisor:g} = {T0:g}s cannot hold a TX sweep of {timing.M_T}x{t1:g}s")
        t0, t1 = t0 / divisor, t1 / divisor
    dense = replace(timing, t0=t0, t1=t1, T0=T0)
    S = np.tile(np.arange(1, timing.M_T + 1)[:, None], (1, timing.T))
    return SwitchingSchedule(S, dense, "dense")


def random_schedule(timing: Timing, seed=None) -> SwitchingSchedule:
    """Independent uniformly random permutation per snapshot."""
    rng = np.random.default_rng(seed)
    S = np.column_stack([rng.permutation(timing.M_T) + 1 for _ in range(timing.T)])
    return SwitchingSchedule(S, timing, "random")


def neighborhood_size(M_T: int, T: int) -> int:
    """A = T * C(M_T, 2)."""
    return T * comb(M_T, 2)


@lru_cache(maxsize=None)
def _pairs(M_T: int):
    return tuple(combinations(range(M_T), 2))


def random_move(M_T: int, T: int, rng) -> tuple[int, int, int]:
    """Draw (column, row_a, row_b) uniformly over the A same-column swaps."""
    if M_T < 2:
        raise FeasibilityError("schedules with fewer than two TX antennas have no neighbours")
    pairs = _pairs(M_T)
    col = int(rng.integers(T))
    a, b = pairs[int(rng.integers(len(pairs)))]
    return col, a, b


def apply_swap(s: SwitchingSchedule, move) -> SwitchingSchedule:
    col, a, b = move
    S = s.S.copy()
    S[[a, b], col] = S[[b, a], col]
    return SwitchingSchedule(S, s.timing, s.label)


def neighbor_swap(s: SwitchingSchedule, rng) -> SwitchingSchedule:
    """Copy of ``s`` with two entries of one random column exchanged."""
    return apply_swap(s, random_move(s.timing.M_T, s.timing.T, rng))


def neighbors(s: SwitchingSchedule):
    """Iterate over all A neighbours of ``s``."""
    if s.timing.M_T < 2:
        raise FeasibilityError("schedules with fewer than two TX antennas have no neighbours")
    for col in range(s.timing.T):
        for a, b in _pairs(s.timing.M_T):
            yield apply_swap(s, (col, a, b))


def is_neighbor(s: SwitchingSchedule, s2: SwitchingSchedule) -> bool:
    """True when s2 differs from s by one swap within a single column."""
    diff = s.S != s2.S
    if diff.sum() != 2:
        return False
    rows, cols = np.nonzero(diff)
    return cols[0] == cols[1]
