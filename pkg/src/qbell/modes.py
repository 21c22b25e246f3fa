"""OAM mode bookkeeping and the CGLMP analyser bases.

Each party measures in one of two Fourier-type bases.  In the computational
basis ``|j>`` (j = 0..d-1) Alice's outcome ``v`` for setting ``a`` is

    |v>_a = d^{-1/2} sum_j exp[2 pi i j (v + alpha_a) / d] |j>

and Bob's outcome ``w`` for setting ``b`` is

    |w>_b = d^{-1/2} sum_j exp[2 pi i j (-w + beta_b) / d] |j>

with alpha = (0, 1/2) and beta = (1/4, -1/4).  The computational index is tied
to the OAM number ``ell`` through :class:`ModeMap`: the signal photon uses
ascending ``ell`` and the idler photon descending ``ell`` so that
``|ell> (x) |-ell> = |j, j>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ContractError, SizeError
from .numerics import MAX_QUDIT_DIM

ALPHA = (0.0, 0.5)
BETA = (0.25, -0.25)
ALICE = "A"
BOB = "B"


def ell_list(d: int) -> tuple[int, ...]:
    """OAM indices used for a d-dimensional test, ascending; ell=0 is skipped for even d."""
    if d % 2:
        h = (d - 1) // 2
        return tuple(range(-h, h + 1))
    h = d // 2
    return tuple(l for l in range(-h, h + 1) if l != 0)


def _check_dim(d: int, lo: int = 2, hi: int = MAX_QUDIT_DIM) -> int:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise SizeError(f"dimension must be an integer, got {d!r}")
    if not lo <= d <= hi:
        raise SizeError(f"dimension d={d} outside supported range [{lo}, {hi}]")
    return int(d)


@dataclass(frozen=True)
class DimensionSpec:
    d: int
    ell: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "d", _check_dim(self.d))
        object.__setattr__(self, "ell", ell_list(self.d))

    @property
    def parity(self) -> str:
        return "odd" if self.d % 2 else "even"


@dataclass(frozen=True)
class ModeMap:
    """Bijections between OAM number and computational index for both photons."""

    d: int
    signal_j_of_ell: dict
    idler_j_of_ell: dict

    @property
    def signal_ell_of_j(self) -> tuple[int, ...]:
        inv = {j: l for l, j in self.signal_j_of_ell.items()}
        return tuple(inv[j] for j in range(self.d))

    @property
    def idler_ell_of_j(self) -> tuple[int, ...]:
        inv = {j: l for l, j in self.idler_j_of_ell.items()}
        return tuple(inv[j] for j in range(self.d))

    def j_of_ell(self, party: str) -> dict:
        return self.signal_j_of_ell if party == ALICE else self.idler_j_of_ell

    def g(self, ell: int) -> int:
        """Phase index of mode ``ell`` in the angle parametrisation (the signal index)."""
        return self.signal_j_of_ell[ell]


@lru_cache(maxsize=None)
def mode_map(d: int) -> ModeMap:
    d = _check_dim(d)
    ells = ell_list(d)
    signal = {l: j for j, l in enumerate(ells)}
    idler = {l: signal[-l] for l in ells}
    return ModeMap(d, signal, idler)


@dataclass(frozen=True)
class AnalyserSetting:
    party: str
    setting: int
    outcome: int

    def __post_init__(self):
        if self.party not in (ALICE, BOB):
            raise ContractError(f"party must be 'A' or 'B', got {self.party!r}")
        if self.setting not in (0, 1):
            raise ContractError(f"setting must be 0 or 1, got {self.setting!r}")
        if self.outcome < 0:
            raise ContractError(f"outcome must be nonnegative, got {self.outcome}")

    @property
    def offset(self) -> float:
        return ALPHA[self.setting] if self.party == ALICE else BETA[self.setting]

    def theta(self, d: int) -> float:
        """Mode-analyser angle: (v + a/2) 2pi/d for Alice, (-w + (-1)^b/4) 2pi/d for Bob."""
        if self.party == ALICE:
            return (self.outcome + self.setting / 2) * 2 * np.pi / d
        return (-self.outcome + (-1) ** self.setting / 4) * 2 * np.pi / d


def _as_dim(spec) -> int:
    return spec.d if isinstance(spec, DimensionSpec) else _check_dim(spec)


def analyser_state(spec, s: AnalyserSetting) -> np.ndarray:
    """Analyser basis vector in the computational basis ``|j>``."""
    d = _as_dim(spec)
    if s.outcome >= d:
        raise ContractError(f"outcome {s.outcome} out of range for d={d}")
    sign = 1 if s.party == ALICE else -1
    j = np.arange(d)
    return np.exp(2j * np.pi / d * j * (sign * s.outcome + s.offset)) / np.sqrt(d)


@lru_cache(maxsize=None)
def _basis_tables(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Stacked analyser vectors: ``alice[a, v, :]`` and ``bob[b, w, :]``."""
    alice = np.array([[analyser_state(d, AnalyserSetting(ALICE, a, v)) for v in range(d)] for a in (0, 1)])
    bob = np.array([[analyser_state(d, AnalyserSetting(BOB, b, w)) for w in range(d)] for b in (0, 1)])
    alice.setflags(write=False)
    bob.setflags(write=False)
    return alice, bob


def analyser_bases(d: int) -> tuple[np.ndarray, np.ndarray]:
    return _basis_tables(_check_dim(d))


def to_oam(vec_j: np.ndarray, d: int, party: str) -> np.ndarray:
    """Re-index a computational-basis vector by ascending ell for the given photon."""
    jmap = mode_map(d).j_of_ell(party)
    return np.array([vec_j[jmap[l]] for l in ell_list(d)])


def from_oam(vec_ell: np.ndarray, d: int, party: str) -> np.ndarray:
    jmap = mode_map(d).j_of_ell(party)
    out = np.empty(d, dtype=np.asarray(vec_ell).dtype)
    for l, amp in zip(ell_list(d), vec_ell):
        out[jmap[l]] = amp
    return out


def analyser_state_oam(spec, s: AnalyserSetting) -> np.ndarray:
    """``analyser_state`` expressed over the photon's OAM modes (ascending ell)."""
    d = _as_dim(spec)
    return to_oam(analyser_state(d, s), d, s.party)


def angle_state(theta: float, d: int) -> np.ndarray:
    """Mode-analyser state d^{-1/2} sum_ell exp[i theta g(ell)] |ell>, ascending ell.

    Alice's analyser states are exactly ``angle_state(theta_A)``.  Bob's analyser
    state for angle theta_B equals ``angle_state(-theta_B)`` up to a global phase,
    because the idler index runs opposite to ell.
    """
    mm = mode_map(d)
    g = np.array([mm.g(l) for l in ell_list(d)])
    return np.exp(1j * theta * g) / np.sqrt(d)
