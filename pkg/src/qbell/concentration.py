"""Procrustean entanglement concentration with local diagonal filters.

A filter is a diagonal matrix ``o`` on one photon's computational basis.  The
success branch of the two-outcome measurement is O1 = o_A (x) o_B; the
failure branch O2 is fixed (up to unitary freedom) by O1^dag O1 + O2^dag O2 = 1
and leaves the vacuum, so it is never propagated as a state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bell import s_from_table, probability_table, subspace_bell_value
from .errors import ContractError, ZeroProbabilityError
from .modes import ell_list
from .numerics import (
    check_density_matrix,
    eig_hermitian,
    random_separable_state,
)
from .spdc import REFERENCE_GAMMA, ReferenceState

# (1.00, 0.97, ..., 0.97) listed by ascending ell for d = 11
PRESET_FILTER_D11 = (1.00, 0.97, 0.94, 0.92, 0.91, 0.90, 0.91, 0.92, 0.93, 0.95, 0.97)
ZERO_SUCCESS_TOL = 1e-14


@dataclass(frozen=True)
class FilterSpec:
    """Per-arm diagonal filter amplitudes, indexed by j (ascending ell of the signal mode set)."""

    d: int
    diag_a: np.ndarray
    diag_b: np.ndarray
    gamma: float | None = None

    def __post_init__(self):
        for name in ("diag_a", "diag_b"):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != (self.d,):
                raise ContractError(f"{name} must have length {self.d}, got shape {v.shape}")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ContractError(f"{name} entries must be finite and nonnegative")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def symmetric(cls, diag, gamma=None) -> "FilterSpec":
        diag = np.asarray(diag, dtype=float)
        return cls(len(diag), diag, diag, gamma)

    @classmethod
    def identity(cls, d: int) -> "FilterSpec":
        return cls.symmetric(np.ones(d))

    def operator(self) -> np.ndarray:
        """O1 = diag(diag_a) (x) diag(diag_b) on the d^2 product space."""
        return np.diag(np.kron(self.diag_a, self.diag_b))

    def to_json(self) -> dict:
        if not np.array_equal(self.diag_a, self.diag_b):
            return {"d": self.d, "gamma": self.gamma, "diag": self.diag_a.tolist(), "diag_b": self.diag_b.tolist()}
        return {"d": self.d, "gamma": self.gamma, "diag": self.diag_a.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FilterSpec":
        diag = obj["diag"]
        return cls(int(obj["d"]), diag, obj.get("diag_b", diag), obj.get("gamma"))


def preset_filter_d11() -> FilterSpec:
    return FilterSpec.symmetric(PRESET_FILTER_D11, REFERENCE_GAMMA)


def design_filter(spectrum: ReferenceState) -> FilterSpec:
    """Identical per-arm filters sqrt(c_min / c_j) that equalise the pair amplitudes."""
    c = np.asarray(spectrum.coeffs, dtype=float)
    ells = ell_list(spectrum.d)
    for j, cj in enumerate(c):
        if not cj > 0:
            raise ZeroProbabilityError(f"mode ell={ells[j]} has amplitude {cj}; cannot equalise")
    o = np.sqrt(c.min() / c)
    o = o / o.max()
    return FilterSpec(spectrum.d, o, o.copy(), spectrum.gamma)


@dataclass(frozen=True)
class FilterOutcome:
    filtered_state: np.ndarray
    success_probability: float


def _as_density(state, d: int | None = None) -> np.ndarray:
    if isinstance(state, ReferenceState):
        return state.density()
    rho = np.asarray(state)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    return rho


def apply_filter(state, f: FilterSpec, validate: bool = True) -> FilterOutcome:
    """Condition ``state`` on the filter's success outcome and renormalise."""
    rho = _as_density(state)
    if rho.shape != (f.d * f.d, f.d * f.d):
        raise ContractError(f"state of dimension {rho.shape[0]} does not match filter on d={f.d}")
    if validate:
        check_density_matrix(rho)
    o1 = np.kron(f.diag_a, f.diag_b)
    out = o1[:, None] * rho * o1[None, :]
    p = float(np.real(np.trace(out)))
    if p <= ZERO_SUCCESS_TOL:
        raise ZeroProbabilityError("filter annihilates the state (success probability 0)")
    out = out / p
    return FilterOutcome(0.5 * (out + out.conj().T), min(p, 1.0))


def apply_filter_pure(state: ReferenceState, f: FilterSpec) -> tuple[ReferenceState, float]:
    """Pure-state shortcut for diagonal reference states."""
    amp = f.diag_a * f.diag_b * state.coeffs
    p = float(np.sum(amp**2))
    if p <= ZERO_SUCCESS_TOL:
        raise ZeroProbabilityError("filter annihilates the state (success probability 0)")
    return ReferenceState(state.d, amp, "filtered", state.gamma), p


def completeness_certificate(f: FilterSpec, tol: float = 1e-12) -> np.ndarray:
    """Return O2^dag O2 = 1 - O1^dag O1 after checking it is a valid POM element."""
    for name, v in (("diag_a", f.diag_a), ("diag_b", f.diag_b)):
        if np.any(v > 1 + tol):
            raise ContractError(f"completeness violated: {name} has entry {v.max():.6g} > 1")
    o1 = f.operator()
    o2 = np.eye(f.d * f.d) - o1.T @ o1
    w = eig_hermitian(o2).eigenvalues
    if w.min() < -tol or w.max() > 1 + tol:
        raise ContractError(f"O2^dag O2 eigenvalues outside [0, 1]: [{w.min():.3e}, {w.max():.3e}]")
    return o2


def random_filter(d: int, rng: np.random.Generator, same_arms: bool = False) -> FilterSpec:
    da = rng.uniform(0, 1, d)
    da /= da.max()
    if same_arms:
        return FilterSpec(d, da, da.copy())
    db = rng.uniform(0, 1, d)
    db /= db.max()
    return FilterSpec(d, da, db)


@dataclass(frozen=True)
class SeparabilityReport:
    d: int
    n_trials: int
    max_s: float
    max_s_by_k: dict
    violations: int


def separability_preservation_test(n_trials: int, d: int, seed: int = 0, tol: float = 1e-9) -> SeparabilityReport:
    """Filter random separable states and record the largest S_k (k <= d) seen."""
    if d > 6:
        raise ContractError(f"separability sweep limited to d <= 6 for runtime, got {d}")
    rng = np.random.default_rng(seed)
    best = {k: -np.inf for k in range(2, d + 1)}
    violations = 0
    for _ in range(n_trials):
        rho = random_separable_state(d, rng)
        for candidate in (rho, apply_filter(rho, random_filter(d, rng), validate=False).filtered_state):
            for k in range(2, d + 1):
                if k == d:
                    s = s_from_table(probability_table(candidate, d)).s
                else:
                    s, w = subspace_bell_value(candidate, d, k)
                    if w <= ZERO_SUCCESS_TOL:
                        continue
                best[k] = max(best[k], s)
                violations += s > 2 + tol
    return SeparabilityReport(d, n_trials, max(best.values()), best, violations)


def save_filter_json(f: FilterSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(f.to_json(), fh, indent=2)
