"""CGLMP Bell parameter, Bell operator and related spectra.

Joint probabilities are stored as an array ``p[a, b, v, w]`` giving
P(A_a = v, B_b = w).  The shorthand used throughout is

    P(A_a = B_b + k) = sum_j p[a, b, (j + k) mod d, j]
    P(B_b = A_a + k) = sum_j p[a, b, j, (j + k) mod d]

and S_d sums, for k = 0 .. [d/2] - 1 with weight 1 - 2k/(d-1), four
"positive" and four "negative" joint-outcome events.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._io import text_sink
from .errors import ContractError, SizeError
from .modes import analyser_bases, ell_list, mode_map
from .numerics import EigenDecomposition, check_density_matrix, eig_hermitian

MAX_BELL_DIM = 14
NORMALIZATION_TOL = 1e-9
# entries of the assembled operator below this are floating-point debris
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class ProbabilityTable:
    d: int
    p: np.ndarray
    renormalized: bool = False

    @classmethod
    def from_array(cls, p, d: int | None = None) -> "ProbabilityTable":
        """Build a table from raw weights (probabilities or counts), normalising per (a, b)."""
        p = np.array(p, dtype=float)
        d = p.shape[-1] if d is None else d
        if p.shape != (2, 2, d, d):
            raise ContractError(f"probability table must have shape (2, 2, {d}, {d}), got {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ContractError("probability table entries must be finite and nonnegative")
        totals = p.sum(axis=(2, 3))
        if np.any(totals <= 0):
            raise ContractError("a setting pair has zero total weight")
        renorm = bool(np.any(np.abs(totals - 1.0) > NORMALIZATION_TOL))
        if renorm:
            warnings.warn("probability table was not normalised per setting pair; renormalising", stacklevel=2)
        p = p / totals[:, :, None, None]
        p.setflags(write=False)
        return cls(d, p, renorm)


@dataclass(frozen=True)
class BellValue:
    d: int
    s: float
    sigma: float | None = None
    sigma_bootstrap: float | None = None


@dataclass(frozen=True)
class BellOperator:
    """Bell operator in the product basis |0,0>, |0,1>, ..., |d-1,d-1>."""

    d: int
    matrix: np.ndarray

    def expectation(self, rho: np.ndarray) -> float:
        return float(np.real(np.sum(self.matrix.T * rho)))

    def spectrum(self) -> EigenDecomposition:
        return _spectrum(self.d)


def _check_bell_dim(d: int) -> int:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or not 2 <= d <= MAX_BELL_DIM:
        raise SizeError(f"Bell dimension d={d!r} outside supported range [2, {MAX_BELL_DIM}]")
    return int(d)


def _weights(d: int) -> list[tuple[int, float]]:
    return [(k, 1 - 2 * k / (d - 1)) for k in range(d // 2)]


def product_basis_vectors(d: int) -> np.ndarray:
    """``u[a, b, v, w, :]`` = |v>_a (x) |w>_b in the product basis."""
    alice, bob = analyser_bases(d)
    return np.einsum("avi,bwj->abvwij", alice, bob).reshape(2, 2, d, d, d * d)


def probability_table(rho: np.ndarray, d: int) -> ProbabilityTable:
    """Born-rule joint probabilities of the analyser outcomes."""
    rho = np.asarray(rho)
    check_density_matrix(rho, d * d)
    u = product_basis_vectors(d)
    p = np.real(np.einsum("abvwi,ij,abvwj->abvw", u.conj(), rho, u))
    p = np.clip(p, 0.0, None)
    return ProbabilityTable.from_array(p, d)


def p_a_eq_b_plus(p: np.ndarray, a: int, b: int, k: int) -> float:
    """P(A_a = B_b + k)."""
    d = p.shape[-1]
    j = np.arange(d)
    return float(np.sum(p[a, b, (j + k) % d, j]))


def p_b_eq_a_plus(p: np.ndarray, a: int, b: int, k: int) -> float:
    """P(B_b = A_a + k)."""
    d = p.shape[-1]
    j = np.arange(d)
    return float(np.sum(p[a, b, j, (j + k) % d]))


def s_from_table(t: ProbabilityTable | np.ndarray) -> BellValue:
    p = t.p if isinstance(t, ProbabilityTable) else np.asarray(t, dtype=float)
    d = p.shape[-1]
    ab, ba = p_a_eq_b_plus, p_b_eq_a_plus
    s = 0.0
    for k, c in _weights(d):
        plus = ab(p, 0, 0, k) + ba(p, 1, 0, k + 1) + ab(p, 1, 1, k) + ba(p, 0, 1, k)
        minus = ab(p, 0, 0, -k - 1) + ba(p, 1, 0, -k) + ab(p, 1, 1, -k - 1) + ba(p, 0, 1, -k - 1)
        s += c * (plus - minus)
    return BellValue(d, float(s))


@lru_cache(maxsize=None)
def bell_coefficients(d: int) -> np.ndarray:
    """Coefficient tensor W with S_d = sum_{a,b,v,w} W[a,b,v,w] p[a,b,v,w]."""
    w = np.zeros((2, 2, d, d))
    v = np.arange(d)
    terms = lambda k: [  # noqa: E731
        (+1, "ab", 0, 0, k), (+1, "ba", 1, 0, k + 1), (+1, "ab", 1, 1, k), (+1, "ba", 0, 1, k),
        (-1, "ab", 0, 0, -k - 1), (-1, "ba", 1, 0, -k), (-1, "ab", 1, 1, -k - 1), (-1, "ba", 0, 1, -k - 1),
    ]
    for k, c in _weights(d):
        for sign, kind, a, b, shift in terms(k):
            if kind == "ab":
                w[a, b, (v + shift) % d, v] += sign * c
            else:
                w[a, b, v, (v + shift) % d] += sign * c
    w.setflags(write=False)
    return w


def _projector_sum(d: int, a: int, b: int, k: int, kind: str) -> np.ndarray:
    """P-hat(A_a = B_b + k) for kind 'ab', P-hat(B_b = A_a + k) for kind 'ba'."""
    alice, bob = analyser_bases(d)
    r = np.arange(d)
    if kind == "ab":
        u = np.einsum("ri,rj->rij", alice[a, (r + k) % d], bob[b, r]).reshape(d, d * d)
    else:
        u = np.einsum("ri,rj->rij", alice[a, r], bob[b, (r + k) % d]).reshape(d, d * d)
    return u.T @ u.conj()


@lru_cache(maxsize=None)
def _bell_matrix(d: int) -> np.ndarray:
    m = np.zeros((d * d, d * d), dtype=complex)
    P = _projector_sum
    for k, c in _weights(d):
        plus = P(d, 0, 0, k, "ab") + P(d, 1, 0, k + 1, "ba") + P(d, 1, 1, k, "ab") + P(d, 0, 1, k, "ba")
        minus = P(d, 0, 0, -k - 1, "ab") + P(d, 1, 0, -k, "ba") + P(d, 1, 1, -k - 1, "ab") + P(d, 0, 1, -k - 1, "ba")
        m += c * (plus - minus)
    imag = np.max(np.abs(m.imag))
    if imag > SNAP_TOL:
        raise ContractError(f"Bell operator for d={d} has imaginary part {imag:.3e}")
    real = m.real
    real = 0.5 * (real + real.T)
    real[np.abs(real) < SNAP_TOL] = 0.0
    real.setflags(write=False)
    return real


def bell_operator(d: int) -> BellOperator:
    d = _check_bell_dim(d)
    return BellOperator(d, _bell_matrix(d))


@lru_cache(maxsize=None)
def _spectrum(d: int) -> EigenDecomposition:
    return eig_hermitian(_bell_matrix(d))


def max_violation(d: int) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of the Bell operator and a normalised eigenvector."""
    spec = _spectrum(_check_bell_dim(d))
    return float(spec.eigenvalues[0]), spec.eigenvectors[:, 0].copy()


def max_entangled_vector(d: int) -> np.ndarray:
    psi = np.zeros(d * d)
    psi[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return psi


def expectation_max_entangled(d: int) -> float:
    d = _check_bell_dim(d)
    psi = max_entangled_vector(d)
    return float(psi @ _bell_matrix(d) @ psi)


def correlated_block(d: int) -> np.ndarray:
    """Matrix of <j,j| S_d |k,k>, the operator restricted to the OAM-conserving span."""
    idx = np.arange(d) * (d + 1)
    return _bell_matrix(_check_bell_dim(d))[np.ix_(idx, idx)].copy()


LHV_MAX_DIM = 4


def lhv_strategy_values(d: int) -> np.ndarray:
    """S_d for every deterministic local strategy (A_0, A_1, B_0, B_1)."""
    if d < 2 or d > LHV_MAX_DIM:
        raise SizeError(
            f"brute-force LHV enumeration supports d <= {LHV_MAX_DIM} (got {d}); the analytic bound is S_d <= 2"
        )
    out = []
    for a0, a1, b0, b1 in itertools.product(range(d), repeat=4):
        p = np.zeros((2, 2, d, d))
        for a, va in ((0, a0), (1, a1)):
            for b, wb in ((0, b0), (1, b1)):
                p[a, b, va, wb] = 1.0
        out.append(s_from_table(p).s)
    return np.array(out)


def lhv_bound_bruteforce(d: int) -> float:
    return float(np.max(lhv_strategy_values(d)))


def central_modes(d: int, k: int) -> tuple[int, ...]:
    """The k signal modes of a d-dimensional mode set used for a k-dimensional sub-test."""
    if not 2 <= k <= d:
        raise SizeError(f"subspace dimension k={k} must satisfy 2 <= k <= d={d}")
    full = ell_list(d)
    own = ell_list(k)
    if set(own) <= set(full):
        return own
    # odd k inside an even-d mode set: no ell=0, take the k smallest |ell|
    return tuple(sorted(sorted(full, key=lambda l: (abs(l), l))[:k]))


def subspace_isometries(d: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Embeddings (d x k) of the k-dimensional test's |j'> into the d-dimensional |j>, per photon."""
    modes = central_modes(d, k)
    big = mode_map(d)
    va = np.zeros((d, k))
    vb = np.zeros((d, k))
    for jp, l in enumerate(modes):
        va[big.signal_j_of_ell[l], jp] = 1.0
        # idler mode -l pairs with signal mode l at the same j'
        vb[big.idler_j_of_ell[-l], jp] = 1.0
    return va, vb


def subspace_bell_value(rho: np.ndarray, d: int, k: int) -> tuple[float, float]:
    """S_k of ``rho`` projected onto the central k-mode subspace; returns (S_k, projected weight)."""
    va, vb = subspace_isometries(d, k)
    v = np.kron(va, vb)
    sub = v.T @ rho @ v
    weight = float(np.real(np.trace(sub)))
    if weight <= 0:
        return 0.0, weight
    return float(np.real(np.sum(_bell_matrix(_check_bell_dim(k)).T * sub))) / weight, weight


def _fmt(x: float) -> str:
    return "0" if x == 0 else f"{x:.12g}"


def write_operator_csv(op: BellOperator, path) -> None:
    """Dense operator dump: row_index, col_index, re, im."""
    m = np.asarray(op.matrix)
    with text_sink(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["row_index", "col_index", "re", "im"])
        for (i, j), x in np.ndenumerate(m):
            x = complex(x)
            wr.writerow([i, j, _fmt(x.real), _fmt(x.imag)])


def read_operator_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append((int(rec["row_index"]), int(rec["col_index"]), float(rec["re"]), float(rec["im"])))
    n = max(max(r[0], r[1]) for r in rows) + 1
    m = np.zeros((n, n), dtype=complex)
    for i, j, re, im in rows:
        m[i, j] = re + 1j * im
    return m


__all__ = [
    "BellOperator",
    "BellValue",
    "ProbabilityTable",
    "bell_coefficients",
    "bell_operator",
    "central_modes",
    "correlated_block",
    "expectation_max_entangled",
    "lhv_bound_bruteforce",
    "lhv_strategy_values",
    "max_entangled_vector",
    "max_violation",
    "probability_table",
    "s_from_table",
    "subspace_bell_value",
    "subspace_isometries",
    "write_operator_csv",
]
