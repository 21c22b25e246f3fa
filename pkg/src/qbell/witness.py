"""Entanglement-dimensionality witness by constrained maximisation of S_d.

States obeying OAM conservation live on span{|j, j>} and are described by a
d x d matrix C with rho = sum_{jk} C_jk |j,j><k,k|.  A state whose
entanglement involves at most d-1 dimensions can be written as

    C = sum_n r_n a_n a_n^T,   a_n real, |a_n| = 1, a_n[n] = 0,

and the witness asks for the largest S_d such a state can reach while its
diagonal populations and the lower-dimensional parameters S_2 .. S_{d-1}
stay inside the measured error bands.  The search is a multi-start,
penalty-escalated quasi-Newton maximisation; its result is therefore a
lower estimate of the true constrained maximum.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.optimize import minimize

from .bell import bell_operator, central_modes, correlated_block, subspace_bell_value
from .errors import ContractError, InfeasibleError, UndefinedConstraintError
from .modes import mode_map
from .numerics import check_density_matrix

WEIGHT_TOL = 1e-12
FEASIBILITY_TOL = 1e-5
DEFAULT_PENALTIES = (1e2, 1e4, 1e6)


@dataclass(frozen=True)
class ConstraintSet:
    d: int
    diag_probs: tuple = ()
    s_constraints: tuple = ()
    band_multiplier: float = 1.0
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        diag = tuple((int(j), float(p), float(s)) for j, p, s in self.diag_probs)
        sk = tuple((int(k), float(v), float(s)) for k, v, s in self.s_constraints)
        object.__setattr__(self, "diag_probs", diag)
        object.__setattr__(self, "s_constraints", sk)
        for j, p, s in diag:
            if not 0 <= j < self.d:
                raise ContractError(f"diagonal constraint index j={j} outside 0..{self.d - 1}")
            if not 0 <= p <= 1:
                raise ContractError(f"diagonal probability P_{j}{j}={p} outside [0, 1]")
            if s < 0:
                raise ContractError(f"negative sigma for P_{j}{j}")
        if sum(p for _, p, _ in diag) > 1 + 1e-6:
            raise ContractError("diagonal probabilities sum to more than 1")
        for k, _, s in sk:
            if not 2 <= k < self.d:
                raise ContractError(f"S_k constraint with k={k} outside 2..{self.d - 1}")
            if s < 0:
                raise ContractError(f"negative sigma for S_{k}")
        if self.band_multiplier < 0:
            raise ContractError("band multiplier must be nonnegative")

    def with_band(self, m: float) -> "ConstraintSet":
        return ConstraintSet(self.d, self.diag_probs, self.s_constraints, m, self.notes)

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "diag_probs": [{"j": j, "p": p, "sigma": s} for j, p, s in self.diag_probs],
            "s_constraints": [{"k": k, "s": v, "sigma": s} for k, v, s in self.s_constraints],
            "band_multiplier": self.band_multiplier,
        }
        if self.notes:
            out["notes"] = self.notes
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ConstraintSet":
        try:
            return cls(
                int(obj["d"]),
                tuple((e["j"], e["p"], e["sigma"]) for e in obj.get("diag_probs", [])),
                tuple((e["k"], e["s"], e["sigma"]) for e in obj.get("s_constraints", [])),
                float(obj.get("band_multiplier", 1.0)),
                obj.get("notes", {}),
            )
        except (KeyError, TypeError) as exc:
            raise ContractError(f"malformed constraint file: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ConstraintSet":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def measured_scenario() -> ConstraintSet:
    """The shipped d = 11 constraint set (measured S_2..S_10, model diagonal populations)."""
    text = resources.files("qbell.data").joinpath("measured_constraints.json").read_text()
    return ConstraintSet.from_json(json.loads(text))


@dataclass(frozen=True)
class WitnessAnsatz:
    """Mixture of real pure states on the correlated diagonal, each missing one mode."""

    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        r = np.array(self.weights, dtype=float)
        a = np.array(self.vectors, dtype=float)
        d = r.shape[0]
        if a.shape != (d, d):
            raise ContractError(f"vectors must be {d}x{d}, got {a.shape}")
        if np.any(r < 0) or abs(r.sum() - 1) > 1e-12:
            raise ContractError("weights must be nonnegative and sum to 1")
        diag = np.abs(np.diag(a))
        if np.any(diag != 0):
            n = int(np.argmax(diag))
            raise ContractError(f"vector a_{n} has nonzero excluded coordinate a_{n}[{n}] = {a[n, n]:.3e}")
        norms = np.linalg.norm(a, axis=1)
        if np.any(np.abs(norms - 1) > 1e-10):
            raise ContractError("every vector a_n must be normalised")
        r.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", r)
        object.__setattr__(self, "vectors", a)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def correlated_matrix(self) -> np.ndarray:
        a = self.vectors
        return a.T @ (self.weights[:, None] * a)

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "vectors": self.vectors.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "WitnessAnsatz":
        return cls(np.array(obj["weights"]), np.array(obj["vectors"]))


def embed_correlated(c: np.ndarray) -> np.ndarray:
    """Lift a d x d matrix on span{|j,j>} to the d^2 x d^2 product space."""
    d = c.shape[0]
    rho = np.zeros((d * d, d * d), dtype=complex)
    idx = np.arange(d) * (d + 1)
    rho[np.ix_(idx, idx)] = c
    return rho


def assemble_rho(ansatz: WitnessAnsatz) -> np.ndarray:
    rho = embed_correlated(ansatz.correlated_matrix())
    check_density_matrix(rho)
    return rho


def constrained_s_k(rho: np.ndarray, k: int, d: int) -> tuple[float, float]:
    """S_k of ``rho`` restricted to the central k modes, with the projected weight."""
    if k == d:
        return bell_operator(d).expectation(rho), 1.0
    s, w = subspace_bell_value(rho, d, k)
    if w < WEIGHT_TOL:
        raise UndefinedConstraintError(f"projected weight {w:.3e} on the central {k}-mode subspace is too small")
    return s, w


@lru_cache(maxsize=None)
def _subspace_blocks(d: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(H, pi): S_k restricted to span{|j,j>} as d x d numerator matrix and weight mask."""
    modes = central_modes(d, k)
    sig = mode_map(d).signal_j_of_ell
    idx = [sig[l] for l in modes]
    h = np.zeros((d, d))
    h[np.ix_(idx, idx)] = correlated_block(k)
    pi = np.zeros(d)
    pi[idx] = 1.0
    h.setflags(write=False)
    pi.setflags(write=False)
    return h, pi


def restricted_eigen_oracle(d: int) -> tuple[float, int]:
    """max_n of the top eigenvalue of S_d on span{|j,j> : j != n}, and the maximising n."""
    g = correlated_block(d)
    best = (-np.inf, -1)
    for n in range(d):
        keep = [j for j in range(d) if j != n]
        lam = float(np.linalg.eigvalsh(g[np.ix_(keep, keep)])[-1])
        best = max(best, (lam, n))
    return best


class _Objective:
    """Penalised S_d and its gradient in the unconstrained parametrisation.

    x = (z, U): weights r = softmax(z); a_n = U_n / |U_n| with U_n[n] masked to 0.
    """

    def __init__(self, c: ConstraintSet):
        d = c.d
        self.d = d
        self.g = correlated_block(d)
        self.mask = 1.0 - np.eye(d)
        m = c.band_multiplier
        self.diag_j = np.array([j for j, _, _ in c.diag_probs], dtype=int)
        self.diag_t = np.array([p for _, p, _ in c.diag_probs])
        self.diag_b = np.array([m * s for _, _, s in c.diag_probs])
        self.s_k = [k for k, _, _ in c.s_constraints]
        self.s_t = np.array([v for _, v, _ in c.s_constraints])
        self.s_b = np.array([m * s for _, _, s in c.s_constraints])
        self.blocks = [_subspace_blocks(d, k) for k in self.s_k]

    def unpack(self, x):
        d = self.d
        z = x[:d]
        u = x[d:].reshape(d, d) * self.mask
        r = np.exp(z - z.max())
        r /= r.sum()
        norms = np.linalg.norm(u, axis=1)
        norms = np.where(norms > 0, norms, 1.0)
        return r, u / norms[:, None], norms

    def measurements(self, cmat):
        diag = np.diag(cmat)[self.diag_j]
        s_vals, weights = [], []
        for h, pi in self.blocks:
            w = float(pi @ np.diag(cmat))
            weights.append(w)
            s_vals.append(float(np.sum(h * cmat)) / w if w > WEIGHT_TOL else np.nan)
        return diag, np.array(s_vals), np.array(weights)

    def excess(self, cmat):
        """Band violations (>= 0) for diagonal and S_k constraints."""
        diag, s_vals, _ = self.measurements(cmat)
        e_diag = np.maximum(0.0, np.abs(diag - self.diag_t) - self.diag_b)
        e_s = np.maximum(0.0, np.abs(np.nan_to_num(s_vals, nan=np.inf) - self.s_t) - self.s_b)
        return e_diag, e_s

    def __call__(self, x, mu):
        r, a, norms = self.unpack(x)
        cmat = a.T @ (r[:, None] * a)
        obj = float(np.sum(self.g * cmat))
        grad_c = self.g.copy()
        pen = 0.0

        dv = np.diag(cmat)[self.diag_j] - self.diag_t
        ex = np.maximum(0.0, np.abs(dv) - self.diag_b)
        pen += float(ex @ ex)
        np.subtract.at(grad_c, (self.diag_j, self.diag_j), mu * 2 * ex * np.sign(dv))

        cdiag = np.diag(cmat)
        for (h, pi), t, b in zip(self.blocks, self.s_t, self.s_b):
            w = float(pi @ cdiag)
            if w <= WEIGHT_TOL:
                # undefined S_k: push weight back into the subspace
                pen += 1.0
                grad_c += mu * np.diag(pi)
                continue
            s = float(np.sum(h * cmat)) / w
            dv = s - t
            e = abs(dv) - b
            if e > 0:
                pen += e * e
                grad_c -= mu * 2 * e * np.sign(dv) * (h - s * np.diag(pi)) / w

        value = obj - mu * pen
        grad_a = 2 * r[:, None] * (a @ grad_c)
        grad_r = np.einsum("ni,ij,nj->n", a, grad_c, a)
        grad_z = r * (grad_r - r @ grad_r)
        grad_u = (grad_a - a * np.sum(grad_a * a, axis=1)[:, None]) / norms[:, None] * self.mask
        return -value, -np.concatenate([grad_z, grad_u.ravel()])


@dataclass(frozen=True)
class WitnessResult:
    best_s: float
    best_ansatz: WitnessAnsatz
    constraint_residuals: dict
    n_starts: int
    converged_fraction: float
    seed: int
    d: int

    @property
    def best_s11(self) -> float:
        return self.best_s

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "best_s": self.best_s,
            "seed": self.seed,
            "n_starts": self.n_starts,
            "converged_fraction": self.converged_fraction,
            "constraint_residuals": self.constraint_residuals,
            "ansatz": self.best_ansatz.to_json(),
        }


def _residual_report(c: ConstraintSet, cmat: np.ndarray) -> dict:
    f = _Objective(c)
    diag, s_vals, weights = f.measurements(cmat)
    e_diag, e_s = f.excess(cmat)
    out = {}
    for (j, p, s), val, e in zip(c.diag_probs, diag, e_diag):
        out[f"P_{j}{j}"] = {"value": float(val), "target": p, "band": c.band_multiplier * s, "excess": float(e)}
    for (k, t, s), val, w, e in zip(c.s_constraints, s_vals, weights, e_s):
        out[f"S_{k}"] = {
            "value": float(val),
            "target": t,
            "band": c.band_multiplier * s,
            "excess": float(e),
            "weight": float(w),
        }
    return out


def _polish_ansatz(f: _Objective, x) -> WitnessAnsatz:
    r, a, _ = f.unpack(x)
    a = a * f.mask
    a /= np.linalg.norm(a, axis=1)[:, None]
    return WitnessAnsatz(r / r.sum(), a)


def _run_start(args):
    c, seed, index, penalties, maxiter, x0 = args
    f = _Objective(c)
    d = c.d
    if x0 is None:
        rng = np.random.default_rng([seed, index])
        x = np.concatenate([rng.normal(size=d), rng.normal(size=d * d)])
    else:
        x = np.array(x0, dtype=float)
    for mu in penalties:
        res = minimize(f, x, args=(mu,), jac=True, method="L-BFGS-B", options={"maxiter": maxiter})
        x = res.x
    ansatz = _polish_ansatz(f, x)
    cmat = ansatz.correlated_matrix()
    e_diag, e_s = f.excess(cmat)
    worst = float(max(np.max(e_diag, initial=0.0), np.max(e_s, initial=0.0)))
    return float(np.sum(f.g * cmat)), worst, ansatz


def ansatz_to_params(ansatz: WitnessAnsatz) -> np.ndarray:
    """Inverse of the internal parametrisation, for warm starts."""
    r = np.clip(ansatz.weights, 1e-300, None)
    return np.concatenate([np.log(r), np.asarray(ansatz.vectors, dtype=float).ravel()])


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QBELL_THREADS", "1")))
    except ValueError:
        return 1


def maximize_s11(
    c: ConstraintSet,
    starts: int = 200,
    seed: int = 0,
    penalties=DEFAULT_PENALTIES,
    maxiter: int = 3000,
    workers: int | None = None,
    initial=(),
) -> WitnessResult:
    """Largest S_d found over at-most-(d-1)-dimensional states satisfying ``c``.

    ``initial`` holds extra warm-start ansatze tried before the random starts.
    Raises :class:`InfeasibleError` when no start ends inside every band.
    """
    workers = default_workers() if workers is None else workers
    jobs = [(c, seed, -1 - i, tuple(penalties), maxiter, ansatz_to_params(a)) for i, a in enumerate(initial)]
    jobs += [(c, seed, i, tuple(penalties), maxiter, None) for i in range(starts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_start, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_start(j) for j in jobs]

    feasible = [(val, i) for i, (val, worst, _) in enumerate(results) if worst <= FEASIBILITY_TOL]
    if not feasible:
        i_best = min(range(len(results)), key=lambda i: results[i][1])
        worst = results[i_best][1]
        raise InfeasibleError(
            f"no start satisfied all constraint bands (smallest worst-case excess {worst:.3e})",
            worst_residual=worst,
            residuals=_residual_report(c, results[i_best][2].correlated_matrix()),
        )
    # ties resolve to the lowest job index so the merge is order independent
    best_val, i_best = max(feasible, key=lambda t: (t[0], -t[1]))
    ansatz = results[i_best][2]
    return WitnessResult(
        best_s=best_val,
        best_ansatz=ansatz,
        constraint_residuals=_residual_report(c, ansatz.correlated_matrix()),
        n_starts=len(jobs),
        converged_fraction=len(feasible) / len(jobs),
        seed=seed,
        d=c.d,
    )


@dataclass(frozen=True)
class DimensionCertificate:
    bound: float
    measured: float
    sigma: float
    separation: float
    significance: float
    certified: bool


def certify_dimension(result, measured_s11: float, sigma_s11: float, significance: float = 3.0) -> DimensionCertificate:
    """Separation (measured - bound) / sigma, certified when it exceeds ``significance``."""
    bound = result.best_s if isinstance(result, WitnessResult) else float(result)
    if not sigma_s11 > 0:
        raise ContractError("sigma must be positive")
    sep = (measured_s11 - bound) / sigma_s11
    return DimensionCertificate(bound, measured_s11, sigma_s11, sep, significance, sep > significance)
