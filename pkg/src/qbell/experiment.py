"""Monte Carlo coincidence counting and S_d error bars.

Every (a, b, v, w) cell draws its Poisson count from its own generator,
keyed by (seed, d, a, b, v, w), so a simulation does not depend on the order
in which cells are visited.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .bell import BellValue, ProbabilityTable, bell_coefficients, probability_table, s_from_table
from .concentration import apply_filter_pure, design_filter
from ._io import text_sink
from .errors import ContractError
from .numerics import check_density_matrix
from .spdc import REFERENCE_GAMMA, lorentzian_state

DEFAULT_INTEGRATION_TIME = 20.0


@dataclass(frozen=True)
class ExperimentPlan:
    d: int
    state: np.ndarray
    total_rate: float
    integration_time: float = DEFAULT_INTEGRATION_TIME
    crosstalk_epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.total_rate < 0 or self.integration_time <= 0:
            raise ContractError("rate must be nonnegative and integration time positive")
        if not 0 <= self.crosstalk_epsilon < 1:
            raise ContractError(f"crosstalk epsilon must lie in [0, 1), got {self.crosstalk_epsilon}")
        check_density_matrix(self.state, self.d * self.d)

    @property
    def counts_per_setting(self) -> float:
        return self.total_rate * self.integration_time


@dataclass(frozen=True)
class CountRecord:
    a: int
    b: int
    v: int
    w: int
    count: int


def _leak_matrix(d: int, eps: float) -> np.ndarray:
    """Column-stochastic, symmetric nearest-neighbour leakage between adjacent modes."""
    t = np.zeros((d, d))
    for j in range(d):
        for nb in (j - 1, j + 1):
            if 0 <= nb < d:
                t[nb, j] = eps / 2
        t[j, j] = 1 - t[:, j].sum()
    return t


def crosstalk_channel(rho: np.ndarray, d: int, eps: float) -> np.ndarray:
    """Leak idler population to neighbouring modes with total weight ``eps`` (half each way)."""
    if not 0 <= eps < 1:
        raise ContractError(f"crosstalk epsilon must lie in [0, 1), got {eps}")
    if eps == 0:
        return rho
    stay = np.sqrt(np.diag(_leak_matrix(d, eps)))
    up = np.sqrt(eps / 2) * np.eye(d, k=-1)
    down = np.sqrt(eps / 2) * np.eye(d, k=1)
    eye = np.eye(d)
    out = np.zeros_like(rho, dtype=complex)
    for kb in (np.diag(stay), up, down):
        k = np.kron(eye, kb)
        out += k @ rho @ k.conj().T
    return 0.5 * (out + out.conj().T)


def crosstalk_mix(p, epsilon: float):
    """Mix outcome ``w`` into its neighbours w +- 1 with total weight ``epsilon``, renormalised per (a, b)."""
    if not 0 <= epsilon < 1:
        raise ContractError(f"crosstalk epsilon must lie in [0, 1), got {epsilon}")
    arr = p.p if isinstance(p, ProbabilityTable) else np.asarray(p, dtype=float)
    d = arr.shape[-1]
    mixed = arr @ _leak_matrix(d, epsilon).T
    mixed = mixed / mixed.sum(axis=(-2, -1), keepdims=True)
    if isinstance(p, ProbabilityTable):
        return ProbabilityTable.from_array(mixed, d)
    return mixed


def mode_populations(rho: np.ndarray, d: int) -> np.ndarray:
    """P(j_signal, j_idler) in the computational (OAM) basis."""
    return np.real(np.diag(rho)).reshape(d, d).copy()


def expected_table(plan: ExperimentPlan) -> ProbabilityTable:
    rho = crosstalk_channel(plan.state, plan.d, plan.crosstalk_epsilon)
    return probability_table(rho, plan.d)


def _cell_rng(seed: int, d: int, a: int, b: int, v: int, w: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(d, a, b, v, w)))


def simulate_counts(plan: ExperimentPlan) -> list[CountRecord]:
    p = expected_table(plan).p
    lam = plan.counts_per_setting * p
    d = plan.d
    out = []
    for (a, b, v, w), mean in np.ndenumerate(lam):
        n = int(_cell_rng(plan.seed, d, a, b, v, w).poisson(mean)) if mean > 0 else 0
        out.append(CountRecord(a, b, v, w, n))
    return out


def counts_array(records) -> np.ndarray:
    recs = list(records)
    if not recs:
        raise ContractError("no count records")
    d = max(max(r.v, r.w) for r in recs) + 1
    n = np.full((2, 2, d, d), -1, dtype=np.int64)
    for r in recs:
        n[r.a, r.b, r.v, r.w] = r.count
    if np.any(n < 0):
        missing = [tuple(int(i) for i in idx) for idx in np.argwhere(n < 0)[:5]]
        raise ContractError(f"incomplete count table; missing cells such as {missing}")
    return n


def _s_and_sigma(n: np.ndarray) -> tuple[float, float]:
    d = n.shape[-1]
    w = bell_coefficients(d)
    tot = n.sum(axis=(2, 3)).astype(float)
    if np.any(tot <= 0):
        raise ContractError("a setting pair recorded no coincidences")
    p = n / tot[:, :, None, None]
    s_ab = np.sum(w * p, axis=(2, 3))
    # dS/dn_c = (W_c - S_ab) / N_ab, Var(n_c) = n_c
    deriv = (w - s_ab[:, :, None, None]) / tot[:, :, None, None]
    return float(s_ab.sum()), float(np.sqrt(np.sum(deriv**2 * n)))


def estimate_s_with_sigma(records, bootstrap: int = 0, seed: int = 0) -> BellValue:
    """S_d from counts with first-order Poisson error propagation (optional bootstrap cross-check)."""
    n = counts_array(records)
    s, sigma = _s_and_sigma(n)
    sigma_bs = None
    if bootstrap:
        rng = np.random.default_rng(seed)
        draws = [_s_and_sigma(rng.poisson(n))[0] for _ in range(bootstrap)]
        sigma_bs = float(np.std(draws, ddof=1))
    return BellValue(n.shape[-1], s, sigma, sigma_bs)


@dataclass(frozen=True)
class SweepRow:
    d: int
    s: float
    sigma: float
    filtered: bool
    gamma: float
    seed: int


def sweep_state(gamma: float, d: int, filtered: bool) -> np.ndarray:
    state = lorentzian_state(gamma, d)
    if filtered:
        state, _ = apply_filter_pure(state, design_filter(state))
    return state.density()


def run_sd_sweep(
    gamma: float = REFERENCE_GAMMA,
    d_range=range(2, 15),
    filtered: bool = True,
    total_rate: float = 1e8 / DEFAULT_INTEGRATION_TIME,
    integration_time: float = DEFAULT_INTEGRATION_TIME,
    crosstalk_epsilon: float = 0.0,
    seed: int = 0,
    noiseless: bool = False,
) -> list[SweepRow]:
    """S_d +- sigma versus d for the (optionally Procrustean-filtered) Lorentzian source."""
    rows = []
    for d in d_range:
        plan = ExperimentPlan(d, sweep_state(gamma, d, filtered), total_rate, integration_time, crosstalk_epsilon, seed)
        if noiseless:
            rows.append(SweepRow(d, s_from_table(expected_table(plan)).s, 0.0, filtered, gamma, seed))
            continue
        bv = estimate_s_with_sigma(simulate_counts(plan))
        rows.append(SweepRow(d, bv.s, bv.sigma, filtered, gamma, seed))
    return rows


def write_counts_csv(records, path) -> None:
    with text_sink(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["a", "b", "v", "w", "count"])
        for r in records:
            wr.writerow([r.a, r.b, r.v, r.w, r.count])


def read_counts_csv(path) -> list[CountRecord]:
    with open(path, newline="") as fh:
        return [CountRecord(*(int(rec[k]) for k in ("a", "b", "v", "w", "count"))) for rec in csv.DictReader(fh)]


def write_sweep_csv(rows, path) -> None:
    with text_sink(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["d", "s", "sigma", "filtered", "gamma", "seed"])
        for r in rows:
            wr.writerow([r.d, f"{r.s:.12g}", f"{r.sigma:.12g}", int(r.filtered), f"{r.gamma:.12g}", r.seed])
