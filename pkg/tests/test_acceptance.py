"""Acceptance suite: one check per criterion, each printing a single PASS/FAIL line.

Run under pytest, or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _golden import S2, S3  # noqa: E402

from qbell import bell  # noqa: E402
from qbell.concentration import completeness_certificate, design_filter, separability_preservation_test  # noqa: E402
from qbell.experiment import ExperimentPlan, estimate_s_with_sigma, run_sd_sweep, simulate_counts, sweep_state  # noqa: E402
from qbell.numerics import fidelity_pure  # noqa: E402
from qbell.reference import MEASURED_S11, VIOLATION_TABLE, D11_SPECTRUM  # noqa: E402
from qbell.spdc import (  # noqa: E402
    REFERENCE_GAMMA,
    coincidence_closed_form,
    fit_gamma,
    fringe_equivalence_check,
    lorentzian_state,
    max_entangled_state,
    synthetic_rates,
)
from qbell.concentration import apply_filter  # noqa: E402
from qbell.witness import (  # noqa: E402
    ConstraintSet,
    certify_dimension,
    maximize_s11,
    measured_scenario,
    restricted_eigen_oracle,
)


def check_1():
    bell._bell_matrix.cache_clear()
    bell._spectrum.cache_clear()
    t = time.perf_counter()
    worst = 0.0
    for d in range(2, 15):
        psi_val, top = VIOLATION_TABLE[d]
        worst = max(worst, abs(bell.expectation_max_entangled(d) - psi_val), abs(bell.max_violation(d)[0] - top))
    dt = time.perf_counter() - t
    return worst < 5e-5 and dt < 10, f"26 values, max deviation {worst:.2e}, {dt:.2f} s"


def check_2():
    m2, m3 = bell.bell_operator(2).matrix, bell.bell_operator(3).matrix
    err = max(np.max(np.abs(m2 - S2)), np.max(np.abs(m3 - S3)))
    zero_diag = not np.any(np.diag(m2)) and not np.any(np.diag(m3))
    return err < 1e-14 and zero_diag, f"max entry deviation {err:.1e}, zero diagonals {zero_diag}"


def check_3():
    dec = bell.bell_operator(11).spectrum()
    top5 = dec.eigenvalues[:5]
    err = float(np.max(np.abs(top5 - [v for v, _ in D11_SPECTRUM])))
    vec = dec.eigenvectors[:, 0]
    off = np.setdiff1d(np.arange(121), np.arange(11) * 12)
    leak = float(np.sum(np.abs(vec[off]) ** 2))
    return err < 5e-5 and leak < 1e-9, f"top five {np.round(top5, 4).tolist()}, off-span weight {leak:.1e}"


def check_4():
    worst = 0.0
    for d in (2, 5, 11):
        worst = max(worst, fringe_equivalence_check(d, 200))
        worst = max(worst, abs(coincidence_closed_form(0, 0, d) - 1 / d))
        worst = max(worst, *(abs(coincidence_closed_form(2 * np.pi * k / d, 0, d)) for k in range(1, d)))
    return worst < 1e-9, f"max discrepancy {worst:.1e} (d = 2, 5, 11)"


def check_5():
    t = time.perf_counter()
    vals = {d: bell.lhv_bound_bruteforce(d) for d in (2, 3)}
    dt = time.perf_counter() - t
    return all(v == 2.0 for v in vals.values()) and dt < 5, f"max S_d {vals}, {dt:.2f} s"


def check_6():
    worst = -np.inf
    viol = 0
    for d in range(2, 7):
        rep = separability_preservation_test(500, d, seed=d)
        worst = max(worst, rep.max_s)
        viol += rep.violations
    return viol == 0 and worst <= 2 + 1e-9, f"500 states per d = 2..6, largest S {worst:.4f}"


def check_7():
    state = lorentzian_state(REFERENCE_GAMMA, 11)
    f = design_filter(state)
    out = apply_filter(state, f)
    fid = fidelity_pure(out.filtered_state, max_entangled_state(11).vector())
    w = np.linalg.eigvalsh(completeness_certificate(f))
    ok = fid >= 1 - 1e-12 and w.min() >= -1e-12 and w.max() <= 1 + 1e-12
    return ok, f"fidelity 1 - {1 - fid:.1e}, completeness eigenvalues in [{w.min():.3f}, {w.max():.3f}]"


def check_8():
    t = time.perf_counter()
    res = maximize_s11(measured_scenario(), starts=200, seed=0)
    cert = certify_dimension(res, *MEASURED_S11)
    oracle, _ = restricted_eigen_oracle(11)
    free = maximize_s11(ConstraintSet(11), starts=8, seed=0)
    dt = time.perf_counter() - t
    in_band = 2.04 <= res.best_s11 <= 2.18
    oracle_ok = abs(free.best_s11 - oracle) < 1e-3
    ok = in_band and cert.separation >= 3 and oracle_ok and dt < 600
    detail = (
        f"best S_11 {res.best_s11:.4f} (band [2.04, 2.18]: {in_band}), "
        f"separation {cert.separation:.2f} sigma, oracle gap {abs(free.best_s11 - oracle):.1e}, {dt:.0f} s"
    )
    return ok, detail


def check_9():
    ideal = run_sd_sweep(filtered=True, seed=1)
    dev = max(abs(r.s - VIOLATION_TABLE[r.d][0]) for r in ideal)
    state = sweep_state(REFERENCE_GAMMA, 7, True)

    def mean_sigma(n):
        vals = [
            estimate_s_with_sigma(simulate_counts(ExperimentPlan(7, state, n / 20.0, 20.0, 0.0, s))).sigma
            for s in range(10)
        ]
        return float(np.mean(vals))

    ratio = mean_sigma(1e4) / mean_sigma(1.6e5)
    f = run_sd_sweep(filtered=True, crosstalk_epsilon=0.08, seed=2)
    u = run_sd_sweep(filtered=False, crosstalk_epsilon=0.08, seed=2)
    last = lambda rows: max([r.d for r in rows if r.s - 3 * r.sigma > 2], default=1)  # noqa: E731
    ordered = all(a.s > b.s for a, b in zip(f[1:], u[1:])) and last(f) >= last(u)
    ok = dev < 1e-3 and abs(ratio / 4 - 1) < 0.1 and ordered
    detail = (
        f"ideal deviation {dev:.1e}, sigma ratio over 16x counts {ratio:.3f}, "
        f"filtered > unfiltered for d >= 3 with 8% cross-talk: {ordered}"
    )
    return ok, detail


def check_10():
    fit = fit_gamma(synthetic_rates(REFERENCE_GAMMA, range(-5, 6)))
    err = abs(fit.gamma - REFERENCE_GAMMA)
    return err < 1e-6, f"recovered gamma {fit.gamma:.9f} (error {err:.1e})"


CHECKS = [
    (1, "violation table reproduction", check_1),
    (2, "printed-operator golden test", check_2),
    (3, "d = 11 spectrum reproduction", check_3),
    (4, "fringe equivalence", check_4),
    (5, "LHV oracle", check_5),
    (6, "separability property suite", check_6),
    (7, "concentration", check_7),
    (8, "dimensionality witness", check_8),
    (9, "Monte Carlo consistency", check_9),
    (10, "spiral-bandwidth round trip", check_10),
]


def _line(n, name, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2} {name}: {detail}"


@pytest.mark.parametrize("n,name,check", CHECKS, ids=[f"criterion_{n}" for n, _, _ in CHECKS])
def test_criterion(n, name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(n, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, name, check in CHECKS:
        ok, detail = check()
        failed += not ok
        print(_line(n, name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
