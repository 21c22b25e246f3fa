from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from qbell.bell import bell_operator, subspace_bell_value
from qbell.errors import ContractError, InfeasibleError, UndefinedConstraintError
from qbell.numerics import check_density_matrix
from qbell.reference import VIOLATION_TABLE
from qbell.spdc import max_entangled_state
from qbell.witness import (
    ConstraintSet,
    WitnessAnsatz,
    assemble_rho,
    certify_dimension,
    constrained_s_k,
    embed_correlated,
    maximize_s11,
    measured_scenario,
    restricted_eigen_oracle,
)

DATA = Path(__file__).parent / "data"
D = 11


def _random_ansatz(rng, d=D):
    r = rng.dirichlet(np.ones(d) * rng.uniform(0.2, 2))
    a = rng.normal(size=(d, d))
    np.fill_diagonal(a, 0.0)
    a /= np.linalg.norm(a, axis=1)[:, None]
    return WitnessAnsatz(r, a)


def test_single_term_excluding_mode_zero():
    a = np.zeros((D, D))
    a[0, 1:] = 1 / np.sqrt(10)
    for n in range(1, D):
        a[n, 0 if n != 0 else 1] = 1.0
    w = np.zeros(D)
    w[0] = 1.0
    rho = assemble_rho(WitnessAnsatz(w, a))
    assert np.linalg.matrix_rank(rho, tol=1e-10) == 1
    assert rho[0, 0] == 0


def test_deterministic_mixture_is_diagonal_with_zero_s():
    a = np.zeros((D, D))
    for n in range(D):
        a[n, (n + 1) % D] = 1.0
    rho = assemble_rho(WitnessAnsatz(np.full(D, 1 / D), a))
    assert np.count_nonzero(rho - np.diag(np.diag(rho))) == 0
    assert bell_operator(D).expectation(rho) == 0.0


def test_excluded_coordinate_enforced():
    a = np.full((3, 3), 1 / np.sqrt(3))
    with pytest.raises(ContractError, match="excluded"):
        WitnessAnsatz(np.full(3, 1 / 3), a)
    a = np.array([[0, 1, 0], [1, 0, 0], [1, 0, 0]], dtype=float)
    with pytest.raises(ContractError):
        WitnessAnsatz(np.array([0.5, 0.6, -0.1]), a)


def test_random_ansatze_are_states_below_operator_maximum():
    rng = np.random.default_rng(0)
    op = bell_operator(D)
    top = max(op.expectation(assemble_rho(_random_ansatz(rng))) for _ in range(1000))
    assert top < VIOLATION_TABLE[D][1]
    rho = assemble_rho(_random_ansatz(rng))
    assert abs(np.trace(rho).real - 1) < 1e-12
    check_density_matrix(rho)


def test_constrained_s_k_examples():
    rho = max_entangled_state(D).density()
    s, w = constrained_s_k(rho, 2, D)
    assert s == pytest.approx(2 * np.sqrt(2), abs=1e-12) and w == pytest.approx(2 / 11)
    diag = embed_correlated(np.diag(np.full(D, 1 / D)))
    assert all(abs(constrained_s_k(diag, k, D)[0]) < 1e-15 for k in range(2, D + 1))
    edge = embed_correlated(np.diag(np.eye(D)[0]))
    with pytest.raises(UndefinedConstraintError):
        constrained_s_k(edge, 2, D)


def test_unconstrained_matches_eigen_oracle():
    oracle, n = restricted_eigen_oracle(D)
    assert n in (0, 5, 10)
    res = maximize_s11(ConstraintSet(D), starts=8, seed=1)
    assert abs(res.best_s11 - oracle) < 1e-3
    assert res.best_s11 <= oracle + 1e-9


def test_result_reproducible_from_ansatz_and_seed():
    c = measured_scenario()
    a = maximize_s11(c, starts=6, seed=11)
    b = maximize_s11(c, starts=6, seed=11)
    assert a.best_s11 == b.best_s11
    again = bell_operator(D).expectation(assemble_rho(a.best_ansatz))
    assert abs(again - a.best_s11) < 1e-8
    par = maximize_s11(c, starts=6, seed=11, workers=2)
    assert par.best_s11 == a.best_s11


def test_band_widening_is_monotone():
    c = measured_scenario()
    prev = None
    values = []
    for m in (1, 2, 3):
        warm = () if prev is None else (prev.best_ansatz,)
        prev = maximize_s11(c.with_band(m), starts=10, seed=0, initial=warm)
        values.append(prev.best_s11)
    assert values[0] <= values[1] <= values[2]


def test_measured_scenario_result_is_feasible():
    c = measured_scenario()
    res = maximize_s11(c, starts=10, seed=0)
    assert all(entry["excess"] <= 1e-5 for entry in res.constraint_residuals.values())
    assert 2.0 < res.best_s11 < restricted_eigen_oracle(D)[0]


def test_zero_s_constraints_do_not_force_zero():
    # S_k = 0 on the central subspaces leaves coherences that no central subspace sees,
    # so a 10-dimensional state can still reach S_11 > 0
    c = ConstraintSet(D, (), tuple((k, 0.0, 0.0) for k in range(2, D)))
    res = maximize_s11(c, starts=6, seed=0)
    rho = assemble_rho(res.best_ansatz)
    for k in range(2, D):
        s, _ = subspace_bell_value(rho, D, k)
        assert abs(s) < 1e-4
    assert 0.0 <= res.best_s11 < restricted_eigen_oracle(D)[0]


def test_infeasible_constraints_reported():
    c = ConstraintSet(D, (), ((2, 3.5, 0.0),))
    with pytest.raises(InfeasibleError) as info:
        maximize_s11(c, starts=3, seed=0)
    assert info.value.worst_residual > 0.5
    assert "S_2" in info.value.residuals


def test_constraint_validation_and_json(tmp_path):
    with pytest.raises(ContractError):
        ConstraintSet(D, ((0, 1.5, 0.01),))
    with pytest.raises(ContractError):
        ConstraintSet(D, tuple((j, 0.2, 0.01) for j in range(D)))
    with pytest.raises(ContractError):
        ConstraintSet(D, (), ((11, 2.0, 0.1),))
    with pytest.raises(ContractError, match="malformed"):
        ConstraintSet.from_json({"d": 11, "s_constraints": [{"k": 2}]})
    c = measured_scenario()
    path = tmp_path / "c.json"
    c.save(path)
    assert ConstraintSet.load(path) == c
    assert [k for k, _, _ in c.s_constraints] == list(range(2, 11))
    assert [s for _, s, _ in c.s_constraints] == [2.79, 2.78, 2.87, 2.73, 2.76, 2.62, 2.56, 2.46, 2.47]


def test_certificate_examples():
    cert = certify_dimension(2.14, 2.39, 0.07)
    assert cert.separation == pytest.approx(3.5714, abs=1e-4) and cert.certified
    assert not certify_dimension(2.14, 2.15, 0.07).certified
    p0 = certify_dimension(2.14, 2.67, 0.22)
    assert p0.separation == pytest.approx(2.409, abs=1e-3)
    assert not p0.certified
    assert certify_dimension(2.14, 2.67, 0.22, significance=2.0).certified
    with pytest.raises(ContractError):
        certify_dimension(2.14, 2.39, 0.0)


def test_feasible_ten_dimensional_state_above_2_18():
    """A frozen at-most-10-dimensional state inside every band of the shipped constraints.

    Checked here with the plain subspace Bell values, independent of the optimiser.
    Its S_11 lies above 2.18, so no correct maximiser can return a value in [2.04, 2.18]
    for these constraints.
    """
    ansatz = WitnessAnsatz.from_json(json.loads((DATA / "feasible_ansatz_d11.json").read_text()))
    rho = assemble_rho(ansatz)
    c = measured_scenario()
    pops = np.real(np.diag(rho))[np.arange(D) * (D + 1)]
    for j, p, sigma in c.diag_probs:
        assert abs(pops[j] - p) <= sigma
    for k, s, sigma in c.s_constraints:
        assert abs(subspace_bell_value(rho, D, k)[0] - s) <= sigma
    assert bell_operator(D).expectation(rho) > 2.18
