import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import scalar_model
from memorium import (
    DomainError,
    FreeEnergyFunctional,
    History,
    PreconditionError,
    chain_rule,
    check_dissipation_inequality,
    clausius_duhem_restrictions,
    constant_history,
    evaluate,
    graffi_delta,
    graffi_gradient,
    graffi_value,
    respond,
)
from memorium.sampling import random_history, random_model, random_process
from oracles import graffi_quad

seeds = st.integers(0, 2**32 - 1)


def test_exponential_history_closed_form(unit_scalar):
    # X = e^{-s}: X0^2 / 2 + (1/2) int e^{-s} (e^{-s} - 1)^2 ds = 1/2 + 1/6
    s = np.linspace(0.0, 40.0, 4001)
    H = History(s, np.exp(-s)[:, None])
    assert graffi_value(unit_scalar, H) == pytest.approx(2.0 / 3.0, abs=1e-5)


@pytest.mark.parametrize("seed", range(3))
def test_value_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    M = random_model(rng)
    H = random_history(rng, M.n, nodes=6)
    assert graffi_value(M, H) == pytest.approx(graffi_quad(M, H.grid, H.values), rel=1e-10)


@given(seeds)
def test_gradient_is_response(seed):
    rng = np.random.default_rng(seed)
    M = random_model(rng)
    H = random_history(rng, M.n)
    np.testing.assert_allclose(graffi_gradient(M, H), respond(M, H), atol=1e-10)


@given(seeds)
def test_history_part_of_rate_is_nonpositive(seed):
    rng = np.random.default_rng(seed)
    M = random_model(rng)
    assert graffi_delta(M, random_history(rng, M.n)) <= 1e-12


def test_constant_history_energy():
    M = random_model(4)
    X = np.random.default_rng(5).normal(size=M.n)
    assert graffi_value(M, constant_history(X)) == pytest.approx(0.5 * X @ M.kernel.G_inf @ X, abs=1e-12)


def test_chain_rule_second_order():
    rng = np.random.default_rng(6)
    M = random_model(rng)
    psi = FreeEnergyFunctional("quadratic_graffi", M)
    H = random_history(rng, M.n, nodes=41, span=8.0, smooth=True)
    t = 0.5 * (H.grid[10] + H.grid[11])
    h = 0.25 * (H.grid[11] - H.grid[10])
    e = [chain_rule(psi, H, t, h / 2**j).discrepancy for j in range(3)]
    assert np.log2(e[0] / e[1]) > 1.9 and np.log2(e[1] / e[2]) > 1.9


def test_chain_rule_rejects_node_in_stencil(unit_scalar):
    psi = FreeEnergyFunctional("quadratic_graffi", unit_scalar)
    H = History([0.0, 1.0, 2.0], [[0.0], [1.0], [0.0]])
    with pytest.raises(DomainError):
        chain_rule(psi, H, 1.0, 0.1)


def test_restrictions_blockwise_and_varied():
    rng = np.random.default_rng(1)
    M = random_model(rng)
    H = random_history(rng, M.n, nodes=41, span=8.0, smooth=True)
    psi = FreeEnergyFunctional("quadratic_graffi", M)
    rep = clausius_duhem_restrictions(psi, M, H, t=1.0, alphas=(0.2, 0.1, 0.05), components=[0, 9, 12])
    assert set(rep.block_errors) == {"sigma", "z", "S"}
    assert rep.max_error < 1e-8
    sizes = [np.abs(v).max() for v in rep.varied.values()]
    assert sizes[0] > sizes[1] > sizes[2]
    assert sizes[2] < 1e-4


def test_restrictions_need_matching_kernel():
    M, M2 = random_model(1), random_model(2)
    psi = FreeEnergyFunctional("quadratic_graffi", M)
    with pytest.raises(PreconditionError):
        clausius_duhem_restrictions(psi, M2, random_history(3, M.n))


def test_graffi_requires_psd_terms():
    with pytest.raises(PreconditionError):
        FreeEnergyFunctional("quadratic_graffi", scalar_model(1.0, ((1.0, -0.5),)))


def test_unknown_kind():
    with pytest.raises(DomainError):
        FreeEnergyFunctional("helmholtz", scalar_model())


@given(seeds)
def test_dissipation_inequality(seed):
    rng = np.random.default_rng(seed)
    M = random_model(rng)
    psi = FreeEnergyFunctional("quadratic_graffi", M)
    H = random_history(rng, M.n)
    rep = check_dissipation_inequality(psi, random_process(rng, H.initial), H)
    assert rep.holds


def test_relaxed_kinds_on_constants():
    M = scalar_model(2.0)
    up = FreeEnergyFunctional("max_from_source", M)
    down = FreeEnergyFunctional("min_to_source", M)
    H = constant_history([1.5])
    assert evaluate(up, H) == pytest.approx(2.25, rel=1e-4)
    assert evaluate(down, H) == pytest.approx(2.25, rel=1e-4)
