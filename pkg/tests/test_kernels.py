import numpy as np
import pytest

from conftest import scalar_model
from memorium import BlockLayout, ConfigError, DomainError, PronyKernel, check_dissipative, model_from_dict
from memorium.kernels import block_tail_bound, eval_G, eval_Gdot, tail_integral_abs
from memorium.sampling import random_model


def test_eval_and_derivative_by_finite_difference():
    M = random_model(4, BlockLayout(1))
    s, h = 0.7, 1e-5
    fd = (eval_G(M, s + h) - eval_G(M, s - h)) / (2 * h)
    assert np.allclose(eval_Gdot(M, s), fd, atol=1e-8)
    assert np.allclose(eval_G(M, 0.0), M.kernel.G0)
    assert np.allclose(eval_G(M, 1e6), M.kernel.G_inf)


def test_tail_bounds_dominate_integral():
    M = random_model(2, BlockLayout(1))
    p = 1.5
    s = np.linspace(p, p + 200, 200001)
    vals = np.linalg.norm(eval_Gdot(M, s), axis=(1, 2))
    integral = np.trapezoid(vals, s) if hasattr(np, "trapezoid") else np.trapz(vals, s)
    assert integral <= tail_integral_abs(M, p) * (1 + 1e-9)
    assert block_tail_bound(M, p) > 0


def test_bad_relaxation_time():
    with pytest.raises(DomainError):
        PronyKernel(np.eye(2), [0.0], np.zeros((1, 2, 2)))


def test_model_from_dict_forms():
    L = BlockLayout(1)
    spec = {
        "G_inf": {"identity": 2.0},
        "terms": [{"tau": 1.0, "C": [{"block": "sigma_W", "values": list(np.eye(9).ravel())}]}],
    }
    M = model_from_dict(spec, L)
    assert np.allclose(M.kernel.G_inf, 2 * np.eye(13))
    assert M.kernel.C[0][:9, :9].trace() == 9.0 and M.kernel.C[0][9:, :].sum() == 0
    with pytest.raises(ConfigError) as err:
        model_from_dict({"G_inf": {"identity": 1}, "terms": [{"tau": 1, "C": [{"block": "q_W", "values": []}]}]}, L)
    assert err.value.path == "model.terms[0].C[0].block"
    with pytest.raises(ConfigError):
        model_from_dict({"terms": []}, L)


def test_dissipativity_search():
    assert check_dissipative(scalar_model(1.0, ((1.0, 1.0),))).verdict == "no_violation_found"
    bad = check_dissipative(scalar_model(1.0, ((1.0, -2.0),)))
    assert bad.verdict == "violation" and bad.w_value < 0 and bad.history is not None
