import pytest

from putraffic.services.verification import (
    check_asymptotes,
    check_averaging_mse,
    check_determinant_and_routes,
    check_fisher_identity,
    check_likelihoods,
    rel_err,
    run_verification,
)
from putraffic.utils.rng import make_rng


def test_rel_err():
    assert rel_err(1.1, 1.0) == pytest.approx(0.1)
    assert rel_err(1e-12, 0.0, scale=1.0) == pytest.approx(1e-12)


def test_fisher_identity():
    check = check_fisher_identity(5, make_rng(1), points=10)
    assert check.passed, check


def test_determinant_and_routes():
    assert all(check.passed for check in check_determinant_and_routes(make_rng(2), points=30))


def test_likelihoods():
    assert all(check.passed for check in check_likelihoods(8, make_rng(3), cases=40))


def test_averaging_mse():
    assert all(check.passed for check in check_averaging_mse(8, make_rng(4)))


def test_asymptotes():
    checks = check_asymptotes(make_rng(5), points=20)
    assert [c.name for c in checks] == ['asymptote_values', 'limit_convergence', 'doubling_identity']
    assert all(check.passed for check in checks)


@pytest.mark.slow
def test_full_suite():
    seen = []
    checks = run_verification(max_n=10, seed=0, progress=seen.append)
    assert seen == checks
    assert all(check.passed for check in checks)
