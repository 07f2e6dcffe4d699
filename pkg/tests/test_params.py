import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccfsim.params import (
    AlphaParams,
    AtwoodParams,
    ParameterError,
    alpha_to_atwood,
    atwood_to_alpha,
    event_class_rates,
    validate_alpha,
    validate_atwood,
)
from oracles import enumerated_event_rates

from conftest import REF_ALPHA, REF_ATWOOD


def rel(a, b):
    return abs(a - b) / abs(b)


class TestValidate:
    def test_reference_atwood_accepted(self, ref_atwood):
        assert validate_atwood(ref_atwood) is ref_atwood

    def test_all_zero_accepted(self):
        p = AtwoodParams(0, 0, 0, 0)
        assert validate_atwood(p) == p

    def test_rho_out_of_range(self):
        with pytest.raises(ParameterError, match="rho out of range"):
            validate_atwood(AtwoodParams(1e-6, 1e-5, 1.2, 1e-3))

    @pytest.mark.parametrize("field", ["omega", "mu", "lambda_ind"])
    def test_negative_rate_named(self, field):
        kw = dict(omega=1e-6, mu=1e-5, rho=0.5, lambda_ind=1e-3)
        kw[field] = -1.0
        with pytest.raises(ParameterError, match=field):
            validate_atwood(AtwoodParams(**kw))

    def test_alpha_renormalised_with_warning(self, ref_alpha):
        with pytest.warns(UserWarning, match="alpha_1"):
            a = validate_alpha(ref_alpha)
        assert math.isclose(sum(a.alpha), 1.0, abs_tol=1e-15)
        assert a.alpha[1:] == ref_alpha.alpha[1:]

    def test_alpha_exact_sum_no_warning(self):
        a = AlphaParams.from_ccf_alphas([0.01, 0.02, 0.005], 1e-3)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert validate_alpha(a) == a

    def test_alpha_out_of_range(self):
        with pytest.raises(ParameterError, match="alpha_2"):
            validate_alpha(AlphaParams(m=3, alpha=(0.5, 1.5, 0.0), lambda_tot=1e-3))


class TestEventClassRates:
    def test_reference_atwood_frozen(self, ref_atwood):
        # frozen from enumerated_event_rates(2.04e-6, 8.71e-5, 0.492, 1.14e-3, 4)
        n = event_class_rates(ref_atwood, 4)
        assert n[2] == pytest.approx(3.264577894056961e-05, rel=1e-12)
        assert n[3] == pytest.approx(2.1078376953753602e-05, rel=1e-12)
        assert n[4] == pytest.approx(7.1436227663615995e-06, rel=1e-12)
        assert n[1] == pytest.approx(0.004582471620192153, rel=1e-12)

    @given(
        omega=st.floats(0, 1e-3), mu=st.floats(0, 1e-2), rho=st.floats(0, 1), lam=st.floats(0, 1e-2),
        m=st.integers(2, 7),
    )
    def test_matches_enumeration(self, omega, mu, rho, lam, m):
        n = event_class_rates(AtwoodParams(omega, mu, rho, lam), m)
        for got, want in zip(n.n, enumerated_event_rates(omega, mu, rho, lam, m)):
            assert got == pytest.approx(want, rel=1e-12, abs=1e-300)

    def test_no_shocks(self):
        n = event_class_rates(AtwoodParams(0, 0, 0.5, 1e-3), 4)
        assert n.n == (4e-3, 0.0, 0.0, 0.0)

    def test_lethal_only(self):
        n = event_class_rates(AtwoodParams(5e-6, 0, 0, 0), 4)
        assert n.n == (0.0, 0.0, 0.0, 5e-6)


class TestAtwoodToAlpha:
    def test_reference_atwood_reproduces_alpha(self, ref_atwood):
        a = atwood_to_alpha(ref_atwood, 4)
        for k in (2, 3, 4):
            assert rel(a[k], REF_ALPHA[k]) < 0.015
        assert a[2] == pytest.approx(7.03e-3, rel=2e-3)
        assert a[3] == pytest.approx(4.54e-3, rel=2e-3)
        assert a[4] == pytest.approx(1.54e-3, rel=2e-3)
        assert a.lambda_tot == pytest.approx(1.185e-3, rel=1e-3)

    def test_independent_only(self):
        a = atwood_to_alpha(AtwoodParams(0, 0, 0.3, 1e-3), 4)
        assert a.alpha == (1.0, 0.0, 0.0, 0.0)
        assert a.lambda_tot == 1e-3

    def test_lethal_only(self):
        a = atwood_to_alpha(AtwoodParams(1e-6, 0, 0, 0), 4)
        assert a.alpha == (0.0, 0.0, 0.0, 1.0)
        assert a.lambda_tot == 1e-6

    def test_no_events(self):
        with pytest.raises(ParameterError, match="no failure events"):
            atwood_to_alpha(AtwoodParams(0, 0, 0, 0), 4)

    @given(omega=st.floats(0, 1e-3), mu=st.floats(1e-8, 1e-2), rho=st.floats(0.0, 1.0),
           lam=st.floats(1e-8, 1e-2))
    def test_alphas_sum_to_one(self, omega, mu, rho, lam):
        a = atwood_to_alpha(AtwoodParams(omega, mu, rho, lam), 4)
        assert abs(math.fsum(a.alpha) - 1.0) < 1e-12


class TestAlphaToAtwood:
    def test_reference_alpha_to_atwood(self, ref_alpha):
        with pytest.warns(UserWarning):
            p = alpha_to_atwood(ref_alpha)
        for name in ("omega", "mu", "rho", "lambda_ind"):
            assert rel(getattr(p, name), getattr(REF_ATWOOD, name)) < 0.02, name

    def test_lambda_identity(self):
        p = alpha_to_atwood(AlphaParams.from_ccf_alphas([7.06e-3, 4.55e-3, 1.54e-3], 1.18e-3))
        assert rel(p.lambda_ind + p.mu * p.rho + p.omega, 1.18e-3) < 1e-12

    def test_no_ccf(self):
        p = alpha_to_atwood(AlphaParams(m=4, alpha=(1, 0, 0, 0), lambda_tot=1e-3))
        assert p == AtwoodParams(0.0, 0.0, 0.0, 1e-3)

    def test_pure_lethal_refused_by_default(self):
        a = AlphaParams.from_ccf_alphas([0, 0, 1.54e-3], 1.18e-3)
        with pytest.raises(ParameterError, match="inconsistent"):
            alpha_to_atwood(a)
        p = alpha_to_atwood(a, allow_pure_lethal=True)
        assert p.mu == 0 and p.rho == 0
        assert atwood_to_alpha(p, 4).alpha == pytest.approx(a.alpha, rel=1e-12)

    def test_negative_solution_rejected(self):
        # alpha_4 far below what the non-lethal classes imply: omega would be negative
        a = AlphaParams.from_ccf_alphas([7e-3, 4.5e-3, 1e-5], 1e-3)
        with pytest.raises(ParameterError, match="inconsistent"):
            alpha_to_atwood(a)

    def test_missing_lower_class_rejected(self):
        with pytest.raises(ParameterError, match="inconsistent"):
            alpha_to_atwood(AlphaParams.from_ccf_alphas([0, 4.5e-3, 1.5e-3], 1e-3))

    def test_small_group_not_identifiable(self):
        with pytest.raises(ParameterError, match="too small"):
            alpha_to_atwood(AlphaParams.from_ccf_alphas([1e-2, 1e-3], 1e-3))

    @given(omega=st.floats(1e-7, 1e-2), mu=st.floats(1e-7, 1e-2), rho=st.floats(0.01, 0.99),
           lam=st.floats(1e-7, 1e-2))
    @settings(max_examples=300)
    def test_round_trip(self, omega, mu, rho, lam):
        p = AtwoodParams(omega, mu, rho, lam)
        back = alpha_to_atwood(atwood_to_alpha(p, 4))
        for name in ("omega", "mu", "rho", "lambda_ind"):
            assert rel(getattr(back, name), getattr(p, name)) < 1e-9, name
        assert rel(back.lambda_ind + back.mu * back.rho + back.omega, p.lambda_tot) < 1e-12

    @given(scale=st.floats(0.01, 20.0))
    def test_rho_depends_only_on_ratio(self, scale):
        ccf = [7.06e-3, 4.55e-3, 1.54e-3]
        base = alpha_to_atwood(AlphaParams.from_ccf_alphas(ccf, 1.18e-3))
        p = alpha_to_atwood(AlphaParams.from_ccf_alphas([x * scale for x in ccf], 1.18e-3))
        assert p.rho == pytest.approx(base.rho, rel=1e-13)

    @pytest.mark.parametrize("m", [5, 6])
    def test_larger_groups_round_trip(self, m):
        p = AtwoodParams(3e-6, 9e-5, 0.3, 1e-3)
        back = alpha_to_atwood(atwood_to_alpha(p, m))
        for name in ("omega", "mu", "rho", "lambda_ind"):
            assert rel(getattr(back, name), getattr(p, name)) < 1e-9
