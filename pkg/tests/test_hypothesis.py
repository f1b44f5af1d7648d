from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qirange import (
    ALL_PROTOCOLS,
    ChannelParams,
    DegenerateEtaError,
    InvalidParameterError,
    PriorPair,
    Protocol,
    UnsupportedProtocolError,
    closed_form_error,
    error_probability,
    error_ratio,
)
from qirange.montecarlo import estimate_error_probability

P = ChannelParams(n_b=0.01, m_modes=100, eta=0.1)


def random_grid(n=1000, seed=7):
    rng = np.random.default_rng(seed)
    return [
        ChannelParams(nb, m, eta)
        for nb, m, eta in zip(rng.uniform(1e-6, 0.1, n), rng.uniform(2, 1e4, n), rng.uniform(1e-6, 1, n))
    ]


class TestErrorProbability:
    def test_qi1_reference(self):
        expected = 0.5 * (0.01 / 100 + (1 - 0.01 / 100) * (1 - 0.1))
        report = error_probability("qi1", P)
        assert report.p_err == pytest.approx(0.450005, rel=1e-14)
        assert report.p_err == pytest.approx(expected, abs=1e-16)
        assert not report.closed_form_used and not report.upper_bound

    def test_qi1_matches_oracle(self):
        out = estimate_error_probability("qi1", P, PriorPair(), 10_000_000, seed=21)
        assert abs(out.z_score(0.450005)) <= 4

    def test_qi2_reference(self):
        report = error_probability("qi2", P)
        assert report.p_err == pytest.approx(0.4500000005, rel=1e-14)
        assert report.upper_bound
        assert abs(report.p_err - closed_form_error("qi2", P)) <= 1e-15

    @pytest.mark.parametrize("protocol", ALL_PROTOCOLS)
    def test_perfect_discrimination(self, protocol):
        assert error_probability(protocol, ChannelParams(0.0, 100, 1.0)).p_err == 0.0

    def test_asymmetric_priors(self):
        priors = PriorPair(0.8, 0.2)
        report = error_probability("qi1", P, priors)
        assert report.p_err == pytest.approx(0.8 * 1e-4 + 0.2 * 0.89991, rel=1e-14)
        out = estimate_error_probability("qi1", P, priors, 2_000_000, seed=22)
        assert abs(out.z_score(report.p_err)) <= 4

    def test_multi_shot_uses_powers(self):
        report = error_probability("qi1", P, shots=3)
        assert report.p_err == pytest.approx(0.5 * (1e-4**3 + 0.89991**3), rel=1e-13)

    def test_closed_form_route(self):
        report = error_probability("qi2", P, use_closed_form=True)
        assert report.closed_form_used and report.upper_bound
        assert error_probability("ci1", P, use_closed_form=True).closed_form_used is False

    @pytest.mark.parametrize("protocol", [Protocol.QI1, Protocol.QI2])
    def test_closed_form_identity_on_grid(self, protocol):
        for params in random_grid():
            assert abs(closed_form_error(protocol, params) - error_probability(protocol, params).p_err) <= 1e-15

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(1e-6, 0.1, exclude_max=True),
        st.floats(2, 1e4),
        st.floats(0.0, 0.99),
        st.floats(1e-4, 0.01),
        st.sampled_from(ALL_PROTOCOLS),
    )
    def test_monotone(self, n_b, m, eta, step, protocol):
        base = error_probability(protocol, ChannelParams(n_b, m, eta)).p_err
        more_eta = error_probability(protocol, ChannelParams(n_b, m, min(1.0, eta + step))).p_err
        more_nb = error_probability(protocol, ChannelParams(min(n_b * (1 + step), 0.1), m, eta)).p_err
        # finite-difference signs, up to rounding of the ~0.5-sized values
        assert more_eta <= base + 1e-15
        assert more_nb >= base - 1e-15
        assert base <= 0.5


class TestClosedForm:
    def test_references(self):
        assert closed_form_error("qi1", P) == pytest.approx(0.450005, rel=1e-14)
        assert closed_form_error("qi2", P) == pytest.approx(0.4500000005, rel=1e-14)
        assert abs(closed_form_error("qi1", P) - error_probability("qi1", P).p_err) <= 1e-15

    def test_coin_flip_without_target_return(self):
        assert closed_form_error("qi1", ChannelParams(0.01, 100, 0.0)) == 0.5

    @pytest.mark.parametrize("protocol", ["ci1", "ci2"])
    def test_classical_unsupported(self, protocol):
        with pytest.raises(UnsupportedProtocolError):
            closed_form_error(protocol, P)


class TestErrorRatio:
    def test_reference(self):
        expected = (1 - 0.1 + 0.1 * 1e-8) / (1 - 0.1 + 0.1 * 1e-4)
        assert error_ratio(P) == pytest.approx(expected, rel=1e-14)
        assert error_ratio(P) == pytest.approx(0.99998889, rel=1e-8)
        assert error_ratio(P) < 1

    def test_full_reflection_gives_gate_ratio(self):
        assert error_ratio(ChannelParams(0.01, 100, 1.0)) == pytest.approx(1e-4, rel=1e-12)

    def test_tends_to_one_for_vanishing_gate(self):
        assert error_ratio(ChannelParams(1e-12, 1e6, 0.5)) == pytest.approx(1.0, abs=1e-15)

    def test_degenerate_eta(self):
        with pytest.raises(DegenerateEtaError):
            error_ratio(ChannelParams(0.01, 100, 0.0))

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(1e-6, 0.1, exclude_max=True), st.floats(2, 1e4), st.floats(1e-6, 1.0))
    def test_strictly_below_one(self, n_b, m, eta):
        params = ChannelParams(n_b, m, eta)
        ratio = error_ratio(params)
        assert ratio < 1
        g = Fraction(n_b) / Fraction(m)
        e = Fraction(eta)
        exact = (1 - e + e * g * g) / (1 - e + e * g)
        assert ratio == pytest.approx(float(exact), rel=1e-12)


@pytest.mark.parametrize("p0, p1", [(0.7, 0.2), (-0.1, 1.1), (1.5, -0.5)])
def test_bad_priors(p0, p1):
    with pytest.raises(InvalidParameterError):
        PriorPair(p0, p1)


def test_prior_from_p0():
    assert PriorPair.from_p0(0.3) == PriorPair(0.3, 0.7)
    assert PriorPair().symmetric
