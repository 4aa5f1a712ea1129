"""Amplification formulas against exact enumeration, algebra, and each other."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subamp.amplification import (
    PAClass,
    aligned_profile,
    amplify_delta,
    amplify_epsilon,
    classify_pa,
    deamplify_epsilon,
    eta,
    log_miss_probability,
    multiplicity_weights,
    pa_on_boundary,
)
from subamp.mechanisms import MechanismSpec, profile
from subamp.schemes import MUSTow, MUSTwo, MUSTww, Poisson, WOR, WR

from oracles import eta_mustwo_sum_form, exact_eta, exact_multiplicity_distribution


class TestEta:
    def test_wor_is_ratio(self):
        assert eta(WOR(1000, 400)) == 0.4

    def test_poisson_is_gamma(self):
        assert eta(Poisson(0.37)) == 0.37

    def test_mustow_degenerates_to_wr_at_full_first_stage(self):
        assert eta(MUSTow(1000, 1000, 400)) == pytest.approx(
            eta(WR(1000, 400)), rel=1e-14
        )

    def test_mustwo_equals_wr_closed_form(self):
        assert eta(MUSTwo(1000, 500, 400)) == eta(WR(1000, 400))

    def test_mustwo_closed_form_equals_stage_sum(self):
        for n, b, m in [(1000, 500, 400), (300, 50, 30), (50, 20, 10), (10, 5, 3)]:
            assert eta(MUSTwo(n, b, m)) == pytest.approx(
                eta_mustwo_sum_form(n, b, m), abs=1e-12
            )

    @pytest.mark.parametrize(
        "scheme",
        [WR(5, 3), MUSTww(4, 3, 2), MUSTow(5, 3, 2), MUSTwo(4, 3, 2), WOR(5, 2)],
    )
    def test_exact_enumeration(self, scheme):
        assert eta(scheme) == pytest.approx(float(exact_eta(scheme)), abs=1e-12)

    def test_miss_probability_complements_eta(self):
        for scheme in (WR(100, 30), MUSTow(100, 40, 30), MUSTww(100, 40, 30),
                       MUSTwo(100, 40, 30), WOR(100, 30), Poisson(0.25)):
            assert math.exp(log_miss_probability(scheme)) == pytest.approx(
                1.0 - eta(scheme), abs=1e-12
            )


class TestMultiplicityWeights:
    def test_single_draw(self):
        w = multiplicity_weights(WR(8, 1))
        assert w.shape == (1,)
        assert w[0] == pytest.approx(1.0 / 8.0, abs=1e-15)

    def test_mustwo_matches_wr(self):
        w_two = multiplicity_weights(MUSTwo(300, 50, 30))
        w_wr = multiplicity_weights(WR(300, 30))
        assert np.max(np.abs(w_two - w_wr)) <= 1e-12

    @pytest.mark.parametrize(
        "scheme",
        [WR(5, 3), MUSTww(4, 3, 2), MUSTow(5, 3, 2), MUSTwo(4, 3, 2)],
    )
    def test_exact_enumeration(self, scheme):
        exact = exact_multiplicity_distribution(scheme)
        w = multiplicity_weights(scheme)
        for u in range(1, scheme.m + 1):
            assert w[u - 1] == pytest.approx(
                float(exact.get(u, 0)), abs=1e-12
            ), f"u={u}"

    @pytest.mark.parametrize(
        "scheme",
        [WR(1000, 400), MUSTwo(1000, 500, 400), MUSTow(1000, 500, 400),
         MUSTww(1000, 500, 400), MUSTww(10, 5, 3)],
    )
    def test_weights_sum_to_eta(self, scheme):
        assert multiplicity_weights(scheme).sum() == pytest.approx(
            eta(scheme), abs=1e-12
        )

    def test_rejected_for_set_schemes(self):
        with pytest.raises(ValueError):
            multiplicity_weights(WOR(10, 3))
        with pytest.raises(ValueError):
            multiplicity_weights(Poisson(0.1))


class TestEpsilonMaps:
    def test_identity_at_full_inclusion(self):
        assert amplify_epsilon(1.0, 2.5) == pytest.approx(2.5, rel=1e-15)
        assert deamplify_epsilon(1.0, 0.7) == pytest.approx(0.7, rel=1e-15)

    def test_reference_point(self):
        assert amplify_epsilon(0.4, 1.0) == pytest.approx(0.523, abs=5.1e-4)
        assert deamplify_epsilon(0.4, amplify_epsilon(0.4, 1.0)) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_strictly_increasing(self):
        etas = np.linspace(0.05, 1.0, 40)
        vals = [amplify_epsilon(float(e), 1.3) for e in etas]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        epss = np.linspace(0.0, 6.0, 40)
        vals = [amplify_epsilon(0.3, float(e)) for e in epss]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_ratio_tends_to_eta_at_small_eps(self):
        for eta_value in (0.1, 0.33, 0.9):
            ratio = amplify_epsilon(eta_value, 1e-6) / 1e-6
            assert abs(ratio - eta_value) <= 1e-4

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            amplify_epsilon(0.0, 1.0)
        with pytest.raises(ValueError):
            amplify_epsilon(1.2, 1.0)
        with pytest.raises(ValueError):
            deamplify_epsilon(0.5, -1.0)


@given(
    eta_value=st.floats(1e-6, 1.0, exclude_min=False),
    eps=st.floats(0.0, 30.0),
)
@settings(max_examples=300, deadline=None)
def test_amplify_deamplify_roundtrip(eta_value, eps):
    eps_prime = amplify_epsilon(eta_value, eps)
    assert eps_prime <= eps + 1e-12
    back = deamplify_epsilon(eta_value, eps_prime)
    assert back == pytest.approx(eps, rel=1e-12, abs=1e-12)


class TestAmplifyDelta:
    def test_set_schemes_scale_profile(self):
        mech = MechanismSpec("gaussian", 1.0)
        scheme = WOR(1000, 400)
        for eps in (0.1, 1.0, 3.0):
            assert amplify_delta(scheme, mech, eps) == pytest.approx(
                0.4 * profile(mech, eps), rel=1e-12
            )

    def test_zero_profile_gives_zero(self):
        mech = MechanismSpec("laplace", 0.25)
        assert amplify_delta(WOR(100, 40), mech, 2.0) == 0.0

    @pytest.mark.parametrize(
        "scheme, family, printed",
        [
            (WR(1000, 400), "laplace", "0.026"),
            (MUSTow(1000, 500, 400), "laplace", "0.044"),
            (MUSTow(1000, 500, 400), "gaussian", "0.079"),
        ],
    )
    def test_reference_values(self, scheme, family, printed):
        from reference_values import check_printed

        mech = MechanismSpec(family, 1.0)
        assert check_printed(amplify_delta(scheme, mech, 1.0), printed)

    def test_mustwo_equals_wr_delta(self):
        mech = MechanismSpec("gaussian", 0.5)
        for eps in (0.2, 1.0, 2.0):
            assert amplify_delta(MUSTwo(300, 50, 30), mech, eps) == pytest.approx(
                amplify_delta(WR(300, 30), mech, eps), abs=1e-12
            )


class TestClassification:
    @pytest.mark.parametrize(
        "ratio, gap, expected",
        [
            (0.5, -0.01, PAClass.STRONG),
            (0.5, +0.01, PAClass.WEAK_I),
            (1.2, -0.01, PAClass.WEAK_II),
            (1.2, +0.01, PAClass.DILUTION),
        ],
    )
    def test_quadrants(self, ratio, gap, expected):
        assert classify_pa(ratio, gap) is expected
        assert not pa_on_boundary(ratio, gap)

    def test_boundary_resolves_favorably(self):
        assert classify_pa(0.5, 0.0) is PAClass.STRONG
        assert classify_pa(1.0, -0.01) is PAClass.STRONG
        assert classify_pa(1.0 + 5e-16, 0.0) is PAClass.STRONG
        assert pa_on_boundary(1.0, -0.01)
        assert pa_on_boundary(0.5, 5e-16)


class TestAlignedProfile:
    def test_wor_gaussian_never_worsens_delta(self):
        points = aligned_profile(
            WOR(1000, 400), MechanismSpec("gaussian", 0.25), np.linspace(0.05, 6.0, 120)
        )
        assert all(p.delta_gap <= 0.0 for p in points)
        assert all(
            p.pa_class is PAClass.STRONG or p.on_boundary for p in points
        )

    def test_weak_point(self):
        (point,) = aligned_profile(
            MUSTww(1000, 500, 400), MechanismSpec("laplace", 1.0), [1.0]
        )
        assert point.pa_class is PAClass.WEAK_I
        assert point.eps_ratio == pytest.approx(0.346, abs=5.1e-4)
        assert point.delta_gap == pytest.approx(0.052, abs=5.1e-4)
        assert point.neighboring == "S"

    def test_ratio_below_one_for_partial_inclusion(self):
        for scheme in (WR(50, 10), MUSTow(50, 20, 10), Poisson(0.2)):
            points = aligned_profile(
                scheme, MechanismSpec("gaussian", 1.0), np.linspace(0.1, 4.0, 25)
            )
            assert all(p.eps_ratio < 1.0 for p in points)

    def test_grid_validation(self):
        mech = MechanismSpec("gaussian", 1.0)
        with pytest.raises(ValueError):
            aligned_profile(WOR(10, 2), mech, [0.0, 1.0])
        with pytest.raises(ValueError):
            aligned_profile(WOR(10, 2), mech, [1.0, 0.5])
        with pytest.raises(ValueError):
            aligned_profile(WOR(10, 2), mech, [])


class TestOrderings:
    def test_eta_ordering_small_sweep(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(3, 2000))
            b = int(rng.integers(1, n))
            m = int(rng.integers(1, min(b, 500) + 1))
            e_ow = eta(MUSTow(n, b, m))
            e_wr = eta(WR(n, m))
            e_wor = eta(WOR(n, m))
            assert e_ow <= e_wr * (1 + 1e-12)
            assert e_wr <= e_wor * (1 + 1e-12)
            if m > 1:
                assert e_ow < e_wr
                assert e_wr < e_wor
            else:
                assert e_ow == pytest.approx(e_wr, rel=1e-12)
                assert e_wr == pytest.approx(e_wor, rel=1e-12)

    def test_mustow_eta_monotone_in_b_and_m(self):
        # Contour-sweep region: eta rises with both stage sizes.
        n = 1000
        for m in (100, 125, 150):
            vals = [eta(MUSTow(n, b, m)) for b in range(150, 201)]
            assert all(y >= x for x, y in zip(vals, vals[1:]))
        for b in (150, 175, 200):
            vals = [eta(MUSTow(n, b, m)) for m in range(100, 151)]
            assert all(y >= x for x, y in zip(vals, vals[1:]))

    def test_mustww_eta_monotone_in_b_and_m(self):
        n = 1000
        for m in (100, 150):
            vals = [eta(MUSTww(n, b, m)) for b in range(150, 201, 5)]
            assert all(y >= x - 1e-15 for x, y in zip(vals, vals[1:]))
        for b in (150, 200):
            vals = [eta(MUSTww(n, b, m)) for m in range(100, 151, 5)]
            assert all(y >= x - 1e-15 for x, y in zip(vals, vals[1:]))


@given(
    n=st.integers(2, 400),
    b=st.integers(1, 400),
    m=st.integers(1, 60),
)
@settings(max_examples=150, deadline=None)
def test_weight_sum_property(n, b, m):
    scheme = MUSTww(n, b, m)
    assert multiplicity_weights(scheme).sum() == pytest.approx(
        eta(scheme), abs=1e-12
    )
