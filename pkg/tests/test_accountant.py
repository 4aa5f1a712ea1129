"""FFT composition against quadrature, direct convolution, and its own bounds."""

import numpy as np
import pytest

from subamp.accountant import (
    EpsilonBeyondGridError,
    NonFiniteError,
    compose,
    compose_many,
    delta_direct,
)
from subamp.pld import PrivacyLossModel, discretize
from subamp.schemes import MUSTow, MUSTww, Poisson, WOR, WR

POISSON_MODEL = PrivacyLossModel(Poisson(0.02, n=100), 2.0)
WOR_MODEL = PrivacyLossModel(WOR(1000, 200), 2.0)
FIG_MODEL = PrivacyLossModel(MUSTow(10_000, 118, 200), 4.0)


@pytest.fixture(scope="module")
def poisson_pld():
    return discretize(POISSON_MODEL, 10.0, 100_000)


@pytest.fixture(scope="module")
def fig_pld():
    return discretize(FIG_MODEL, 10.0, 1 << 17)


@pytest.fixture(scope="module")
def fig_pld_fine():
    # The k-sweep needs the finer production grid: at r = 2^17 the lower
    # bound's sub-probability mass (sum c- = 0.9922) decays faster with k
    # than its tail grows, and monotonicity genuinely breaks past k = 800.
    return discretize(FIG_MODEL, 10.0, 300_000)


class TestSingleComposition:
    def test_poisson_matches_quadrature(self, poisson_pld):
        for eps in (0.1, 0.3, 0.5):
            fft_val = compose(poisson_pld, 1, eps).delta_approx
            quad_val = delta_direct(POISSON_MODEL, eps)
            assert abs(fft_val - quad_val) <= 1e-6

    def test_wor_matches_quadrature(self):
        pld = discretize(WOR_MODEL, 10.0, 100_000)
        for eps in (0.1, 0.5, 1.0):
            fft_val = compose(pld, 1, eps).delta_approx
            quad_val = delta_direct(WOR_MODEL, eps)
            assert abs(fft_val - quad_val) <= 1e-6

    def test_multiset_matches_quadrature(self, fig_pld):
        for eps in (0.5, 1.0):
            fft_val = compose(fig_pld, 1, eps).delta_approx
            quad_val = delta_direct(FIG_MODEL, eps)
            assert abs(fft_val - quad_val) <= 1e-4

    def test_symmetric_swap_gives_same_delta(self):
        # For the two-sided schemes the swapped tail integral is identical.
        from subamp.pld import log_output_density, loss_at

        model = WOR_MODEL
        eps = 0.3
        from scipy import integrate

        def swapped(t):
            t = np.asarray(t, dtype=float)
            gain = -np.expm1(eps + loss_at(model, t))  # 1 - e^{eps - (-L(t))}
            return np.maximum(gain, 0.0) * np.exp(log_output_density(model, -t))

        # L_{X'/X}(t) = -L(t) and f_{X'}(t) = f_X(-t); substitute u = -t.
        val, _ = integrate.quad(swapped, -90.0, 90.0, limit=300)
        assert val == pytest.approx(delta_direct(model, eps), abs=1e-9)

    def test_negligible_tail_at_grid_edge(self, poisson_pld):
        eps = 10.0 - 2.0 * poisson_pld.dx
        assert compose(poisson_pld, 1, eps).delta_approx <= 1e-12


class TestBoundsAndMonotonicity:
    def test_bracketing(self, fig_pld):
        for k in (1, 10, 200):
            res = compose(fig_pld, k, 1.0)
            assert res.delta_lower <= res.delta_approx <= res.delta_upper

    def test_monotone_in_k(self, fig_pld_fine):
        cells = compose_many(fig_pld_fine, [200, 400, 600, 800, 1000], [1.0])
        lowers = [c.result.delta_lower for c in cells]
        approxs = [c.result.delta_approx for c in cells]
        uppers = [c.result.delta_upper for c in cells]
        assert all(b > a for a, b in zip(lowers, lowers[1:]))
        assert all(b > a for a, b in zip(approxs, approxs[1:]))
        assert all(b > a for a, b in zip(uppers, uppers[1:]))

    def test_monotone_in_eps(self, fig_pld):
        cells = compose_many(fig_pld, [400], [0.25, 0.5, 1.0, 2.0, 4.0])
        vals = [c.result.delta_approx for c in cells]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_refinement_shrinks_bound_gap(self):
        coarse = compose(discretize(POISSON_MODEL, 10.0, 100_000), 1, 0.1)
        fine = compose(discretize(POISSON_MODEL, 10.0, 200_000), 1, 0.1)
        gap_coarse = coarse.delta_upper - coarse.delta_lower
        gap_fine = fine.delta_upper - fine.delta_lower
        assert gap_coarse >= 1.5 * gap_fine


class TestSweep:
    def test_single_cell_matches_compose(self, poisson_pld):
        (cell,) = compose_many(poisson_pld, [3], [0.2])
        direct = compose(poisson_pld, 3, 0.2)
        assert cell.result.delta_approx == direct.delta_approx
        assert cell.result.delta_lower == direct.delta_lower

    def test_shared_spectrum_consistency(self, poisson_pld):
        cells = compose_many(poisson_pld, [2], [0.1, 0.4])
        singles = [compose(poisson_pld, 2, e).delta_approx for e in (0.1, 0.4)]
        assert [c.result.delta_approx for c in cells] == singles

    def test_errors_collected_not_raised(self, poisson_pld):
        cells = compose_many(poisson_pld, [1], [0.5, 99.0])
        assert cells[0].error is None
        assert cells[1].error is not None and cells[1].result is None

    def test_direct_convolution_cross_check(self):
        # k = 2 against an explicit linear convolution wrapped onto the grid.
        pld = discretize(WOR_MODEL, 6.0, 512)
        r, dx = pld.grid_r, pld.dx
        full = np.convolve(pld.c, pld.c)  # support starts at -2L
        wrapped = np.zeros(r)
        for idx in range(full.size):
            s_val = -12.0 + idx * dx
            j = round((s_val + 6.0) / dx) % r
            wrapped[j] += full[idx]
        res = compose(pld, 2, 0.5)
        i_eps = int(np.searchsorted(pld.s, 0.5, side="right"))
        ref = float(
            (-np.expm1(0.5 - pld.s[i_eps:])) @ wrapped[i_eps:]
        )
        assert res.delta_approx == pytest.approx(ref, abs=1e-12)


class TestFailureModes:
    def test_epsilon_beyond_grid(self, poisson_pld):
        with pytest.raises(EpsilonBeyondGridError):
            compose(poisson_pld, 1, 10.0)

    def test_k_validation(self, poisson_pld):
        with pytest.raises(ValueError):
            compose(poisson_pld, 0, 1.0)

    def test_unresolved_spike_surfaces_nonfinite(self):
        # Exactly-calibrated noise on a rare-inclusion scheme concentrates
        # the loss in ~1 grid cell; the upper-bound spectrum overflows and
        # must surface as diagnostics instead of a silently clamped number.
        model = PrivacyLossModel(Poisson(100 / 30969, n=30969), 144.4)
        pld = discretize(model, 6.0, 1 << 17)
        with pytest.raises(NonFiniteError) as excinfo:
            compose(pld, 1000, 2.0)
        assert "stage" in excinfo.value.diagnostics

    def test_diagnostics_recorded(self, poisson_pld):
        res = compose(poisson_pld, 5, 0.5)
        d = res.diagnostics
        assert d.grid_r == 100_000
        assert d.trunc_L == 10.0
        assert abs(d.mass_defect) < 2e-3
        assert d.floored_mass >= 0.0
        assert not d.nonfinite_flag


class TestAmplifyPathConsistency:
    def test_poisson_tail_equals_amplified_profile(self):
        # For Poisson the subsampled pair satisfies the exact identity
        # delta(eps') = eta * delta_base(deamplified eps), so the loss-side
        # tail integral must reproduce the amplification-side closed form.
        from subamp.amplification import deamplify_epsilon
        from subamp.mechanisms import MechanismSpec, profile

        for q, sig in ((0.02, 2.0), (0.1, 1.0)):
            model = PrivacyLossModel(Poisson(q, n=100), sig)
            for eps_prime in (0.05, 0.3, 1.0):
                tight = delta_direct(model, eps_prime)
                eps_base = deamplify_epsilon(q, eps_prime)
                closed = q * profile(MechanismSpec("gaussian", 1.0 / sig), eps_base)
                if closed > 1e-12:
                    assert tight == pytest.approx(closed, rel=1e-9)
                else:
                    assert abs(tight - closed) <= 1e-12

    def test_amplification_bound_dominates_tight_delta(self):
        # The closed-form delta' (per-copy displacement 2 under
        # substitution) upper-bounds the tight loss-side value.
        from subamp.amplification import amplify_delta, deamplify_epsilon, eta
        from subamp.mechanisms import MechanismSpec

        for scheme, sig in ((WOR(1000, 200), 2.0), (WR(1000, 200), 4.0),
                            (MUSTow(1000, 200, 100), 2.0)):
            model = PrivacyLossModel(scheme, sig)
            for eps_prime in (0.1, 0.5, 1.0):
                tight = delta_direct(model, eps_prime)
                eps_base = deamplify_epsilon(eta(scheme), eps_prime)
                bound = amplify_delta(
                    scheme, MechanismSpec("gaussian", 2.0 / sig), eps_base
                )
                assert bound >= tight - 1e-12


class TestDeltaDirect:
    def test_validation(self):
        with pytest.raises(ValueError):
            delta_direct(POISSON_MODEL, -1.0)

    def test_mustww_small_config(self):
        model = PrivacyLossModel(MUSTww(100, 20, 10), 2.0)
        pld = discretize(model, 8.0, 1 << 16)
        for eps in (0.2, 1.0):
            assert compose(pld, 1, eps).delta_approx == pytest.approx(
                delta_direct(model, eps), abs=1e-4
            )
