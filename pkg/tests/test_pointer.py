import numpy as np
import pytest
from hypothesis import given, settings
from scipy.integrate import quad

from weakphase.errors import GridError, PostselectionSingular, ResolutionError
from weakphase.pointer import (
    CouplingConfig,
    GridSpec,
    closed_form_moments,
    initial_pointer,
    moments,
    postselected_pointer,
    postselection_probability,
)
from weakphase.state import basis, haar_random_state, inner
from weakphase.weaklab import predicted_shifts, weak_value

from conftest import phases, random_states, seeds


def quad_moments(a, b, c, cfg):
    """Moments of the exact pointer by adaptive quadrature in position space."""
    ca = inner(c, a)
    v = inner(c, b) * inner(b, a)
    k, s, hbar = cfg.kappa, cfg.sigma, cfg.hbar

    def m(q):
        return (ca + (np.exp(-1j * k * q) - 1) * v) * np.exp(-q * q / (2 * s * s)) * (np.pi * s * s) ** -0.25

    def dm(q):
        g = np.exp(-q * q / (2 * s * s)) * (np.pi * s * s) ** -0.25
        f = ca + (np.exp(-1j * k * q) - 1) * v
        return (-1j * k * v * np.exp(-1j * k * q)) * g + f * (-q / (s * s)) * g

    lim = 12 * s
    norm = quad(lambda q: abs(m(q)) ** 2, -lim, lim, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    mq = quad(lambda q: q * abs(m(q)) ** 2, -lim, lim, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    mp = quad(lambda q: (np.conj(m(q)) * -1j * hbar * dm(q)).real, -lim, lim, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return mq / norm, mp / norm, norm


class TestConfig:
    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            CouplingConfig(0.1, sigma=0.0)

    def test_rejects_bad_hbar(self):
        with pytest.raises(ValueError):
            CouplingConfig(0.1, hbar=-1.0)

    def test_negative_kappa_allowed(self):
        assert CouplingConfig(-0.2, 2.0).strength == pytest.approx(0.4)

    @pytest.mark.parametrize("points", [128, 1000, 3000])
    def test_grid_points(self, points):
        with pytest.raises(GridError):
            GridSpec(points=points)

    def test_grid_extent(self):
        with pytest.raises(GridError):
            GridSpec(extent=5.0)


class TestInitialPointer:
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
    def test_gaussian_moments(self, sigma):
        cfg = CouplingConfig(0.0, sigma)
        wf = initial_pointer(cfg)
        assert wf.norm_squared == pytest.approx(1.0, abs=1e-10)
        mq, mp, var, norm = moments(wf, cfg)
        assert mq == pytest.approx(0.0, abs=1e-12)
        assert mp == pytest.approx(0.0, abs=1e-12)
        assert var == pytest.approx(sigma**2 / 2, abs=1e-8)
        assert norm == pytest.approx(1.0, abs=1e-10)

    def test_real(self):
        assert np.all(initial_pointer(CouplingConfig(0.1)).values.imag == 0)


class TestPostselectedPointer:
    def test_orthogonal_projector(self):
        a, c = haar_random_state(2, 1), haar_random_state(2, 2)
        b = basis(2, 0)
        a = type(a).normalized([0, 1])
        cfg = CouplingConfig(0.2)
        wf = postselected_pointer(a, b, c, cfg)
        expected = inner(c, a) * initial_pointer(cfg).values
        np.testing.assert_allclose(wf.values, expected, atol=1e-15)
        m = moments(wf, cfg)
        assert (m.mean_q, m.mean_p) == pytest.approx((0, 0), abs=1e-12)

    def test_zero_coupling(self):
        a, b, c = random_states(np.random.default_rng(3), 3, 3)
        cfg = CouplingConfig(0.0)
        wf = postselected_pointer(a, b, c, cfg)
        np.testing.assert_allclose(wf.values, inner(c, a) * initial_pointer(cfg).values, atol=1e-15)
        assert wf.norm_squared == pytest.approx(abs(inner(c, a)) ** 2, abs=1e-12)
        m = moments(wf, cfg)
        assert (m.mean_q, m.mean_p) == pytest.approx((0, 0), abs=1e-12)

    def test_octant_position_shift(self, octant):
        cfg = CouplingConfig(0.01, 1.0)
        m = moments(postselected_pointer(*octant, cfg), cfg)
        assert m.mean_q == pytest.approx(-0.005, rel=1e-3)

    def test_singular_postselection(self):
        with pytest.raises(PostselectionSingular):
            postselected_pointer(basis(2, 0), basis(2, 0), basis(2, 1), CouplingConfig(0.1))

    def test_values_read_only(self, octant):
        wf = postselected_pointer(*octant, CouplingConfig(0.1))
        with pytest.raises(ValueError):
            wf.values[0] = 0


class TestMoments:
    def test_octant_weak_limit(self, octant):
        cfg = CouplingConfig(0.01, 1.0, 1.0)
        m = moments(postselected_pointer(*octant, cfg), cfg)
        dq, dp = predicted_shifts(weak_value(*octant), cfg)
        assert (dq, dp) == pytest.approx((-0.005, -0.005), abs=1e-15)
        assert abs(m.mean_q - dq) / abs(dq) < 1e-3
        assert abs(m.mean_p - dp) / abs(dp) < 1e-3

    def test_resolution_guard(self, octant):
        cfg = CouplingConfig(30.0)
        wf = postselected_pointer(*octant, cfg, GridSpec(points=256))
        with pytest.raises(ResolutionError):
            moments(wf, cfg)

    @pytest.mark.parametrize("hbar", [1.0, 0.3, 2.5])
    def test_hbar_threading(self, octant, hbar):
        cfg = CouplingConfig(0.1, 1.3, hbar)
        m = moments(postselected_pointer(*octant, cfg), cfg)
        assert m.mean_p == pytest.approx(closed_form_moments(*octant, cfg).mean_p, abs=1e-12)

    def test_quadrature_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            d = int(rng.integers(2, 4))
            a, b, c = random_states(rng, d, 3)
            cfg = CouplingConfig(rng.uniform(-0.3, 0.3) / 0.8, 0.8, rng.uniform(0.5, 2))
            m = moments(postselected_pointer(a, b, c, cfg), cfg)
            ref = quad_moments(a, b, c, cfg)
            assert (m.mean_q, m.mean_p, m.norm) == pytest.approx(ref, abs=1e-10)

    def test_grid_robustness(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            a, b, c = random_states(rng, 2, 3)
            cfg = CouplingConfig(0.2)
            base = moments(postselected_pointer(a, b, c, cfg), cfg)
            for grid in (GridSpec(points=8192), GridSpec(extent=20.0, points=8192)):
                other = moments(postselected_pointer(a, b, c, cfg, grid), cfg)
                np.testing.assert_allclose(other, base, atol=1e-9)


class TestClosedForm:
    @pytest.mark.parametrize("ks", [0.2, 0.1, 0.05])
    def test_octant_vs_quadrature(self, octant, ks):
        cfg = CouplingConfig(ks, 1.0)
        m = moments(postselected_pointer(*octant, cfg), cfg)
        cf = closed_form_moments(*octant, cfg)
        assert (cf.mean_q, cf.mean_p, cf.norm) == pytest.approx((m.mean_q, m.mean_p, m.norm), abs=1e-10)

    def test_zero_coupling(self):
        a, b, c = random_states(np.random.default_rng(12), 2, 3)
        cf = closed_form_moments(a, b, c, CouplingConfig(0.0))
        assert cf == pytest.approx((0, 0, abs(inner(c, a)) ** 2), abs=1e-15)

    def test_orthogonal_projector(self):
        a = type(basis(2, 0)).normalized([0, 1])
        c = haar_random_state(2, 3)
        cf = closed_form_moments(a, basis(2, 0), c, CouplingConfig(0.2))
        assert cf == pytest.approx((0, 0, abs(inner(c, a)) ** 2), abs=1e-15)

    @pytest.mark.parametrize("ks", [0.3, 0.01])
    def test_gaussian_integrals(self, ks):
        # the three integrals the closed form rests on
        s = 1.7
        k = ks / s
        rho = lambda q: np.exp(-q * q / s**2) / np.sqrt(np.pi * s * s)
        damp = np.exp(-k * k * s * s / 4)
        assert quad(lambda q: rho(q) * np.cos(k * q), -np.inf, np.inf)[0] == pytest.approx(damp, abs=1e-12)
        assert quad(lambda q: q * rho(q) * np.sin(k * q), -np.inf, np.inf)[0] == pytest.approx(k * s * s / 2 * damp, abs=1e-12)
        assert quad(lambda q: q * rho(q) * np.cos(k * q), -np.inf, np.inf)[0] == pytest.approx(0, abs=1e-12)

    def test_agreement_qutrits(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            a, b, c = random_states(rng, 3, 3)
            cfg = CouplingConfig(rng.uniform(1e-3, 0.3), 1.0)
            m = moments(postselected_pointer(a, b, c, cfg), cfg)
            cf = closed_form_moments(a, b, c, cfg)
            assert (m.mean_q, m.mean_p, m.norm) == pytest.approx(tuple(cf), abs=1e-9)

    @settings(max_examples=40)
    @given(seeds, phases, phases, phases)
    def test_global_phase_invariance(self, seed, t1, t2, t3):
        a, b, c = random_states(np.random.default_rng(seed), 2, 3)
        cfg = CouplingConfig(0.15)
        ref = closed_form_moments(a, b, c, cfg)
        got = closed_form_moments(a.rephase(t1), b.rephase(t2), c.rephase(t3), cfg)
        np.testing.assert_allclose(got, ref, atol=1e-13)

    def test_global_phase_invariance_quadrature(self):
        a, b, c = random_states(np.random.default_rng(14), 2, 3)
        cfg = CouplingConfig(0.15)
        ref = moments(postselected_pointer(a, b, c, cfg), cfg)
        got = moments(postselected_pointer(a.rephase(1.0), b.rephase(-2.0), c.rephase(0.4), cfg), cfg)
        np.testing.assert_allclose(got, ref, atol=1e-13)


class TestPostselectionProbability:
    def test_identity(self):
        a = haar_random_state(2, 0)
        assert postselection_probability(a, haar_random_state(2, 1), a, CouplingConfig(0.0)) == pytest.approx(1.0)

    def test_orthogonal_at_zero_coupling(self):
        assert postselection_probability(basis(2, 0), basis(2, 0), basis(2, 1), CouplingConfig(0.0)) == 0.0

    def test_orthogonal_small_coupling(self, octant):
        a, b, _ = octant
        c = basis(2, 1)
        ks = 0.1
        prob = postselection_probability(a, b, c, CouplingConfig(ks))
        v = inner(c, b) * inner(b, a)
        # 2 |v|^2 (1 - exp(-x^2/4)) ~ |v|^2 x^2 / 2
        assert 0 < prob
        assert prob == pytest.approx(abs(v) ** 2 * ks**2 / 2, rel=0.01)

    def test_matches_pointer_norm(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            a, b, c = random_states(rng, 3, 3)
            cfg = CouplingConfig(rng.uniform(0, 0.3))
            wf = postselected_pointer(a, b, c, cfg)
            assert postselection_probability(a, b, c, cfg) == pytest.approx(wf.norm_squared, abs=1e-12)

    def test_vanishing_ensemble(self):
        # c orthogonal to a: probability decays as kappa^2
        a, c = basis(2, 0), basis(2, 1)
        b = type(a).normalized([1, 1])
        probs = [postselection_probability(a, b, c, CouplingConfig(k)) for k in (0.2, 0.1, 0.05, 0.025)]
        ratios = np.array(probs[1:]) / np.array(probs[:-1])
        np.testing.assert_allclose(ratios, 0.25, rtol=0.01)


def test_weak_limit_convergence_order():
    rng = np.random.default_rng(16)
    a, b, c = random_states(rng, 2, 3)
    w = weak_value(a, b, c)
    errs = []
    for ks in (0.2, 0.1, 0.05, 0.025):
        cfg = CouplingConfig(ks)
        m = moments(postselected_pointer(a, b, c, cfg), cfg)
        dq, dp = predicted_shifts(w, cfg)
        errs.append(np.hypot(m.mean_q - dq, m.mean_p - dp))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 1.6)
