import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from annulus_lab.circle import CircleGrid
from annulus_lab.interp import (BiLaurent, EnvelopeViolation, boundary_norm, canonical_extension, evaluate_member,
                                fA_norm, fejer_mean_zeta, hull_membership_margin, interp_norm, interp_norm_search,
                                psi_sigma, random_member, three_circles_ratio, three_circles_ratios,
                                three_circles_report, vanishing_perturbation)
from annulus_lab.laurent import LaurentSeq, eval_circle, random_laurent
from annulus_lab.spaces import SpaceSpec, fc_theta_norm, fl_norm
from annulus_lab._trigmax import sup_2d
from oracles import COSH_HALF, INV_TWO_PI, dense_torus_sup
from strategies import complexes, laurent, nonzero

GRID = CircleGrid(4096)
THETAS = [0.25, 0.5, 0.75]
tables = st.builds(
    lambda seed, zd, wlo, wlen: random_member(np.random.default_rng(seed), zd, wlo, wlo + wlen),
    st.integers(0, 2**32 - 1), st.integers(0, 4), st.integers(-6, 3), st.integers(0, 6))


class TestBiLaurent:
    def test_rows_and_call(self):
        g = BiLaurent.from_rows({-1: LaurentSeq.delta(2), 1: LaurentSeq(0, [1, 1])})
        assert g.zeta_lo == -1 and g.zeta_hi == 1 and g.w_lo == 0 and g.w_hi == 2
        z, w = 1.3 + 0.2j, 0.7 - 0.4j
        assert g(z, w) == pytest.approx(w ** 2 / z + z * (1 + w))

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            BiLaurent(0, 0, np.zeros((2, 2, 2)))


class TestEvaluateMember:
    @given(laurent(), st.floats(1, math.e), st.floats(0, 2 * math.pi))
    def test_constant_member(self, b, r, t):
        assert evaluate_member(BiLaurent.constant(b), r * np.exp(1j * t)).allclose(b, atol=1e-15)

    def test_outside_annulus_rejected(self):
        g = BiLaurent.constant(LaurentSeq.delta(0))
        for z in (0.5, 3.0, 0.9j):
            with pytest.raises(ValueError):
                evaluate_member(g, z)

    @given(tables, tables, complexes, st.floats(1, math.e), st.floats(0, 2 * math.pi))
    def test_linear(self, g, h, c, r, t):
        z = r * np.exp(1j * t)
        lhs = evaluate_member(g * c + h, z)
        rhs = evaluate_member(g, z) * c + evaluate_member(h, z)
        lo, hi = min(lhs.lo, rhs.lo), max(lhs.hi, rhs.hi)
        scale = 1 + np.abs(lhs.coeffs).max()
        assert np.abs(lhs.padded(lo, hi) - rhs.padded(lo, hi)).max() <= 1e-12 * scale

    @given(laurent(), st.sampled_from(THETAS))
    def test_canonical_interpolates(self, lam, theta):
        got = evaluate_member(canonical_extension(lam, theta), math.exp(theta))
        assert np.allclose(got.padded(lam.lo, lam.hi), lam.coeffs, rtol=1e-13, atol=1e-15)


class TestBoundaryNorm:
    @given(laurent(), st.sampled_from([0, 1]))
    def test_constant_in_zeta(self, b, j):
        expect = fl_norm(b, SpaceSpec(math.inf, j), GRID).value
        got = boundary_norm(BiLaurent.constant(b), j, GRID)
        assert got == pytest.approx(expect, rel=1e-10, abs=1e-300)

    @given(laurent(), st.integers(-5, 5))
    def test_unimodular_factor(self, b, k):
        g = BiLaurent(k, b.lo, b.coeffs[None, :])
        expect = fl_norm(b, SpaceSpec(math.inf, 0), GRID).value
        assert boundary_norm(g, 0, GRID) == pytest.approx(expect, rel=1e-10, abs=1e-300)

    @pytest.mark.parametrize("m", [-3, 0, 2, 8])
    @pytest.mark.parametrize("theta", THETAS)
    def test_canonical_delta(self, m, theta):
        g = canonical_extension(LaurentSeq.delta(m), theta)
        assert g.table.shape == (1, 1) and g.zeta_lo == -m
        assert g.table[0, 0] == pytest.approx(math.exp(m * theta))
        for j in (0, 1):
            assert boundary_norm(g, j, GRID) == pytest.approx(math.exp(theta * m), rel=1e-9)
        assert fA_norm(g, GRID) == pytest.approx(math.exp(theta * m), rel=1e-9)

    def test_bad_circle_and_grid(self):
        g = BiLaurent.constant(LaurentSeq.delta(0))
        with pytest.raises(ValueError):
            boundary_norm(g, 2, GRID)
        with pytest.raises(ValueError):
            boundary_norm(BiLaurent.constant(LaurentSeq.delta(100)), 0, GRID)

    def test_cosh_example(self):
        g = canonical_extension(LaurentSeq(-1, [0.5, 0, 0.5]), 0.5)
        assert fA_norm(g, GRID) == pytest.approx(COSH_HALF, abs=1e-6)

    @settings(deadline=None)
    @given(tables, st.sampled_from([0, 1]))
    def test_matches_torus_oracle(self, g, j):
        tab = g.table * np.exp(j * (g.zeta_indices[:, None] + g.w_indices[None, :]))
        ref = dense_torus_sup(tab, g.zeta_lo, g.w_lo)
        got = boundary_norm(g, j, GRID)
        assert got >= ref * (1 - 1e-9)
        assert got <= np.abs(tab).sum() * (1 + 1e-12)

    def test_sup_2d_stop_above_returns_lower_bound(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        full = sup_2d(A, -2, -2)
        early = sup_2d(A, -2, -2, stop_above=0.0)
        assert early <= full


class TestIsometry:
    @pytest.mark.parametrize("theta", THETAS)
    def test_canonical_matches_fc_theta(self, theta):
        rng = np.random.default_rng(int(theta * 100))
        for _ in range(200):
            lo = int(rng.integers(-8, 9))
            lam = random_laurent(rng, lo, int(rng.integers(lo, 9)))
            value, cert = interp_norm(lam, theta, GRID)
            assert abs(fA_norm(cert, GRID) - value) <= 1e-9 * value

    def test_interp_norm_delta_zero(self):
        value, cert = interp_norm(LaurentSeq.delta(0), 0.5, GRID)
        assert value == pytest.approx(1.0, abs=1e-12) and cert.table.shape == (1, 1)

    def test_interp_norm_delta_m(self):
        value, cert = interp_norm(LaurentSeq.delta(3), 0.4, GRID)
        assert value == pytest.approx(math.exp(1.2), rel=1e-12)
        assert cert.zeta_lo == -3 and cert.table[0, 0] == pytest.approx(math.exp(1.2))


class TestSearch:
    @given(st.integers(0, 50), st.sampled_from(THETAS))
    @settings(max_examples=5, deadline=None)
    def test_delta_zero(self, budget, theta):
        assert interp_norm_search(LaurentSeq.delta(0), theta, budget, seed=1) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_contract(self, seed):
        rng = np.random.default_rng(seed)
        lam = random_laurent(rng, -6, 6)
        floor = fc_theta_norm(lam, 0.5, GRID).value
        cert = fA_norm(canonical_extension(lam, 0.5), GRID)
        got = interp_norm_search(lam, 0.5, 40, seed)
        assert floor - 1e-6 <= got <= cert + 1e-12

    def test_deterministic(self):
        lam = random_laurent(np.random.default_rng(7), -3, 3)
        assert interp_norm_search(lam, 0.5, 20, 5) == interp_norm_search(lam, 0.5, 20, 5)

    @given(tables, st.sampled_from(THETAS))
    def test_perturbation_vanishes(self, q, theta):
        h = vanishing_perturbation(q, theta)
        assert np.abs(evaluate_member(h, math.exp(theta)).coeffs).max() <= 1e-10 * (1 + np.abs(q.table).sum() * 30)


class TestThreeCircles:
    @pytest.mark.parametrize("n", range(-8, 9))
    @pytest.mark.parametrize("theta", THETAS)
    def test_monomial_ratio(self, n, theta):
        assert three_circles_ratio(LaurentSeq.delta(n, 0.3 - 2j), theta, GRID) == pytest.approx(INV_TWO_PI, abs=1e-9)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            three_circles_ratio(LaurentSeq.zero(), 0.5, GRID)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(2)
        rows = [random_laurent(rng, -5, 5) for _ in range(6)]
        got = three_circles_ratios(np.stack([r.coeffs for r in rows]), -5, 0.5, GRID)
        assert np.allclose(got, [three_circles_ratio(r, 0.5, GRID) for r in rows], rtol=1e-14)

    def test_report_contains_monomial_floor(self):
        rng = np.random.default_rng(4)
        samples = [LaurentSeq.delta(0)] + [random_laurent(rng, -32, 32) for _ in range(50)]
        rep = three_circles_report(samples, 0.5, GRID)
        assert rep.sample_count == 51 and rep.empirical_C >= INV_TWO_PI - 1e-9
        assert np.all(rep.ratios <= rep.empirical_C)


class TestHullMargin:
    def test_constant_member(self):
        b = LaurentSeq(-1, [0.2, 0.5j, -0.1])
        env = LaurentSeq(-2, [1, 1, 1, 1, 1])
        got = hull_membership_margin(BiLaurent.constant(b), 0, env)
        assert got == pytest.approx(min(1 - 0.2, 1 - 0.5, 1 - 0.1, 1.0), abs=1e-12)

    @pytest.mark.parametrize("theta", THETAS)
    def test_canonical_on_envelope(self, theta):
        rng = np.random.default_rng(5)
        lam = random_laurent(rng, -6, 6)
        env = LaurentSeq(lam.lo, np.exp(theta * lam.indices) * np.abs(lam.coeffs))
        g = canonical_extension(lam, theta)
        # on |zeta| = 1 the entry a_{-k,k} has modulus exactly c_k
        assert abs(hull_membership_margin(g, 0, env)) <= 1e-10

    def test_loose_envelope_positive(self):
        g = random_member(np.random.default_rng(6), 2, -3, 3)
        tab = np.abs(g.table)
        env = LaurentSeq(-3, 2 * tab.sum(axis=0))
        assert hull_membership_margin(g, 0, env) > 0

    def test_violation_reports_node(self):
        g = BiLaurent.constant(LaurentSeq.delta(1, 2.0))
        with pytest.raises(EnvelopeViolation) as err:
            hull_membership_margin(g, 0, LaurentSeq.delta(1, 1.0))
        assert err.value.frequency == 1 and abs(abs(err.value.zeta) - 1) < 1e-12
        assert err.value.excess == pytest.approx(1.0)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 12))
    def test_fejer_in_zeta_keeps_envelope(self, seed, N):
        g = random_member(np.random.default_rng(seed), 3, -2, 2)
        env = LaurentSeq(-2, np.abs(g.table).sum(axis=0))
        assert hull_membership_margin(g, 0, env) >= -1e-10
        assert hull_membership_margin(fejer_mean_zeta(g, N), 0, env) >= -1e-10


class TestPsiSigma:
    def test_matches_pairing(self):
        g = random_member(np.random.default_rng(8), 2, -3, 3)
        sigma = random_laurent(np.random.default_rng(9), -3, 3)
        z = 1.7 * np.exp(0.3j)
        direct = sum(g.table[i, k] * sigma[g.w_lo + k] * z ** (g.zeta_lo + i + g.w_lo + k)
                     for i in range(g.table.shape[0]) for k in range(g.table.shape[1]))
        assert psi_sigma(g, sigma)(z) == pytest.approx(direct, rel=1e-12)

    @given(st.integers(0, 2**32 - 1), st.sampled_from(THETAS))
    def test_maximum_principle(self, seed, theta):
        rng = np.random.default_rng(seed)
        g = random_member(rng, 4, -4, 4)
        psi = psi_sigma(g, random_laurent(rng, -4, 4))
        inside = abs(psi(math.exp(theta)))
        edge = max(fl_norm(psi, SpaceSpec(math.inf, j), GRID).value for j in (0, 1))
        assert inside <= edge + 1e-9
