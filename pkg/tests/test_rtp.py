import numpy as np
import pytest

from dmoc.core import EmptyClusterError, RtpParams
from dmoc import rtp

from oracles import rtp_numeric_representative


def params(**kwargs):
    defaults = dict(n_consumers=1, n_slots=1, alpha=0.5, a=0.0, b=0.0, c=0.0)
    defaults.update(kwargs)
    return RtpParams(**defaults)


class TestConsumerSide:
    def test_utility_interior(self):
        assert rtp.consumer_utility(1.0, 2.0, 0.5) == 1.75

    def test_utility_saturated(self):
        assert rtp.consumer_utility(5.0, 2.0, 0.5) == 4.0

    def test_utility_zero_load(self):
        assert rtp.consumer_utility(0.0, 2.0, 0.5) == 0.0

    def test_utility_continuous_at_kink(self):
        # at ell = g/alpha both branches equal g^2/(2 alpha) exactly
        g, alpha = 2.0, 0.5
        kink = g / alpha
        quad = g * kink - 0.5 * alpha * kink**2
        assert rtp.consumer_utility(kink, g, alpha) == quad == g**2 / (2 * alpha)

    def test_best_response(self):
        assert rtp.best_response_load(1.0, 2.0, 0.5) == 2.0
        assert rtp.best_response_load(3.0, 2.0, 0.5) == 0.0
        assert rtp.best_response_load(2.0, 2.0, 0.5) == 0.0


class TestF1:
    def test_free_price_single_consumer(self):
        assert rtp.f1([0.0], [2.0], params()) == 4.0

    def test_constant_cost(self):
        assert rtp.f1([0.0], [2.0], params(c=10.0)) == -6.0

    def test_price_equal_to_g_kills_consumption(self):
        p = params(n_consumers=2, n_slots=3, c=7.0)
        g = np.full(6, 2.5)
        assert rtp.f1(np.full(3, 2.5), g, p) == pytest.approx(-3 * 7.0)

    def test_overpricing_clamps_and_warns(self, caplog):
        with caplog.at_level("WARNING", logger="dmoc"):
            value = rtp.f1([3.0], [2.0], params())
        assert value == 0.0
        assert any("over-pricing" in r.message for r in caplog.records)

    def test_matches_literal_loop_implementation(self):
        # pins the consumer-fastest stacking (g_1(1)..g_K(1), g_1(2), ...)
        def f1_literal(x, g, p):
            total = 0.0
            for t in range(p.n_slots):
                load = 0.0
                welfare = 0.0
                for k in range(p.n_consumers):
                    gk = g[t * p.n_consumers + k]
                    ell = 0.0 if x[t] > gk else (gk - x[t]) / p.alpha
                    welfare += rtp.consumer_utility(ell, gk, p.alpha)
                    load += ell
                total += welfare - p.a * load**2 - p.b * load - p.c
            return total

        p = params(n_consumers=3, n_slots=4, a=0.1, b=0.2, c=5.0)
        rng = np.random.default_rng(6)
        for _ in range(25):
            x = rng.uniform(0.0, 3.5, size=4)
            g = rng.uniform(0.0, 4.0, size=12)
            assert rtp.f1(x, g, p) == pytest.approx(f1_literal(x, g, p), abs=1e-12)


class TestDerivedConstants:
    def test_reference_values(self):
        c = rtp.derived_constants(params(n_consumers=5, n_slots=4, a=0.1))
        assert c.a_tilde == pytest.approx(15.0)
        assert c.kappa == pytest.approx(0.5 / 3.75)
        assert c.beta == 0.0

    def test_zero_b_zero_beta(self):
        assert rtp.derived_constants(params(a=0.3)).beta == 0.0

    def test_zero_a_zero_kappa(self):
        assert rtp.derived_constants(params(b=0.4)).kappa == 0.0


class TestAffineTransform:
    def test_slot_sums(self):
        p = params(n_consumers=2, n_slots=2, a=0.1)
        constants = rtp.RtpDerivedConstants(a_tilde=1.0, kappa=0.5, beta=0.0, n_slots=2)
        out = rtp.affine_transform([1.0, 3.0, 2.0, 2.0], p, constants=constants)
        np.testing.assert_allclose(out, [2.0, 2.0])

    def test_zero_kappa_gives_constant(self):
        p = params(n_consumers=3, n_slots=2, b=1.0)
        c = rtp.derived_constants(p)
        out = rtp.affine_transform(np.arange(6, dtype=float), p)
        np.testing.assert_allclose(out, np.full(2, c.beta))

    def test_identity_case(self):
        p = params(n_consumers=1, n_slots=3, a=0.2)
        constants = rtp.RtpDerivedConstants(a_tilde=1.0, kappa=1.0, beta=0.0, n_slots=3)
        g = np.array([0.7, 1.1, 2.9])
        np.testing.assert_allclose(rtp.affine_transform(g, p, constants=constants), g)


class TestAssignment:
    def test_exact_match(self):
        p = params(n_consumers=2, n_slots=2, a=0.1)
        c = rtp.derived_constants(p)
        g = np.array([1.0, 3.0, 2.0, 2.0])
        z = rtp.affine_transform(g, p)
        reps = np.array([z, z + 3.0])
        assert rtp.assign_cluster_rtp(g, reps, p) == 0

    def test_single_rep(self):
        p = params(n_consumers=2, n_slots=2, a=0.1)
        assert rtp.assign_cluster_rtp(np.ones(4), np.ones((1, 2)), p) == 0

    def test_argmax_equivalence_with_direct_f1(self):
        p = params(n_consumers=3, n_slots=2, a=0.15, b=0.05, c=1.0)
        rng = np.random.default_rng(11)
        for _ in range(200):
            g = rng.uniform(2.0, 3.0, size=6)
            reps = rng.uniform(0.1, 1.9, size=(4, 2))
            direct = int(np.argmax([rtp.f1(x, g, p) for x in reps]))
            assert rtp.assign_cluster_rtp(g, reps, p) == direct


class TestClosedFormRepresentative:
    def test_single_member_value(self):
        p = params(n_consumers=2, n_slots=1, a=0.1)
        x = rtp.closed_form_representative(np.array([[2.0, 3.0]]), [0], p)
        assert x[0] == pytest.approx(0.25 / 0.225)

    def test_matches_numeric_maximizer(self):
        p = params(n_consumers=2, n_slots=2, a=0.12, b=0.3, c=2.0)
        rng = np.random.default_rng(4)
        members = rng.uniform(2.0, 3.0, size=(5, 4))
        closed = rtp.closed_form_representative(members, range(5), p)
        numeric = rtp_numeric_representative(members, p)
        np.testing.assert_allclose(closed, numeric, atol=1e-6)

    def test_small_a_limit_is_b(self):
        p = params(n_consumers=5, n_slots=3, a=1e-8, b=0.7)
        members = np.random.default_rng(2).uniform(2.0, 3.0, size=(4, 15))
        x = rtp.closed_form_representative(members, range(4), p)
        np.testing.assert_allclose(x, 0.7, atol=1e-6)

    def test_large_k_tracks_cluster_average(self):
        k = 10_000
        p = params(n_consumers=k, n_slots=1, a=0.1)
        g = np.random.default_rng(3).uniform(2.0, 3.0, size=(1, k))
        x = rtp.closed_form_representative(g, [0], p)
        gbar = g.mean()
        assert 0.999 <= x[0] / gbar <= 1.001

    def test_empty_members(self):
        with pytest.raises(EmptyClusterError):
            rtp.closed_form_representative(np.ones((2, 2)), [], params(n_consumers=2, a=0.1, n_slots=1))

    def test_degenerate_params_rejected(self):
        with pytest.raises(ValueError):
            rtp.closed_form_representative(np.ones((1, 1)), [0], params())


class TestScenario:
    def test_degenerate_support(self):
        data = rtp.generate_rtp_scenario(2, 3, 10, seed=0, g_low=2.5, g_high=2.5)
        assert np.all(data.values == 2.5)

    def test_sample_mean(self):
        data = rtp.generate_rtp_scenario(10, 10, 1000, seed=1, g_low=2.0, g_high=3.0)
        n_entries = data.values.size
        se = np.sqrt(1.0 / 12.0) / np.sqrt(n_entries)
        assert abs(data.values.mean() - 2.5) < 3 * se

    def test_seed_reproducibility(self):
        a = rtp.generate_rtp_scenario(3, 4, 20, seed=9)
        b = rtp.generate_rtp_scenario(3, 4, 20, seed=9)
        np.testing.assert_array_equal(a.values, b.values)

    def test_rejects_inverted_support(self):
        with pytest.raises(ValueError):
            rtp.generate_rtp_scenario(2, 2, 5, seed=0, g_low=3.0, g_high=2.0)


class TestDecompositionProperty:
    def test_f1_plus_quadratic_term_is_price_invariant(self):
        # the completed square leaves a price-independent remainder
        p = params(n_consumers=4, n_slots=3, a=0.2, b=0.1, c=3.0)
        c = rtp.derived_constants(p)
        rng = np.random.default_rng(8)
        for _ in range(100):
            g = rng.uniform(2.0, 3.0, size=12)
            z = rtp.affine_transform(g, p)
            x1, x2 = rng.uniform(0.0, 1.9, size=(2, 3))
            lhs = rtp.f1(x1, g, p) + c.a_tilde * ((z - x1) ** 2).sum()
            rhs = rtp.f1(x2, g, p) + c.a_tilde * ((z - x2) ** 2).sum()
            assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_closed_form_beats_perturbations(self):
        p = params(n_consumers=3, n_slots=2, a=0.15, b=0.2, c=1.5)
        rng = np.random.default_rng(5)
        members = rng.uniform(2.0, 3.0, size=(6, 6))
        star = rtp.closed_form_representative(members, range(6), p)
        best = sum(rtp.f1(star, g, p) for g in members)
        for _ in range(100):
            delta = rng.normal(size=2)
            perturbed = np.clip(star + 1e-3 * delta, 0.0, None)
            value = sum(rtp.f1(perturbed, g, p) for g in members)
            assert value <= best + 1e-12
