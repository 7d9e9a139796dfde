import math
import random

import numpy as np
import pytest

from collabnet.model import (
    DEFAULT_FAMILIES,
    Exponential,
    FittingError,
    Gaussian,
    ModelParams,
    Multinomial,
    TrainingSet,
    em_fit,
    load_model,
    matching_score,
    observed_log_likelihood,
    posterior_match,
    sample_training_pairs,
    save_model,
    _m_step,
    _posterior_terms,
)
from collabnet.network import CollabNetwork
from collabnet.similarity import EmbeddingTable, SimilarityContext

from conftest import make_index, make_record


def training_from(X, families=None):
    X = np.asarray(X, dtype=float)
    pairs = [(("a", 0), ("a", i + 1)) for i in range(X.shape[0])]
    return TrainingSet(X, pairs, np.zeros(X.shape[0], dtype=bool))


def simple_params(p=0.5, m_mean=0.8, u_mean=0.2, var=0.01):
    return ModelParams(
        p,
        ("gaussian",),
        (Gaussian(m_mean, var),),
        (Gaussian(u_mean, var),),
    )


class TestSampling:
    def scene(self, instance_names, papers_per_vertex=1):
        records = []
        net = CollabNetwork()
        pid = 0
        for name, count in instance_names:
            for _ in range(count):
                papers = []
                for _ in range(papers_per_vertex):
                    records.append(
                        make_record(f"p{pid}", [name], title=f"w{pid % 7}", venue=f"v{pid % 3}")
                    )
                    papers.append(f"p{pid}")
                    pid += 1
                net.add_vertex(name, papers)
        index = make_index(records)
        emb = EmbeddingTable.hashed([f"w{i}" for i in range(7)], dim=4, seed=0)
        return SimilarityContext(net, index, emb)

    def test_full_rate_enumerates_all_pairs(self):
        ctx = self.scene([("x", 2), ("y", 3)])
        training = sample_training_pairs(ctx, 1.0, seed=1)
        assert training.n == 4  # C(2,2)=1 and C(3,2)=3
        assert not training.synthetic.any()

    def test_split_vertex_creates_one_synthetic_pair(self):
        records = [make_record(f"p{i}", ["z"], title=f"w{i % 3}") for i in range(10)]
        net = CollabNetwork()
        vid = net.add_vertex("z", [f"p{i}" for i in range(10)])
        index = make_index(records)
        emb = EmbeddingTable.hashed(["w0", "w1", "w2"], dim=4, seed=0)
        ctx = SimilarityContext(net, index, emb)
        training = sample_training_pairs(ctx, 1.0, seed=1, min_split=5)
        assert training.n == 1
        assert training.synthetic.tolist() == [True]
        assert training.pairs == [(vid, vid)]
        # the split is temporary: the network is untouched afterwards
        assert net.vertices[vid].papers == {f"p{i}" for i in range(10)}
        assert net.n_vertices() == 1

    def test_seeded_sample_is_reproducible(self):
        ctx = self.scene([("x", 13), ("y", 7), ("z", 2)])
        # C(13,2) + C(7,2) + C(2,2) = 78 + 21 + 1 = 100 candidate pairs
        a = sample_training_pairs(ctx, 0.1, seed=42)
        b = sample_training_pairs(ctx, 0.1, seed=42)
        assert a.n == 10
        assert a.pairs == b.pairs
        assert np.array_equal(a.features, b.features)
        c = sample_training_pairs(ctx, 0.1, seed=43)
        assert c.pairs != a.pairs

    def test_no_candidates_raises(self):
        ctx = self.scene([("x", 1), ("y", 1)])
        with pytest.raises(FittingError):
            sample_training_pairs(ctx, 1.0, seed=1)

    def test_workers_match_sequential(self):
        ctx = self.scene([("x", 8), ("y", 6)], papers_per_vertex=2)
        seq = sample_training_pairs(ctx, 1.0, seed=7, workers=1)
        par = sample_training_pairs(ctx, 1.0, seed=7, workers=2)
        assert seq.pairs == par.pairs
        assert np.array_equal(
            np.nan_to_num(seq.features, nan=-9.0), np.nan_to_num(par.features, nan=-9.0)
        )

    def test_rate_bounds(self):
        ctx = self.scene([("x", 2)])
        with pytest.raises(ValueError):
            sample_training_pairs(ctx, 0.0, seed=1)
        with pytest.raises(ValueError):
            sample_training_pairs(ctx, 1.5, seed=1)


def sample_mixture(n, seed):
    """Known two-component data: Gaussian feature + Exponential feature."""
    rng = np.random.default_rng(seed)
    z = rng.random(n) < 0.5
    g = np.where(z, rng.normal(0.8, 0.1, n), rng.normal(0.2, 0.1, n))
    e = np.where(z, rng.exponential(1 / 1.2, n), rng.exponential(1 / 6.0, n))
    return np.column_stack([g, e]), z


class TestEmFit:
    def test_recovers_known_parameters(self):
        X, _ = sample_mixture(2000, seed=0)
        fit = em_fit(training_from(X), families=("gaussian", "exponential"))
        params = fit.params
        matched, unmatched = params.matched, params.unmatched
        if matched[0].mean < unmatched[0].mean:
            matched, unmatched = unmatched, matched
            prior = 1 - params.prior
        else:
            prior = params.prior
        assert abs(matched[0].mean - 0.8) < 0.03
        assert abs(unmatched[0].mean - 0.2) < 0.03
        assert abs(prior - 0.5) < 0.05
        assert abs(matched[1].rate - 1.2) / 1.2 < 0.10
        assert abs(unmatched[1].rate - 6.0) / 6.0 < 0.10

    def test_loglikelihood_monotone(self):
        X, _ = sample_mixture(500, seed=3)
        fit = em_fit(training_from(X), families=("gaussian", "exponential"))
        trace = fit.log_likelihoods
        assert len(trace) >= 2
        for before, after in zip(trace, trace[1:]):
            assert after >= before - 1e-8

    def test_stationary_init_returns_quickly(self):
        X, _ = sample_mixture(800, seed=5)
        families = ("gaussian", "exponential")
        fit = em_fit(training_from(X), families=families)
        again = em_fit(training_from(X), families=families, init=fit.params, tol=1e-3)
        assert again.iterations <= 1
        for a, b in zip(again.params.matched, fit.params.matched):
            for field in vars(a):
                assert getattr(a, field) == pytest.approx(getattr(b, field), rel=1e-3)

    def test_mstep_maximizes_weighted_likelihood(self):
        X, _ = sample_mixture(400, seed=9)
        families = ("gaussian", "exponential")
        fit = em_fit(training_from(X), families=families)
        lm, lu = _posterior_terms(X, fit.params)
        resp = 1.0 / (1.0 + np.exp(lu - lm))
        params = _m_step(X, resp, families, fit.params)

        def weighted_ll(family, x, w):
            return float(sum(wi * family.log_density(xi) for xi, wi in zip(x, w)))

        eps = 1e-4
        for i, tag in enumerate(families):
            col = X[:, i]
            for component, w in ((params.matched[i], resp), (params.unmatched[i], 1 - resp)):
                base = weighted_ll(component, col, w)
                if tag == "gaussian":
                    variants = [
                        Gaussian(component.mean + s * eps, component.var) for s in (-1, 1)
                    ] + [Gaussian(component.mean, component.var + s * eps) for s in (-1, 1)]
                else:
                    variants = [Exponential(component.rate + s * eps) for s in (-1, 1)]
                for alt in variants:
                    assert weighted_ll(alt, col, w) <= base + 1e-8

    def test_deterministic_given_inputs(self):
        X, _ = sample_mixture(300, seed=12)
        a = em_fit(training_from(X), families=("gaussian", "exponential"))
        b = em_fit(training_from(X), families=("gaussian", "exponential"))
        assert a.params == b.params
        assert a.log_likelihoods == b.log_likelihoods

    def test_needs_two_vectors(self):
        with pytest.raises(FittingError):
            em_fit(training_from(np.array([[0.5, 0.1]])), families=("gaussian", "exponential"))

    def test_multinomial_edges_stay_fixed(self):
        rng = np.random.default_rng(2)
        X = rng.random((300, 1))
        fit = em_fit(training_from(X), families=("multinomial",))
        assert isinstance(fit.params.matched[0], Multinomial)
        assert fit.params.matched[0].edges == fit.params.unmatched[0].edges
        assert sum(fit.params.matched[0].probs) == pytest.approx(1.0, abs=1e-9)
        assert all(p > 0 for p in fit.params.matched[0].probs)

    def test_missing_features_are_ignored_not_fatal(self):
        X, _ = sample_mixture(400, seed=21)
        X[::7, 0] = np.nan
        fit = em_fit(training_from(X), families=("gaussian", "exponential"))
        assert math.isfinite(fit.log_likelihoods[-1])

    def test_variance_floor_applied(self):
        X = np.column_stack([np.array([0.0] * 50 + [1.0] * 50)])
        fit = em_fit(training_from(X), families=("gaussian",))
        assert fit.params.matched[0].var >= 1e-6
        assert fit.params.unmatched[0].var >= 1e-6


class TestScoring:
    def test_equal_densities_give_prior(self):
        params = simple_params(p=0.5, m_mean=0.5, u_mean=0.5)
        assert posterior_match([0.3], params) == pytest.approx(0.5, abs=1e-12)

    def test_prior_domination(self):
        params = simple_params(p=1 - 1e-12, m_mean=0.5, u_mean=0.5)
        assert posterior_match([0.4], params) >= 1 - 1e-6

    def test_hand_built_bayes_rule(self):
        params = ModelParams(
            0.3,
            ("gaussian", "exponential"),
            (Gaussian(1.0, 0.04), Exponential(0.5)),
            (Gaussian(0.0, 0.25), Exponential(4.0)),
        )
        x = [0.7, 0.9]
        fm = (
            math.exp(-((0.7 - 1.0) ** 2) / (2 * 0.04)) / math.sqrt(2 * math.pi * 0.04)
        ) * (0.5 * math.exp(-0.5 * 0.9))
        fu = (
            math.exp(-(0.7**2) / (2 * 0.25)) / math.sqrt(2 * math.pi * 0.25)
        ) * (4.0 * math.exp(-4.0 * 0.9))
        expected = 0.3 * fm / (0.3 * fm + 0.7 * fu)
        assert posterior_match(x, params) == pytest.approx(expected, abs=1e-12)

    def test_posterior_plus_complement_is_one(self):
        params = ModelParams(
            0.2,
            ("gaussian", "exponential"),
            (Gaussian(0.9, 0.01), Exponential(1.0)),
            (Gaussian(0.1, 0.01), Exponential(5.0)),
        )
        rng = np.random.default_rng(8)
        for _ in range(200):
            x = [float(rng.normal(0.5, 0.5)), float(rng.exponential(0.5))]
            p = posterior_match(x, params)
            lm, lu = _posterior_terms(np.array([x]), params)
            complement = math.exp(lu[0] - np.logaddexp(lm[0], lu[0]))
            assert p + complement == pytest.approx(1.0, abs=1e-12)

    def test_score_zero_at_even_posterior(self):
        params = simple_params(p=0.5, m_mean=0.5, u_mean=0.5)
        assert matching_score([0.2], params) == pytest.approx(0.0, abs=1e-12)

    def test_constructed_posterior_point_nine(self):
        # prior 0.5 and a density ratio of 9 set the posterior to 0.9 exactly:
        # 0.5*exp(-0.5x) / (4*exp(-4x)) = 9  =>  x = (log 9 + log 8) / 3.5
        params = ModelParams(
            0.5,
            ("exponential",),
            (Exponential(0.5),),
            (Exponential(4.0),),
        )
        x = [(math.log(9.0) + math.log(8.0)) / 3.5]
        assert posterior_match(x, params) == pytest.approx(0.9, abs=1e-9)
        assert matching_score(x, params) == pytest.approx(math.log(9.0), abs=1e-6)

    def test_score_monotone_in_posterior(self):
        params = simple_params(p=0.4)
        grid = np.linspace(-0.5, 1.5, 41)
        pairs = sorted(
            (posterior_match([float(g)], params), matching_score([float(g)], params))
            for g in grid
        )
        for (p1, s1), (p2, s2) in zip(pairs, pairs[1:]):
            if p2 > p1:
                assert s2 > s1

    def test_decision_invariance_with_threshold(self):
        params = simple_params(p=0.4)
        for delta in (-2.0, -0.5, 0.0, 0.7, 3.0):
            cut = 1.0 / (1.0 + math.exp(-delta))
            for g in np.linspace(-0.5, 1.5, 37):
                s = matching_score([float(g)], params)
                p = posterior_match([float(g)], params)
                if abs(s - delta) < 1e-9:
                    continue
                assert (s >= delta) == (p >= cut)

    def test_missing_feature_drops_factor(self):
        params = ModelParams(
            0.3,
            ("gaussian", "exponential"),
            (Gaussian(1.0, 0.04), Exponential(0.5)),
            (Gaussian(0.0, 0.25), Exponential(4.0)),
        )
        reduced = ModelParams(
            0.3, ("gaussian",), (Gaussian(1.0, 0.04),), (Gaussian(0.0, 0.25),)
        )
        full = posterior_match([0.7, math.nan], params)
        assert full == pytest.approx(posterior_match([0.7], reduced), abs=1e-12)

    def test_score_clamped(self):
        params = ModelParams(
            0.5, ("exponential",), (Exponential(1e-3),), (Exponential(1e6),)
        )
        assert matching_score([5.0], params) == 700.0


class TestSerialization:
    def test_roundtrip_exact(self, tmp_path):
        X, _ = sample_mixture(300, seed=30)
        fit = em_fit(training_from(X), families=("gaussian", "exponential"))
        path = tmp_path / "model.txt"
        save_model(fit.params, path)
        loaded = load_model(path)
        assert loaded == fit.params

    def test_roundtrip_multinomial(self, tmp_path):
        rng = np.random.default_rng(4)
        X = np.column_stack([rng.random(200), rng.exponential(1.0, 200)])
        fit = em_fit(training_from(X), families=("multinomial", "exponential"))
        path = tmp_path / "model.txt"
        save_model(fit.params, path)
        assert load_model(path) == fit.params

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("not a model\n")
        with pytest.raises(ValueError):
            load_model(path)

    def test_default_families_shape(self):
        assert len(DEFAULT_FAMILIES) == 6


class TestParamValidation:
    def test_prior_bounds(self):
        with pytest.raises(ValueError):
            ModelParams(0.0, ("gaussian",), (Gaussian(0, 1),), (Gaussian(1, 1),))

    def test_family_tag_mismatch(self):
        with pytest.raises(ValueError):
            ModelParams(0.5, ("exponential",), (Gaussian(0, 1),), (Gaussian(1, 1),))
