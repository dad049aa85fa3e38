import numpy as np
import pytest

import mrfattn as ma
from mrfattn.mrf import node_potential_total

from conftest import random_mrf


class TestEnumerateJoint:
    def test_table_sizes(self):
        rng = ma.make_rng(90)
        obs = rng.standard_normal((3, 2))
        ev2 = ma.EdgeVariable(candidates=[[0, 2], [1, 2]],
                              log_prior=ma.uniform_log_prior(2))
        mrf = ma.PairwiseMRF(nodes=ma.NodeSet(observed=obs,
                                              latent=np.zeros((0, 2))),
                             prior=ma.StructuralPrior([ev2]),
                             potentials=ma.PotentialSpec(w=np.eye(2)))
        assert ma.enumerate_joint(mrf).log_joint.shape == (2,)

        ev3a = ma.EdgeVariable(candidates=[[0, 1], [1, 0], [2, 0]],
                               log_prior=ma.uniform_log_prior(3))
        ev3b = ma.EdgeVariable(candidates=[[0, 2], [1, 2], [2, 1]],
                               log_prior=ma.uniform_log_prior(3))
        mrf2 = ma.PairwiseMRF(nodes=ma.NodeSet(observed=obs,
                                               latent=np.zeros((0, 2))),
                              prior=ma.StructuralPrior([ev3a, ev3b]),
                              potentials=ma.PotentialSpec(w=np.eye(2)))
        assert ma.enumerate_joint(mrf2).log_joint.shape == (9,)

    def test_factorization_identity(self):
        # lse over the joint table = node terms + sum of per-factor lse
        rng = ma.make_rng(91)
        for _ in range(15):
            mrf = random_mrf(rng, nonuniform=True)
            table = ma.enumerate_joint(mrf)
            per_factor = 0.0
            for i in range(mrf.n_edge_vars):
                logits = [ma.edge_logit(mrf, i, c)
                          for c in range(mrf.prior.edge_vars[i].n_candidates)]
                per_factor += ma.log_sum_exp(logits)
            expected = per_factor + node_potential_total(mrf)
            assert table.log_normalizer() == pytest.approx(expected,
                                                           abs=1e-10)

    def test_marginals_match_factorized_posterior(self):
        rng = ma.make_rng(92)
        for _ in range(15):
            mrf = random_mrf(rng, nonuniform=True)
            table = ma.enumerate_joint(mrf)
            post = ma.edge_posterior(mrf)
            for i in range(mrf.n_edge_vars):
                marg = table.marginal(i, mrf.prior.edge_vars[i].n_candidates)
                np.testing.assert_allclose(marg, post[i], atol=1e-10)

    def test_free_energy_matches(self):
        rng = ma.make_rng(93)
        for _ in range(10):
            mrf = random_mrf(rng)
            assert ma.enumerate_joint(mrf).free_energy() == pytest.approx(
                ma.free_energy(mrf), abs=1e-10)

    def test_config_cap_enforced(self):
        obs = np.zeros((2, 1))
        evs = [ma.EdgeVariable(candidates=[[0, 1], [1, 0]],
                               log_prior=ma.uniform_log_prior(2))
               for _ in range(21)]  # 2^21 > 1e6
        mrf = ma.PairwiseMRF(nodes=ma.NodeSet(observed=obs,
                                              latent=np.zeros((0, 1))),
                             prior=ma.StructuralPrior(evs),
                             potentials=ma.PotentialSpec(w=np.eye(1)))
        with pytest.raises(ma.ValidationError, match="cap"):
            ma.enumerate_joint(mrf)


class TestGmmEmStep:
    def test_single_component_returns_mean(self):
        rng = ma.make_rng(94)
        pts = rng.standard_normal((9, 3))
        out = ma.gmm_em_step(pts, rng.standard_normal((1, 3)))
        np.testing.assert_allclose(out[0], pts.mean(axis=0), atol=1e-12)

    def test_symmetry_is_preserved(self):
        pts = np.array([[1.0, 0.0], [-1.0, 0.0], [2.0, 1.0], [-2.0, -1.0]])
        means = np.array([[0.5, 0.0], [-0.5, 0.0]])
        out = ma.gmm_em_step(pts, means)
        np.testing.assert_allclose(out[0], -out[1], atol=1e-12)

    def test_matches_slot_step_responsibilities(self):
        # logit forms mu.x and -0.5|x-mu|^2 coincide under a common slot norm
        rng = ma.make_rng(95)
        pts = rng.standard_normal((10, 2))
        mu = rng.standard_normal((3, 2))
        mu /= np.linalg.norm(mu, axis=1, keepdims=True)
        cfg = ma.SlotConfig(inputs=pts, num_slots=3, beta=1.0, init=mu)
        np.testing.assert_allclose(ma.slot_step(cfg, mu, norm="weighted_mean"),
                                   ma.gmm_em_step(pts, mu), atol=1e-10)

    def test_empty_inputs_rejected(self):
        with pytest.raises(ma.ValidationError):
            ma.gmm_em_step(np.zeros((0, 2)), np.zeros((1, 2)))
