"""Attention as exact marginalization over latent edge structures.

One generative story covers the familiar mechanisms: a pairwise MRF over
node vectors carries a factorized categorical prior over candidate edges;
the posterior over those edge variables is the attention matrix, and the
posterior expectation of a linear value function is the attention output.
Making some nodes latent and descending the collapsed variational free
energy with a convex-concave fixed point yields Hopfield retrieval, slot
attention, block-slot attention, and softmax-normalized predictive coding —
each just a different structural prior handed to the same engine.
"""

from .numerics import (NumericError, ValidationError, log_sum_exp, make_rng,
                       softmax, spawn_rngs)
from .mrf import (EdgeVariable, NodeSet, PairwiseMRF, PotentialSpec,
                  StructuralPrior, block_slot_mrf, cross_attention_mrf,
                  edge_logit, hopfield_mrf, log_joint, masked_uniform_log_prior,
                  scaled_beta, self_attention_mrf, slot_mrf, uniform_log_prior)
from .marginal import (EdgePosterior, ValueSpec, attend,
                       closed_form_cross_attention, closed_form_self_attention,
                       edge_posterior, expected_output)
from .vfe import CCCPState, cccp_step, free_energy, free_energy_grad, solve
from .mechanisms import (BlockSlotConfig, HopfieldConfig, SlotConfig,
                         block_slot_run, block_slot_step, hopfield_retrieve,
                         hopfield_step, init_slots, slot_run, slot_step)
from .pcn import (PCNLayer, PCNNetwork, baseline_energy, build_network,
                  collapsed_energy, pcn_baseline_grad, pcn_marginal_grad,
                  prediction_errors, relax, sender_weights)
from .approx import (ApproxReport, HardSample, compare, entropy,
                     expected_hard_loss, hard_sample, kl_information_loss,
                     topk_approx)
from .oracle import JointTable, enumerate_joint, gmm_em_step

__version__ = "0.1.0"

__all__ = [
    "ApproxReport", "BlockSlotConfig", "CCCPState", "EdgePosterior",
    "EdgeVariable", "HardSample", "HopfieldConfig", "JointTable", "NodeSet",
    "NumericError", "PCNLayer", "PCNNetwork", "PairwiseMRF", "PotentialSpec",
    "SlotConfig", "StructuralPrior", "ValidationError", "ValueSpec", "attend",
    "block_slot_mrf", "block_slot_run", "block_slot_step", "build_network",
    "baseline_energy", "cccp_step", "closed_form_cross_attention",
    "closed_form_self_attention", "collapsed_energy",
    "compare", "cross_attention_mrf", "edge_logit", "edge_posterior",
    "entropy", "enumerate_joint", "expected_hard_loss", "expected_output",
    "free_energy", "free_energy_grad", "gmm_em_step", "hard_sample",
    "hopfield_mrf", "hopfield_retrieve", "hopfield_step", "init_slots",
    "kl_information_loss", "log_joint", "log_sum_exp", "make_rng",
    "masked_uniform_log_prior", "pcn_baseline_grad", "pcn_marginal_grad",
    "prediction_errors", "relax", "scaled_beta", "self_attention_mrf",
    "sender_weights",
    "slot_mrf", "slot_run", "slot_step", "softmax", "solve", "spawn_rngs",
    "topk_approx", "uniform_log_prior",
]
