"""Brute-force reference implementations for tests and diagnostics.

Everything here is deliberately naive: the joint table enumerates every edge
configuration and scores it with log_joint, with no factorization shortcuts,
so it provides an independent check on the factorized posterior and on the
collapsed free energy. gmm_em_step is a textbook EM iteration for an
isotropic unit-variance Gaussian mixture with uniform mixing — the oracle
behind the slot/EM equivalence tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mrf import PairwiseMRF, log_joint
from .numerics import ValidationError, as_matrix, log_sum_exp

MAX_CONFIGS = 1_000_000


@dataclass
class JointTable:
    """Exhaustive enumeration of edge configurations with their log-joints."""

    configs: np.ndarray    # (N, m) candidate index per edge variable
    log_joint: np.ndarray  # (N,)

    def log_normalizer(self) -> float:
        """lse over all configurations — ln Σ_E p(x, E) up to the global Z."""
        return log_sum_exp(self.log_joint)

    def free_energy(self) -> float:
        """-ln Σ_E p(x, E): collapsed free energy from the raw table."""
        return -self.log_normalizer()

    def marginal(self, ev_index: int, n_candidates: int) -> np.ndarray:
        """Posterior marginal of edge variable ev_index, by summation."""
        logz = self.log_normalizer()
        p = np.zeros(n_candidates)
        weights = np.exp(self.log_joint - logz)
        for c in range(n_candidates):
            p[c] = np.sum(weights[self.configs[:, ev_index] == c])
        return p


def enumerate_joint(mrf: PairwiseMRF) -> JointTable:
    """Score every configuration with mrf.log_joint (naive summation)."""
    sizes = [ev.n_candidates for ev in mrf.prior.edge_vars]
    total = 1
    for s in sizes:
        total *= s
    if total > MAX_CONFIGS:
        raise ValidationError(
            f"joint table would hold {total} configurations (cap {MAX_CONFIGS})")
    configs = np.array(list(itertools.product(*[range(s) for s in sizes])),
                       dtype=np.intp).reshape(total, len(sizes))
    lj = np.empty(total)
    for r in range(total):
        lj[r] = log_joint(mrf, configs[r])
    return JointTable(configs=configs, log_joint=lj)


def gmm_em_step(points, means) -> np.ndarray:
    """One EM step for an isotropic unit-variance GMM with uniform mixing.

    E-step responsibilities r_ij ∝ exp(-½‖x_j − μ_i‖²) normalized over
    components i; M-step mean update μ_i = Σ_j r_ij x_j / Σ_j r_ij.
    """
    points = as_matrix(points, "points")
    means = as_matrix(means, "means")
    if points.shape[0] == 0 or means.shape[0] == 0:
        raise ValidationError("points and means must be nonempty")
    if points.shape[1] != means.shape[1]:
        raise ValidationError("points and means must share their dimension")
    m, n = means.shape[0], points.shape[0]
    log_r = np.empty((m, n))
    for i in range(m):
        diff = points - means[i]
        log_r[i] = -0.5 * np.sum(diff * diff, axis=1)
    resp = np.empty_like(log_r)
    for j in range(n):
        col = log_r[:, j]
        resp[:, j] = np.exp(col - log_sum_exp(col))
    new_means = np.empty_like(means)
    for i in range(m):
        new_means[i] = (resp[i] @ points) / np.sum(resp[i])
    return new_means
