"""Forward attention as exact marginalization over edge variables.

The posterior over each edge variable is a softmax of its candidate logits;
attention output is the posterior expectation of a linear value function of
the candidate's source node. The closed-form functions recompute the same
thing directly from (Q, K, W) matrices and double as oracles for the MRF
path. Iteration order is fixed: edge variables (queries) in index order,
candidates (keys) in listed order — outputs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mrf import PairwiseMRF, edge_logits
from .numerics import ValidationError, as_matrix, log_sum_exp


@dataclass
class EdgePosterior:
    """Per-edge-variable categorical posterior: the attention matrix, row-wise.

    rows[i] is the probability vector over edge variable i's candidates; row
    lengths may differ (candidate sets are per-variable).
    """

    rows: list

    def __post_init__(self):
        rows = []
        for i, r in enumerate(self.rows):
            r = np.asarray(r, dtype=np.float64)
            if r.ndim != 1 or r.size == 0:
                raise ValidationError(f"posterior row {i} must be nonempty 1-d")
            if np.any(r < 0) or not np.all(np.isfinite(r)):
                raise ValidationError(f"posterior row {i} has invalid entries")
            if abs(r.sum() - 1.0) > 1e-10:
                raise ValidationError(f"posterior row {i} does not sum to 1")
            rows.append(r)
        self.rows = rows

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.rows[i]


@dataclass
class ValueSpec:
    """Linear value map: candidate c contributes W_V x_source(c)."""

    w_v: np.ndarray  # (d_out, d)

    def __post_init__(self):
        self.w_v = as_matrix(self.w_v, "W_V")

    @property
    def d_out(self) -> int:
        return self.w_v.shape[0]


def edge_posterior(mrf: PairwiseMRF) -> EdgePosterior:
    """Exact factorized posterior p(E | x): softmax per edge variable.

    Factorization is exact, not approximate: the prior factorizes and each
    candidate's potentials touch only that edge variable, so the joint
    posterior is the product of these rows (the brute-force enumeration
    oracle confirms this).
    """
    values = mrf.nodes.values()
    rows = []
    for i in range(mrf.n_edge_vars):
        logits = edge_logits(mrf, i, values)
        rows.append(np.exp(logits - log_sum_exp(logits)))
    return EdgePosterior(rows=rows)


def expected_output(mrf: PairwiseMRF, values: ValueSpec,
                    posterior: EdgePosterior) -> np.ndarray:
    """Weight each candidate's value W_V x_source(c) by the given
    distribution — the workhorse behind attend() and behind diagnosing
    approximating distributions q."""
    if values.w_v.shape[1] != mrf.nodes.dim:
        raise ValidationError(
            f"W_V column count {values.w_v.shape[1]} != node dimension "
            f"{mrf.nodes.dim}")
    if len(posterior) != mrf.n_edge_vars:
        raise ValidationError("posterior rows must match edge variables")
    node_vals = mrf.nodes.values()
    out = np.zeros((mrf.n_edge_vars, values.d_out))
    for i in range(mrf.n_edge_vars):
        ev = mrf.prior.edge_vars[i]
        row = posterior[i]
        if row.shape[0] != ev.n_candidates:
            raise ValidationError(
                f"posterior row {i} length {row.shape[0]} != "
                f"{ev.n_candidates} candidates")
        acc = np.zeros(values.d_out)
        for c in range(ev.n_candidates):
            src = node_vals[ev.candidates[c, 0]]
            acc += row[c] * (values.w_v @ src)
        out[i] = acc
    return out


def attend(mrf: PairwiseMRF, values: ValueSpec) -> np.ndarray:
    """Posterior expectation of the value function, one output row per edge
    variable: out_i = Σ_c p_i(c) · W_V x_source(c)."""
    return expected_output(mrf, values, edge_posterior(mrf))


def closed_form_cross_attention(queries, keys, w_q, w_k, w_v,
                                beta: float = 1.0) -> np.ndarray:
    """Row-wise softmax attention computed directly from matrices.

    Row i = Σ_j softmax_j(β q_iᵀ W_Qᵀ W_K k_j) · W_V k_j. Explicit loops over
    queries then keys; serves both as the user-facing path and as the oracle
    the MRF path is tested against.
    """
    queries = as_matrix(queries, "queries")
    keys = as_matrix(keys, "keys")
    w_q = as_matrix(w_q, "W_Q")
    w_k = as_matrix(w_k, "W_K")
    w_v = as_matrix(w_v, "W_V")
    d = queries.shape[1]
    if keys.shape[1] != d:
        raise ValidationError("keys and queries must share their dimension")
    if w_q.shape[1] != d or w_k.shape[1] != d or w_v.shape[1] != d:
        raise ValidationError("projection matrices must have d columns")
    if w_q.shape[0] != w_k.shape[0]:
        raise ValidationError("W_Q and W_K must map into the same dimension")
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")

    w = w_q.T @ w_k
    m, n = queries.shape[0], keys.shape[0]
    out = np.zeros((m, w_v.shape[0]))
    for i in range(m):
        logits = np.empty(n)
        for j in range(n):
            logits[j] = beta * float(queries[i] @ w @ keys[j])
        weights = np.exp(logits - log_sum_exp(logits))
        row = np.zeros(w_v.shape[0])
        for j in range(n):
            row += weights[j] * (w_v @ keys[j])
        out[i] = row
    return out


def closed_form_self_attention(x, w_q, w_k, w_v, beta: float = 1.0) -> np.ndarray:
    """Self attention: cross attention with queries = keys = x."""
    x = as_matrix(x, "x")
    return closed_form_cross_attention(x, x, w_q, w_k, w_v, beta)
