"""Latent-edge-structure generative model.

A pairwise MRF over node vectors, extended with a factorized categorical
prior over which edges exist. Each `EdgeVariable` picks one directed edge
from its candidate list; the unnormalized log-joint of a full configuration
E = (c_1, ..., c_m) is

    ln p(x, E) = Σ_v β ψ_v(x_v) + Σ_i [ ln p_i(c_i) + β ψ_e(c_i) ]

with node potentials ψ_v(x) = -½‖x‖² (or none) and bilinear edge potentials
ψ_e(s, t) = x_tᵀ W x_s. The normalizer Z is never computed: every downstream
quantity (posteriors, free-energy differences, gradients) is Z-free.

Nodes are indexed globally: observed nodes first (0 .. n_obs-1), then latent
nodes (n_obs .. n_obs+n_lat-1). Latent node values are the variational means
and are the only mutable state; everything else is frozen at construction.

The builders at the bottom assemble the candidate structures that reproduce
the standard attention mechanisms: cross, self (self-edge included), Hopfield
retrieval, slot competition, and block-slot with per-block memory banks.
A -inf log-prior entry masks a candidate (its posterior weight is exactly 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import ValidationError, as_matrix, log_sum_exp, make_rng

NODE_KINDS = ("none", "quadratic")

# Tolerance on lse(log_prior) == 0 at construction.
_PRIOR_TOL = 1e-12


@dataclass
class NodeSet:
    """Observed vectors x and latent means mu, all of one dimension d."""

    observed: np.ndarray  # (n_obs, d)
    latent: np.ndarray    # (n_lat, d), current variational means

    def __post_init__(self):
        self.observed = np.asarray(self.observed, dtype=np.float64)
        self.latent = np.asarray(self.latent, dtype=np.float64)
        if self.observed.ndim != 2:
            raise ValidationError("observed nodes must be a (n_obs, d) array")
        if self.latent.ndim != 2:
            raise ValidationError("latent nodes must be a (n_lat, d) array")
        if self.latent.shape[0] > 0 and self.latent.shape[1] != self.observed.shape[1]:
            raise ValidationError(
                f"latent dim {self.latent.shape[1]} != observed dim "
                f"{self.observed.shape[1]}")
        if not np.all(np.isfinite(self.observed)):
            raise ValidationError("observed node values must be finite")
        if not np.all(np.isfinite(self.latent)):
            raise ValidationError("latent node values must be finite")

    @property
    def dim(self) -> int:
        return self.observed.shape[1]

    @property
    def n_obs(self) -> int:
        return self.observed.shape[0]

    @property
    def n_lat(self) -> int:
        return self.latent.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.n_obs + self.n_lat

    def is_latent(self, i: int) -> bool:
        return i >= self.n_obs

    def latent_index(self, i: int) -> int:
        """Position of global node i within the latent block."""
        return i - self.n_obs

    def values(self, mu: np.ndarray | None = None) -> np.ndarray:
        """All node values stacked (n_nodes, d); latents replaced by mu if given."""
        lat = self.latent if mu is None else np.asarray(mu, dtype=np.float64)
        if lat.shape != self.latent.shape:
            raise ValidationError(
                f"means shape {lat.shape} != latent shape {self.latent.shape}")
        if self.n_lat == 0:
            return self.observed
        return np.vstack([self.observed, lat])

    def set_latent(self, mu: np.ndarray) -> None:
        mu = np.asarray(mu, dtype=np.float64)
        if mu.shape != self.latent.shape:
            raise ValidationError(
                f"means shape {mu.shape} != latent shape {self.latent.shape}")
        self.latent[...] = mu


@dataclass
class EdgeVariable:
    """One latent categorical variable over candidate directed edges.

    candidates[c] = (source, target) global node indices. log_prior must be
    normalized (lse == 0 within 1e-12); -inf entries mask candidates. An
    optional bilinear form w overrides the model-wide default for this
    variable's edge potentials.
    """

    candidates: np.ndarray          # (k, 2) int
    log_prior: np.ndarray           # (k,)
    w: np.ndarray | None = None     # optional (d, d) override

    def __post_init__(self):
        self.candidates = np.asarray(self.candidates, dtype=np.intp)
        if self.candidates.ndim != 2 or self.candidates.shape[1] != 2:
            raise ValidationError("candidates must be a (k, 2) index array")
        if self.candidates.shape[0] == 0:
            raise ValidationError("edge variable needs at least one candidate")
        pairs = {tuple(p) for p in self.candidates.tolist()}
        if len(pairs) != self.candidates.shape[0]:
            raise ValidationError("candidate edges must be distinct")
        self.log_prior = np.asarray(self.log_prior, dtype=np.float64)
        if self.log_prior.shape != (self.candidates.shape[0],):
            raise ValidationError("log_prior length must match candidates")
        if np.any(np.isnan(self.log_prior)) or np.any(self.log_prior == np.inf):
            raise ValidationError("log_prior entries must be finite or -inf")
        if abs(log_sum_exp(self.log_prior)) > _PRIOR_TOL:
            raise ValidationError(
                "log_prior must be normalized: log-sum-exp within 1e-12 of 0")

    @property
    def n_candidates(self) -> int:
        return self.candidates.shape[0]


@dataclass
class StructuralPrior:
    """Factorized prior over edges: independent edge variables."""

    edge_vars: list[EdgeVariable]

    def __len__(self) -> int:
        return len(self.edge_vars)


@dataclass
class PotentialSpec:
    """Node potential kind and the default bilinear edge form W."""

    w: np.ndarray                  # (d, d) default bilinear form
    node_kind: str = "quadratic"   # "quadratic": ψ_v = -½‖x‖²; "none": 0

    def __post_init__(self):
        self.w = as_matrix(self.w, "W")
        if self.node_kind not in NODE_KINDS:
            raise ValidationError(
                f"node_kind must be one of {NODE_KINDS}, got {self.node_kind!r}")


@dataclass
class PairwiseMRF:
    """Nodes + structural prior + potentials + inverse temperature β.

    β scales both node and edge potentials inside the log-joint; it houses
    the 1/√d softmax scale of standard attention (see `scaled_beta`).
    """

    nodes: NodeSet
    prior: StructuralPrior
    potentials: PotentialSpec
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError(f"beta must be positive, got {self.beta}")
        d = self.nodes.dim
        if self.potentials.w.shape != (d, d):
            raise ValidationError(
                f"default W shape {self.potentials.w.shape} != ({d}, {d})")
        n = self.nodes.n_nodes
        for i, ev in enumerate(self.prior.edge_vars):
            if np.any(ev.candidates < 0) or np.any(ev.candidates >= n):
                raise ValidationError(
                    f"edge variable {i} references node outside 0..{n - 1}")
            if ev.w is not None and ev.w.shape != (d, d):
                raise ValidationError(
                    f"edge variable {i} W override shape {ev.w.shape} != ({d}, {d})")

    @property
    def n_edge_vars(self) -> int:
        return len(self.prior.edge_vars)

    def edge_w(self, ev_index: int) -> np.ndarray:
        ev = self.prior.edge_vars[ev_index]
        return self.potentials.w if ev.w is None else ev.w


def scaled_beta(d: int) -> float:
    """The 1/√d inverse-temperature convention of dot-product attention."""
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    return 1.0 / np.sqrt(float(d))


def node_potential_total(mrf: PairwiseMRF, mu: np.ndarray | None = None) -> float:
    """Σ_v β ψ_v over all nodes (observed and latent), at means mu."""
    if mrf.potentials.node_kind == "none":
        return 0.0
    values = mrf.nodes.values(mu)
    return float(mrf.beta * (-0.5) * np.sum(values * values))


def edge_logits(mrf: PairwiseMRF, ev_index: int,
                values: np.ndarray | None = None) -> np.ndarray:
    """All candidate logits of one edge variable: log_prior + β ψ_e.

    ψ_e(s, t) = x_tᵀ W x_s. Node potentials are excluded: within one edge
    variable they are constant across candidates, so they cancel in softmax.
    """
    ev = mrf.prior.edge_vars[ev_index]
    if values is None:
        values = mrf.nodes.values()
    w = mrf.edge_w(ev_index)
    src = values[ev.candidates[:, 0]]
    tgt = values[ev.candidates[:, 1]]
    # overflow here means divergence; callers detect the non-finite result
    with np.errstate(over="ignore", invalid="ignore"):
        psi = np.sum((tgt @ w) * src, axis=1)
    return ev.log_prior + mrf.beta * psi


def edge_logit(mrf: PairwiseMRF, ev_index: int, cand_index: int) -> float:
    """log_prior[cand] + β ψ_e for one candidate of one edge variable."""
    if not 0 <= ev_index < mrf.n_edge_vars:
        raise ValidationError(f"edge variable index {ev_index} out of range")
    ev = mrf.prior.edge_vars[ev_index]
    if not 0 <= cand_index < ev.n_candidates:
        raise ValidationError(
            f"candidate index {cand_index} out of range for edge variable "
            f"{ev_index}")
    values = mrf.nodes.values()
    w = mrf.edge_w(ev_index)
    s, t = ev.candidates[cand_index]
    psi = float(values[t] @ w @ values[s])
    return float(ev.log_prior[cand_index] + mrf.beta * psi)


def log_joint(mrf: PairwiseMRF, config) -> float:
    """Unnormalized ln p(x, E) for one full edge configuration.

    Z is omitted throughout the package, so only differences of log-joints
    are meaningful. Accumulation order: node term first, then edge variables
    in index order (the exact float identity with Σ edge_logit + node term
    is part of the contract).
    """
    config = list(config)
    if len(config) != mrf.n_edge_vars:
        raise ValidationError(
            f"config length {len(config)} != number of edge variables "
            f"{mrf.n_edge_vars}")
    total = node_potential_total(mrf)
    for i, c in enumerate(config):
        total += edge_logit(mrf, i, int(c))
    return total


# ---------------------------------------------------------------------------
# Priors and builders for the named mechanisms
# ---------------------------------------------------------------------------

def uniform_log_prior(k: int) -> np.ndarray:
    if k < 1:
        raise ValidationError("prior needs at least one candidate")
    return np.full(k, -np.log(float(k)))


def masked_uniform_log_prior(k: int, masked) -> np.ndarray:
    """Uniform over the unmasked candidates, -inf on the masked ones."""
    masked = set(int(m) for m in masked)
    live = k - len(masked)
    if live < 1:
        raise ValidationError("cannot mask every candidate")
    lp = np.full(k, -np.log(float(live)))
    for m in masked:
        if not 0 <= m < k:
            raise ValidationError(f"masked index {m} out of range")
        lp[m] = -np.inf
    return lp


def cross_attention_mrf(keys, queries, w, beta: float = 1.0,
                        node_kind: str = "quadratic",
                        log_priors=None) -> PairwiseMRF:
    """All nodes observed; one edge variable per query, candidates over keys.

    Edge variable i has candidates (key_j -> query_i), j = 0..n-1, so its
    posterior row is row i of the attention matrix. w is the full bilinear
    form (compose W_Qᵀ W_K yourself if you have separate projections).
    """
    keys = as_matrix(keys, "keys")
    queries = as_matrix(queries, "queries")
    if queries.shape[1] != keys.shape[1]:
        raise ValidationError("keys and queries must share their dimension")
    n, m = keys.shape[0], queries.shape[0]
    nodes = NodeSet(observed=np.vstack([keys, queries]),
                    latent=np.zeros((0, keys.shape[1])))
    evs = []
    for i in range(m):
        cands = np.array([[j, n + i] for j in range(n)], dtype=np.intp)
        lp = uniform_log_prior(n) if log_priors is None else log_priors[i]
        evs.append(EdgeVariable(candidates=cands, log_prior=lp))
    pot = PotentialSpec(w=np.asarray(w, dtype=np.float64), node_kind=node_kind)
    return PairwiseMRF(nodes=nodes, prior=StructuralPrior(evs), potentials=pot,
                       beta=beta)


def self_attention_mrf(x, w, beta: float = 1.0,
                       node_kind: str = "quadratic",
                       log_priors=None) -> PairwiseMRF:
    """Each node uniformly likely to connect to every node, itself included."""
    x = as_matrix(x, "x")
    n = x.shape[0]
    nodes = NodeSet(observed=x, latent=np.zeros((0, x.shape[1])))
    evs = []
    for i in range(n):
        cands = np.array([[j, i] for j in range(n)], dtype=np.intp)
        lp = uniform_log_prior(n) if log_priors is None else log_priors[i]
        evs.append(EdgeVariable(candidates=cands, log_prior=lp))
    pot = PotentialSpec(w=np.asarray(w, dtype=np.float64), node_kind=node_kind)
    return PairwiseMRF(nodes=nodes, prior=StructuralPrior(evs), potentials=pot,
                       beta=beta)


def hopfield_mrf(patterns, query_init, w, beta: float = 1.0) -> PairwiseMRF:
    """Latent queries retrieving from observed patterns.

    One edge variable per latent row of query_init, candidates
    (pattern_j -> latent_i) over all stored patterns. Node potentials are
    quadratic (the CCCP solver needs them).
    """
    patterns = as_matrix(patterns, "patterns")
    query_init = np.atleast_2d(np.asarray(query_init, dtype=np.float64))
    if query_init.shape[1] != patterns.shape[1]:
        raise ValidationError("query dimension must match pattern dimension")
    n, m = patterns.shape[0], query_init.shape[0]
    nodes = NodeSet(observed=patterns, latent=query_init.copy())
    evs = []
    for i in range(m):
        cands = np.array([[j, n + i] for j in range(n)], dtype=np.intp)
        evs.append(EdgeVariable(candidates=cands,
                                log_prior=uniform_log_prior(n)))
    pot = PotentialSpec(w=np.asarray(w, dtype=np.float64), node_kind="quadratic")
    return PairwiseMRF(nodes=nodes, prior=StructuralPrior(evs), potentials=pot,
                       beta=beta)


def slot_mrf(inputs, slot_init, w, beta: float = 1.0) -> PairwiseMRF:
    """Each observed input chooses among latent slots (softmax over slots).

    One edge variable per input j, candidates (input_j -> slot_i) over all
    slots — the axis flip relative to cross attention is what forces slot
    competition.
    """
    inputs = as_matrix(inputs, "inputs")
    slot_init = as_matrix(slot_init, "slots")
    if slot_init.shape[1] != inputs.shape[1]:
        raise ValidationError("slot dimension must match input dimension")
    n, m = inputs.shape[0], slot_init.shape[0]
    nodes = NodeSet(observed=inputs, latent=slot_init.copy())
    evs = []
    for j in range(n):
        cands = np.array([[j, n + i] for i in range(m)], dtype=np.intp)
        evs.append(EdgeVariable(candidates=cands,
                                log_prior=uniform_log_prior(m)))
    pot = PotentialSpec(w=np.asarray(w, dtype=np.float64), node_kind="quadratic")
    return PairwiseMRF(nodes=nodes, prior=StructuralPrior(evs), potentials=pot,
                       beta=beta)


def block_slot_mrf(inputs, slot_init, memories, w, beta: float = 1.0,
                   memory_edges: str = "per_slot_block") -> PairwiseMRF:
    """Slot attention plus block-wise associative memories.

    memories is a list of per-block banks, block b holding an (l_b, d_b)
    matrix with Σ d_b = d. Memory nodes are embedded into the full d
    dimensions (zero outside their block), so the plain dot product
    ψ(m, z) = zᵀ I m touches only that block's coordinates of the slot.

    memory_edges:
      "per_slot_block" (default): one edge variable per (slot, block) with
        candidates over that block's memories — softmax over memories, the
        form the block-slot update uses.
      "per_memory": one edge variable per memory with candidates over slots
        (softmax over slots). Provided for completeness; not what
        block_slot_step computes.
    """
    inputs = as_matrix(inputs, "inputs")
    slot_init = as_matrix(slot_init, "slots")
    d = inputs.shape[1]
    if slot_init.shape[1] != d:
        raise ValidationError("slot dimension must match input dimension")
    if memory_edges not in ("per_slot_block", "per_memory"):
        raise ValidationError(f"unknown memory_edges mode {memory_edges!r}")
    banks = [as_matrix(mb, f"memories[{b}]") for b, mb in enumerate(memories)]
    block_dims = [mb.shape[1] for mb in banks]
    if sum(block_dims) != d:
        raise ValidationError(
            f"block dimensions {block_dims} must sum to the slot dimension {d}")

    n, m = inputs.shape[0], slot_init.shape[0]
    # Embed each bank into full d dims, zero outside its block.
    embedded = []
    offset = 0
    for mb in banks:
        emb = np.zeros((mb.shape[0], d))
        emb[:, offset:offset + mb.shape[1]] = mb
        embedded.append(emb)
        offset += mb.shape[1]
    mem_nodes = (np.vstack(embedded) if embedded else np.zeros((0, d)))

    observed = np.vstack([inputs, mem_nodes])
    nodes = NodeSet(observed=observed, latent=slot_init.copy())
    slot_base = observed.shape[0]          # first latent (slot) global index

    evs = []
    for j in range(n):                     # input -> slot competition
        cands = np.array([[j, slot_base + i] for i in range(m)], dtype=np.intp)
        evs.append(EdgeVariable(candidates=cands,
                                log_prior=uniform_log_prior(m)))

    eye = np.eye(d)
    mem_base = n
    if memory_edges == "per_slot_block":
        for i in range(m):
            off = mem_base
            for mb in banks:
                l_b = mb.shape[0]
                if l_b:
                    cands = np.array([[off + k, slot_base + i]
                                      for k in range(l_b)], dtype=np.intp)
                    evs.append(EdgeVariable(candidates=cands,
                                            log_prior=uniform_log_prior(l_b),
                                            w=eye))
                off += l_b
    else:
        off = mem_base
        for mb in banks:
            for k in range(mb.shape[0]):
                cands = np.array([[off + k, slot_base + i]
                                  for i in range(m)], dtype=np.intp)
                evs.append(EdgeVariable(candidates=cands,
                                        log_prior=uniform_log_prior(m),
                                        w=eye))
            off += mb.shape[0]

    pot = PotentialSpec(w=np.asarray(w, dtype=np.float64), node_kind="quadratic")
    return PairwiseMRF(nodes=nodes, prior=StructuralPrior(evs), potentials=pot,
                       beta=beta)
