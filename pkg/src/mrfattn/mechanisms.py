"""Named iterative attention mechanisms as configurations of one engine.

Hopfield retrieval, slot attention and block-slot attention differ only in
which candidate edges their structural priors admit; every step function
here builds the corresponding MRF and applies the convex-concave fixed-point
update from `vfe`. The direct softmax formulas from the literature are what
these updates reduce to, and the test suite holds them as oracles:

  hopfield   μ*   = Σ_j softmax_j(β μᵀ W x_j) W x_j            (W = W_Qᵀ W_K)
  slot       μ_i* = Σ_j softmax_i(β μ_iᵀ W x_j) W x_j          (softmax over slots)
  block-slot μ_i* = slot term + Σ_b Σ_k softmax_k(β μ_i⁽ᵇ⁾·m_k⁽ᵇ⁾) m_k⁽ᵇ⁾

Slot attention here is the basic update only — no RNN/GRU refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mrf import block_slot_mrf, hopfield_mrf, slot_mrf
from .numerics import ValidationError, as_matrix, as_vector, make_rng
from .vfe import CCCPState, DEFAULT_MAX_ITER, DEFAULT_TOL, cccp_step, solve


def _bilinear(w_q, w_k, d: int) -> np.ndarray:
    """Compose the bilinear form W_Qᵀ W_K; identity when both are omitted."""
    if w_q is None and w_k is None:
        return np.eye(d)
    w_q = np.eye(d) if w_q is None else as_matrix(w_q, "W_Q")
    w_k = np.eye(d) if w_k is None else as_matrix(w_k, "W_K")
    if w_q.shape != w_k.shape or w_q.shape[1] != d:
        raise ValidationError("W_Q and W_K must share shape (p, d)")
    return w_q.T @ w_k


@dataclass
class HopfieldConfig:
    """Associative-memory retrieval: stored patterns plus a query state."""

    patterns: np.ndarray          # (n, d)
    query: np.ndarray             # (d,) initial state ξ
    w_q: np.ndarray | None = None
    w_k: np.ndarray | None = None
    beta: float = 1.0

    def __post_init__(self):
        self.patterns = as_matrix(self.patterns, "patterns")
        self.query = as_vector(self.query, "query")
        if self.query.shape[0] != self.patterns.shape[1]:
            raise ValidationError("query dimension must match patterns")

    @property
    def w(self) -> np.ndarray:
        return _bilinear(self.w_q, self.w_k, self.patterns.shape[1])


def hopfield_step(cfg: HopfieldConfig, mu) -> np.ndarray:
    """One retrieval update of the state, via the MRF fixed point."""
    mu = as_vector(mu, "mu")
    mrf = hopfield_mrf(cfg.patterns, mu[None, :], cfg.w, cfg.beta)
    return cccp_step(mrf, norm="raw_sum")[0]


def hopfield_retrieve(cfg: HopfieldConfig, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER):
    """Iterate from the query until |ΔF| < tol; returns (final μ, CCCPState)."""
    mrf = hopfield_mrf(cfg.patterns, cfg.query[None, :], cfg.w, cfg.beta)
    state = solve(mrf, norm="raw_sum", tol=tol, max_iter=max_iter)
    return state.mu[0], state


@dataclass
class SlotConfig:
    """Latent slots competing to explain observed inputs.

    init: explicit (m, d) slot initialization, or None to draw a seeded one
    (Gaussian directions scaled to the mean input norm — all slots share a
    common norm, which is also the regime of the EM correspondence).
    """

    inputs: np.ndarray            # (n, d)
    num_slots: int
    w: np.ndarray | None = None   # bilinear form, identity if omitted
    beta: float = 1.0
    init: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        self.inputs = as_matrix(self.inputs, "inputs")
        if self.num_slots < 1:
            raise ValidationError("num_slots must be >= 1")
        if self.w is not None:
            self.w = as_matrix(self.w, "W")
        if self.init is not None:
            self.init = as_matrix(self.init, "init")
            if self.init.shape != (self.num_slots, self.inputs.shape[1]):
                raise ValidationError(
                    f"init shape {self.init.shape} != "
                    f"({self.num_slots}, {self.inputs.shape[1]})")

    @property
    def bilinear(self) -> np.ndarray:
        return np.eye(self.inputs.shape[1]) if self.w is None else self.w

    def initial_slots(self) -> np.ndarray:
        if self.init is not None:
            return self.init.copy()
        if self.seed is None:
            raise ValidationError("slot init requires either init or seed")
        return init_slots(self.inputs, self.num_slots, self.seed)


def init_slots(inputs, num_slots: int, seed: int) -> np.ndarray:
    """Seeded Gaussian directions, every slot scaled to the mean input norm."""
    inputs = as_matrix(inputs, "inputs")
    rng = make_rng(seed)
    g = rng.standard_normal((num_slots, inputs.shape[1]))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    scale = float(np.mean(np.linalg.norm(inputs, axis=1)))
    if scale == 0.0:
        scale = 1.0
    return g / norms * scale


def slot_step(cfg: SlotConfig, mu, norm: str = "raw_sum") -> np.ndarray:
    """One slot update. softmax runs over slots (per input), so raw_sum sums
    each slot's share of every input; weighted_mean renormalizes by the
    slot's total attention mass — the EM-like mean update."""
    mu = as_matrix(mu, "mu")
    mrf = slot_mrf(cfg.inputs, mu, cfg.bilinear, cfg.beta)
    return cccp_step(mrf, norm=norm)


def slot_run(cfg: SlotConfig, norm: str = "raw_sum", tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER):
    """Iterate slot_step from the configured initialization until |ΔF| < tol.

    Returns (final slots, CCCPState). Descent along the trace is guaranteed
    for raw_sum only.
    """
    mrf = slot_mrf(cfg.inputs, cfg.initial_slots(), cfg.bilinear, cfg.beta)
    state = solve(mrf, norm=norm, tol=tol, max_iter=max_iter)
    return state.mu, state


@dataclass
class BlockSlotConfig:
    """Slot attention whose slots are split into blocks with private memories.

    memories[b] is the (l_b, d_b) bank of block b; the block dimensions must
    partition the slot dimension exactly (Σ d_b = d, in order).
    beta_memory optionally rescales the memory potentials relative to beta;
    note the retrieved memory contribution is the gradient of the potential,
    so it scales by the same factor.
    """

    inputs: np.ndarray
    num_slots: int
    memories: list                 # list of (l_b, d_b) arrays
    w: np.ndarray | None = None
    beta: float = 1.0
    beta_memory: float | None = None
    init: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        self.inputs = as_matrix(self.inputs, "inputs")
        if self.num_slots < 1:
            raise ValidationError("num_slots must be >= 1")
        self.memories = [as_matrix(m, f"memories[{b}]")
                         for b, m in enumerate(self.memories)]
        if sum(m.shape[1] for m in self.memories) != self.inputs.shape[1]:
            raise ValidationError("block dimensions must sum to the input "
                                  "dimension")
        if self.w is not None:
            self.w = as_matrix(self.w, "W")
        if self.init is not None:
            self.init = as_matrix(self.init, "init")
            if self.init.shape != (self.num_slots, self.inputs.shape[1]):
                raise ValidationError("init shape must be (num_slots, d)")

    @property
    def bilinear(self) -> np.ndarray:
        return np.eye(self.inputs.shape[1]) if self.w is None else self.w

    def initial_slots(self) -> np.ndarray:
        if self.init is not None:
            return self.init.copy()
        if self.seed is None:
            raise ValidationError("slot init requires either init or seed")
        return init_slots(self.inputs, self.num_slots, self.seed)

    def build_mrf(self, mu):
        mem_scale = (1.0 if self.beta_memory is None
                     else self.beta_memory / self.beta)
        memories = (self.memories if mem_scale == 1.0
                    else [m * mem_scale for m in self.memories])
        # Scaling the banks scales ψ = z·m and its gradient alike; with the
        # default shared temperature the banks enter untouched.
        return block_slot_mrf(self.inputs, mu, memories, self.bilinear,
                              self.beta, memory_edges="per_slot_block")


def block_slot_step(cfg: BlockSlotConfig, mu) -> np.ndarray:
    """One block-slot update: slot competition plus per-block memory recall.

    The memory softmax runs over each block's candidate memories (one edge
    variable per slot per block), so with a single memory per block the
    memory term is exactly the concatenation of the m_1⁽ᵇ⁾, and with no
    memories this reduces to slot_step raw_sum.
    """
    mu = as_matrix(mu, "mu")
    return cccp_step(cfg.build_mrf(mu), norm="raw_sum")


def block_slot_run(cfg: BlockSlotConfig, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER):
    """Iterate block_slot_step until |ΔF| < tol; returns (slots, CCCPState)."""
    mrf = cfg.build_mrf(cfg.initial_slots())
    state = solve(mrf, norm="raw_sum", tol=tol, max_iter=max_iter)
    return state.mu, state
