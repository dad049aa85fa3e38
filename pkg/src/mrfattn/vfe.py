"""Collapsed variational inference over latent-node MRFs.

Edge variables are marginalized exactly (they factorize), latent node values
are point-estimated: with a Gaussian recognition density and a zeroth-order
Laplace collapse the objective is

    F(x, μ) = -Σ_i ln Σ_c exp(edge_logit_i(c)) - Σ_v β ψ_v

evaluated with latent values set to the means μ. F is Z-free like everything
else, so only differences and gradients are meaningful.

The gradient takes softmax form: each edge variable contributes its
posterior-weighted candidate gradients (the ubiquitous attention softmax).
With quadratic node potentials, splitting F into the convex node term
+β/2 Σ‖μ‖² and the concave -Σ lse term gives the convex-concave fixed point

    μ_j* = Σ_i Σ_c p_i(c) ∂ψ_e(c)/∂μ_j

(β cancels between the two terms; it acts only inside the softmax). Each
step never increases F, with equality exactly at stationary points. The
guarantee requires every candidate edge to touch at most one latent
endpoint (-Σ lse is then concave); latent-latent edges are evaluated
faithfully but void the guarantee.

Accumulation order is fixed: edge variables in index order, candidates in
listed order, one synchronous (Jacobi) update of all latents per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mrf import PairwiseMRF, edge_logits, node_potential_total
from .numerics import NumericError, ValidationError, log_sum_exp

NORM_MODES = ("raw_sum", "weighted_mean")

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100


@dataclass
class CCCPState:
    """Solver trace: final means, per-iteration free energy and gradient norm."""

    mu: np.ndarray
    iteration: int
    f_trace: list
    grad_trace: list
    converged: bool
    tol: float
    max_iter: int


def _check_norm(norm: str) -> None:
    if norm not in NORM_MODES:
        raise ValidationError(f"norm must be one of {NORM_MODES}, got {norm!r}")


def free_energy(mrf: PairwiseMRF, mu: np.ndarray | None = None) -> float:
    """F(x, μ) = -Σ_i lse(candidate logits) - Σ_v β ψ_v at means μ.

    Defaults to the MRF's current latent means. Equals the negative log
    normalizer of the brute-force joint table exactly (same omitted Z).
    """
    values = mrf.nodes.values(mu)
    total = 0.0
    for i in range(mrf.n_edge_vars):
        total -= log_sum_exp(edge_logits(mrf, i, values))
    total -= node_potential_total(mrf, mu)
    return total


def _posterior_weighted_sums(mrf: PairwiseMRF, values: np.ndarray):
    """Per-latent posterior-weighted edge gradients and received mass.

    Returns (acc, mass): acc[j] = Σ_i Σ_c p_i(c) ∂ψ_e(c)/∂μ_j and mass[j]
    the matching Σ p over candidate-endpoint incidences. ∂ψ_e(s,t)/∂t = W s
    and ∂ψ_e(s,t)/∂s = Wᵀ t; a latent appearing at both endpoints of one
    candidate receives both contributions.
    """
    n_obs = mrf.nodes.n_obs
    n_lat = mrf.nodes.n_lat
    d = mrf.nodes.dim
    acc = np.zeros((n_lat, d))
    mass = np.zeros(n_lat)
    # overflow during divergence is tolerated; solve() detects non-finite
    # means and free energies and reports the iteration
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(mrf.n_edge_vars):
            ev = mrf.prior.edge_vars[i]
            logits = edge_logits(mrf, i, values)
            p = np.exp(logits - log_sum_exp(logits))
            w = mrf.edge_w(i)
            src = ev.candidates[:, 0]
            tgt = ev.candidates[:, 1]
            s_vals = values[src]
            t_vals = values[tgt]
            t_lat = tgt >= n_obs
            if np.any(t_lat):
                np.add.at(acc, tgt[t_lat] - n_obs,
                          p[t_lat, None] * (s_vals[t_lat] @ w.T))
                np.add.at(mass, tgt[t_lat] - n_obs, p[t_lat])
            s_lat = src >= n_obs
            if np.any(s_lat):
                np.add.at(acc, src[s_lat] - n_obs,
                          p[s_lat, None] * (t_vals[s_lat] @ w))
                np.add.at(mass, src[s_lat] - n_obs, p[s_lat])
    return acc, mass


def free_energy_grad(mrf: PairwiseMRF, mu: np.ndarray | None = None) -> np.ndarray:
    """Analytic ∂F/∂μ, one row per latent node.

    Softmax form: ∂F/∂μ_j = β μ_j · [quadratic nodes] − β Σ_i Σ_c p_i(c)
    ∂ψ_e(c)/∂μ_j. Agrees with central finite differences of free_energy.
    """
    values = mrf.nodes.values(mu)
    acc, _ = _posterior_weighted_sums(mrf, values)
    grad = -mrf.beta * acc
    if mrf.potentials.node_kind == "quadratic":
        grad += mrf.beta * values[mrf.nodes.n_obs:]
    return grad


def cccp_step(mrf: PairwiseMRF, mu: np.ndarray | None = None,
              norm: str = "raw_sum") -> np.ndarray:
    """One synchronous convex-concave fixed-point update of all latent means.

    raw_sum is the literal fixed point (descent guaranteed); weighted_mean
    divides each latent's update by its total received posterior mass, the
    normalization under which slot updates coincide with an EM mean step.
    The log-prior sits inside the softmax (it is part of the posterior); β
    scales potentials inside the softmax only. A latent receiving zero mass
    keeps its current value under weighted_mean (raw_sum sends it to 0, its
    stationary point).
    """
    _check_norm(norm)
    if mrf.potentials.node_kind != "quadratic":
        raise ValidationError("CCCP requires quadratic node potentials")
    values = mrf.nodes.values(mu)
    acc, mass = _posterior_weighted_sums(mrf, values)
    if norm == "raw_sum":
        return acc
    current = values[mrf.nodes.n_obs:]
    out = np.empty_like(acc)
    for j in range(acc.shape[0]):
        out[j] = acc[j] / mass[j] if mass[j] > 0 else current[j]
    return out


def solve(mrf: PairwiseMRF, mu0: np.ndarray | None = None,
          norm: str = "raw_sum", tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER) -> CCCPState:
    """Iterate cccp_step until |ΔF| < tol or max_iter steps.

    Convergence is measured on F (the quantity with a guarantee), not on
    ‖Δμ‖. On return the MRF's latent means are set to the final iterate.
    Non-finite F raises NumericError naming the offending iteration.
    """
    _check_norm(norm)
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    mu = np.array(mrf.nodes.latent if mu0 is None else mu0, dtype=np.float64)
    if mu.shape != mrf.nodes.latent.shape:
        raise ValidationError(
            f"mu0 shape {mu.shape} != latent shape {mrf.nodes.latent.shape}")

    f_prev = free_energy(mrf, mu)
    if not np.isfinite(f_prev):
        raise NumericError("free energy non-finite at iteration 0")
    f_trace = [f_prev]
    grad_trace = [float(np.max(np.abs(free_energy_grad(mrf, mu))))
                  if mrf.nodes.n_lat else 0.0]
    converged = False
    iteration = 0
    for t in range(1, max_iter + 1):
        # Within the loop shapes are already validated, so a ValidationError
        # can only mean overflow inside the potentials: report it as
        # divergence at this iteration.
        try:
            mu = cccp_step(mrf, mu, norm)
            finite = bool(np.all(np.isfinite(mu)))
            f = free_energy(mrf, mu) if finite else np.nan
        except ValidationError as exc:
            raise NumericError(
                f"free energy non-finite at iteration {t}") from exc
        if not np.isfinite(f):
            raise NumericError(f"free energy non-finite at iteration {t}")
        f_trace.append(f)
        grad_trace.append(float(np.max(np.abs(free_energy_grad(mrf, mu))))
                          if mrf.nodes.n_lat else 0.0)
        iteration = t
        if abs(f - f_prev) < tol:
            converged = True
            break
        f_prev = f
    mrf.nodes.set_latent(mu)
    return CCCPState(mu=mu, iteration=iteration, f_trace=f_trace,
                     grad_trace=grad_trace, converged=converged, tol=tol,
                     max_iter=max_iter)
