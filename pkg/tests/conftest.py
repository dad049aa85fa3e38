"""Shared instance generators and independent reference formulas.

The direct_* helpers restate each mechanism's softmax update from scratch
(no package internals) so the engine path has something independent to be
measured against.
"""

import numpy as np

import mrfattn as ma


def random_mrf(rng, d_max=4, n_obs_max=5, n_lat_max=3, max_edge_vars=4,
               max_cands=4, with_latent=True, latent_latent=False,
               nonuniform=False, node_kind="quadratic",
               beta_range=(0.5, 2.0), w_overrides=True):
    """A small random latent-edge MRF.

    Candidate edges avoid latent-latent pairs by default (the regime with
    the fixed-point descent guarantee).
    """
    d = int(rng.integers(1, d_max + 1))
    n_obs = int(rng.integers(1, n_obs_max + 1))
    n_lat = int(rng.integers(1, n_lat_max + 1)) if with_latent else 0
    n_nodes = n_obs + n_lat
    allowed = n_nodes * n_nodes - (0 if latent_latent else n_lat * n_lat)
    m = int(rng.integers(1, max_edge_vars + 1))
    evs = []
    for _ in range(m):
        k = min(int(rng.integers(1, max_cands + 1)), allowed)
        pairs = set()
        while len(pairs) < k:
            s = int(rng.integers(n_nodes))
            t = int(rng.integers(n_nodes))
            if not latent_latent and s >= n_obs and t >= n_obs:
                continue
            pairs.add((s, t))
        cands = np.array(sorted(pairs), dtype=np.intp)
        if nonuniform:
            weights = rng.random(k) + 0.1
            lp = np.log(weights / weights.sum())
        else:
            lp = ma.uniform_log_prior(k)
        w = (rng.standard_normal((d, d))
             if w_overrides and rng.random() < 0.3 else None)
        evs.append(ma.EdgeVariable(candidates=cands, log_prior=lp, w=w))
    nodes = ma.NodeSet(observed=rng.standard_normal((n_obs, d)),
                       latent=rng.standard_normal((n_lat, d)))
    pot = ma.PotentialSpec(w=rng.standard_normal((d, d)), node_kind=node_kind)
    beta = float(rng.uniform(*beta_range))
    return ma.PairwiseMRF(nodes=nodes, prior=ma.StructuralPrior(evs),
                          potentials=pot, beta=beta)


def finite_diff_grad(mrf, mu, h=1e-5):
    """Central differences of the collapsed free energy."""
    g = np.zeros_like(mu)
    for j in range(mu.shape[0]):
        for i in range(mu.shape[1]):
            up = mu.copy()
            up[j, i] += h
            dn = mu.copy()
            dn[j, i] -= h
            g[j, i] = (ma.free_energy(mrf, up) - ma.free_energy(mrf, dn)) / (2 * h)
    return g


def stable_softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    w = np.exp(logits - logits.max())
    return w / w.sum()


def direct_hopfield_step(patterns, w, beta, mu):
    """mu* = sum_j softmax_j(beta mu.W.x_j) W x_j."""
    mapped = patterns @ w.T
    weights = stable_softmax(beta * (patterns @ (w.T @ mu)))
    return weights @ mapped


def direct_slot_step(inputs, w, beta, mu, norm):
    """Attention over the slot axis; raw sum or mass-normalized mean."""
    logits = beta * (mu @ w @ inputs.T)            # (m, n)
    weights = np.exp(logits - logits.max(axis=0))
    weights /= weights.sum(axis=0)
    raw = weights @ (inputs @ w.T)
    if norm == "raw_sum":
        return raw
    return raw / weights.sum(axis=1, keepdims=True)


def direct_block_slot_step(inputs, w, beta, mu, memories):
    """Slot term plus per-block memory softmax over that block's bank."""
    out = direct_slot_step(inputs, w, beta, mu, "raw_sum")
    offset = 0
    for bank in memories:
        l_b, d_b = bank.shape
        sl = slice(offset, offset + d_b)
        if l_b:
            for i in range(mu.shape[0]):
                wts = stable_softmax(beta * (bank @ mu[i, sl]))
                out[i, sl] += wts @ bank
        offset += d_b
    return out


def make_separated_patterns(rng, n=5, d=16, max_cos=0.3, tries=500):
    """Unit-norm patterns rejection-sampled to pairwise |cos| < max_cos."""
    for _ in range(tries):
        p = rng.standard_normal((n, d))
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        g = p @ p.T
        np.fill_diagonal(g, 0.0)
        if np.max(np.abs(g)) < max_cos:
            return p
    raise RuntimeError("could not sample separated patterns")
