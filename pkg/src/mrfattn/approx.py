"""Hard attention, top-k truncation, and KL information-loss diagnostics.

Soft attention is the exact posterior expectation; any cheaper scheme uses
some q in place of the posterior p, and its information loss is the relative
entropy D_KL[q ‖ p] (per edge variable, since both factorize). For hard
attention — a single posterior sample — the loss of a draw is -ln p(φ*),
whose expectation is exactly the posterior entropy H[p]: hard attention is
cheap precisely when the attention distribution is already peaked.

cost_proxy counts candidate potential evaluations. Every method here pays
the full count: even sampling requires the exact posterior first, which is
the quadratic-cost step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .marginal import EdgePosterior, ValueSpec, edge_posterior, expected_output
from .mrf import PairwiseMRF
from .numerics import ValidationError


@dataclass
class ApproxReport:
    """Diagnostics for one approximation method against the exact posterior."""

    method: str
    kl_per_edge_var: np.ndarray
    entropy_p: np.ndarray
    output_error: float
    cost_proxy: int


@dataclass
class HardSample:
    """One sampled edge configuration, with its value outputs if requested."""

    config: list
    outputs: np.ndarray | None = None


def entropy(p: EdgePosterior) -> np.ndarray:
    """Shannon entropy per edge variable, in nats (0 ln 0 = 0)."""
    out = np.empty(len(p))
    for i, row in enumerate(p.rows):
        nz = row[row > 0]
        out[i] = -float(np.sum(nz * np.log(nz)))
    return out


def kl_information_loss(p: EdgePosterior, q: EdgePosterior) -> np.ndarray:
    """D_KL[q ‖ p] per edge variable: Σ q ln(q/p), 0 ln 0 = 0.

    +inf where q places mass on a candidate p rules out.
    """
    if len(p) != len(q):
        raise ValidationError("p and q must have the same edge variables")
    out = np.empty(len(p))
    for i, (pr, qr) in enumerate(zip(p.rows, q.rows)):
        if pr.shape != qr.shape:
            raise ValidationError(f"row {i} length mismatch between p and q")
        if np.any((qr > 0) & (pr == 0)):
            out[i] = np.inf
            continue
        mask = qr > 0
        out[i] = float(np.sum(qr[mask] * (np.log(qr[mask]) - np.log(pr[mask]))))
    return out


def _sample_row(row: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(row)
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(idx, row.shape[0] - 1)


def hard_sample(posterior: EdgePosterior, rng: np.random.Generator,
                mrf: PairwiseMRF | None = None,
                values: ValueSpec | None = None) -> HardSample:
    """Draw one candidate per edge variable (independently, inverse-CDF).

    With mrf and values supplied, also returns the hard outputs
    W_V x_source(φ*_i). Identical seed, identical sample sequence.
    """
    config = [_sample_row(row, rng) for row in posterior.rows]
    outputs = None
    if mrf is not None and values is not None:
        if len(posterior) != mrf.n_edge_vars:
            raise ValidationError("posterior rows must match edge variables")
        node_vals = mrf.nodes.values()
        outputs = np.empty((len(config), values.d_out))
        for i, c in enumerate(config):
            src = mrf.prior.edge_vars[i].candidates[c, 0]
            outputs[i] = values.w_v @ node_vals[src]
    return HardSample(config=config, outputs=outputs)


def _multinomial_counts(row: np.ndarray, num_samples: int,
                        rng: np.random.Generator) -> np.ndarray:
    return rng.multinomial(num_samples, row / row.sum())


def expected_hard_loss(p: EdgePosterior, num_samples: int,
                       rng: np.random.Generator):
    """Monte-Carlo estimate of E[-ln p(φ*)] per edge variable.

    Returns (estimates, standard errors). The estimator draws candidate
    counts (multinomial, deterministic under the seed) and averages
    -ln p(c), which equals averaging over the individual draws. The
    estimate brackets the entropy H[p] within a few standard errors.
    """
    if num_samples < 1:
        raise ValidationError("num_samples must be >= 1")
    est = np.empty(len(p))
    se = np.empty(len(p))
    for i, row in enumerate(p.rows):
        counts = _multinomial_counts(row, num_samples, rng)
        drawn = counts > 0
        losses = -np.log(row[drawn])
        freq = counts[drawn] / num_samples
        mean = float(np.sum(freq * losses))
        var = float(np.sum(freq * losses * losses)) - mean * mean
        est[i] = mean
        if num_samples > 1:
            se[i] = np.sqrt(max(var, 0.0) * num_samples
                            / (num_samples - 1) / num_samples)
        else:
            se[i] = 0.0
    return est, se


def topk_approx(p: EdgePosterior, k: int) -> EdgePosterior:
    """Keep each row's k most probable candidates, renormalized.

    Ties broken toward the lowest candidate index. D_KL[q ‖ p] for this q is
    -ln(kept mass), so it is non-increasing in k and 0 at k = n.
    """
    rows = []
    for i, row in enumerate(p.rows):
        n = row.shape[0]
        if not 1 <= k <= n:
            raise ValidationError(
                f"k={k} out of range 1..{n} for edge variable {i}")
        order = np.argsort(-row, kind="stable")
        keep = order[:k]
        q = np.zeros(n)
        q[keep] = row[keep] / row[keep].sum()
        rows.append(q)
    return EdgePosterior(rows=rows)


def parse_method(method: str):
    """'soft', 'hard', or 'topK' (e.g. 'top4') -> ('topk', 4)."""
    m = method.strip().lower()
    if m in ("soft", "hard"):
        return (m, None)
    match = re.fullmatch(r"top-?k?[:]?(\d+)", m)
    if match:
        return ("topk", int(match.group(1)))
    raise ValidationError(f"unknown approximation method {method!r}")


def compare(mrf: PairwiseMRF, values: ValueSpec, methods,
            rng: np.random.Generator, num_samples: int = 1000) -> list:
    """Diagnose each method against exact (soft) attention.

    methods is an iterable of 'soft' | 'hard' | 'topK' strings. The soft
    output is the reference. For hard attention the KL column is the
    Monte-Carlo estimate of E[-ln p(φ*)] and output_error is the
    root-mean-square distance of the sampled outputs from the soft output,
    both computed from num_samples multinomial draws; for deterministic q
    (soft, top-k) the KL and distance are exact. cost_proxy is identical
    across methods: the Σ_i n_i candidate evaluations behind the posterior.
    """
    p = edge_posterior(mrf)
    soft_out = expected_output(mrf, values, p)
    ent = entropy(p)
    cost = int(sum(ev.n_candidates for ev in mrf.prior.edge_vars))
    node_vals = mrf.nodes.values()

    reports = []
    for method in methods:
        kind, k = parse_method(method)
        if kind == "soft":
            reports.append(ApproxReport(
                method="soft", kl_per_edge_var=np.zeros(len(p)),
                entropy_p=ent, output_error=0.0, cost_proxy=cost))
        elif kind == "topk":
            q = topk_approx(p, k)
            out_q = expected_output(mrf, values, q)
            err = float(np.linalg.norm(out_q - soft_out))
            reports.append(ApproxReport(
                method=f"top{k}", kl_per_edge_var=kl_information_loss(p, q),
                entropy_p=ent, output_error=err, cost_proxy=cost))
        else:
            kl = np.empty(len(p))
            sq_err = 0.0
            for i, row in enumerate(p.rows):
                counts = _multinomial_counts(row, num_samples, rng)
                drawn = counts > 0
                freq = counts[drawn] / num_samples
                kl[i] = float(np.sum(freq * -np.log(row[drawn])))
                ev = mrf.prior.edge_vars[i]
                cand_vals = node_vals[ev.candidates[:, 0]] @ values.w_v.T
                dev = cand_vals[drawn] - soft_out[i]
                sq_err += float(np.sum(freq * np.sum(dev * dev, axis=1)))
            reports.append(ApproxReport(
                method="hard", kl_per_edge_var=kl, entropy_p=ent,
                output_error=float(np.sqrt(sq_err)), cost_proxy=cost))
    return reports
