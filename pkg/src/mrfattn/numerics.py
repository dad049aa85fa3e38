"""Shared numerical primitives: stable log-space reductions and seeded randomness.

All probability work in this package happens in log space; probabilities are
exponentiated only at the boundary (posterior rows, sampled frequencies).
Everything is float64.

Randomness contract: `make_rng(seed)` returns a numpy Generator backed by
PCG64. PCG64 produces the identical stream for the identical seed on every
platform, so any sample sequence in this package is reproducible from a
single integer. Substreams (e.g. for Monte-Carlo batches) are derived with
`spawn_rngs`, which uses numpy's SeedSequence spawning and is equally
deterministic.
"""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Input violates a documented precondition (shape, range, emptiness)."""


class NumericError(RuntimeError):
    """A computation produced non-finite values (divergence, overflow)."""


def as_array(x, name: str = "array") -> np.ndarray:
    """Coerce to a float64 ndarray and reject NaN/Inf entries."""
    a = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def as_vector(x, name: str = "vector") -> np.ndarray:
    a = as_array(x, name)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-d array, got shape "
                              f"{a.shape}")
    return a


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    a = as_array(x, name)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-d, got shape {a.shape}")
    return a


def _check_logits(v, name: str) -> np.ndarray:
    # -inf is a legal logit (masked candidate); NaN and +inf are not.
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ValidationError(f"{name} must be 1-d")
    if a.size == 0:
        raise ValidationError("empty logit vector")
    if np.any(np.isnan(a)) or np.any(a == np.inf):
        raise ValidationError(f"{name} contains NaN or +inf")
    return a


def log_sum_exp(v) -> float:
    """ln Σ_k exp(v_k), computed with the max-shift so it never overflows.

    Entries of -inf contribute zero mass and are allowed (masked candidates);
    an all--inf input has no mass to sum and is an error.
    """
    a = _check_logits(v, "logits")
    m = float(np.max(a))
    if m == -np.inf:
        raise ValidationError("log_sum_exp of all -inf logits")
    return m + float(np.log(np.sum(np.exp(a - m))))


def softmax(v, beta: float = 1.0) -> np.ndarray:
    """exp(β v − lse(β v)): a probability vector, computed in log space.

    beta is the inverse temperature; large beta approaches hard argmax.
    """
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    a = _check_logits(v, "logits")
    scaled = beta * a
    return np.exp(scaled - log_sum_exp(scaled))


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator (PCG64) for the given 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent PCG64 substreams derived deterministically from seed."""
    children = np.random.SeedSequence(int(seed)).spawn(int(n))
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
