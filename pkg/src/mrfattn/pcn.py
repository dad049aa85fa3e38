"""Hierarchical predictive coding with optional marginalized connectivity.

Scalar-node convention: every neuron is one node, layer l predicts layer
l+1 through per-synapse weights, and each candidate edge (i in layer l,
j in layer l+1) carries the scalar prediction error

    ε_ij = z_j - w_ji z_i                                (weights[j, i])

Two energies over the same wiring:

  dense-baseline   E = ½ Σ k_j ε_ij²   over every layer-adjacent pair —
                   the classical precision-weighted PCN objective.
  marginalized     F = -Σ_j ln Σ_i (1/n_prev) exp(-½ β k_j ε_ij²) — each
                   receiving neuron j owns one edge variable over its
                   candidate senders, marginalized exactly. Its gradient
                   softmax-normalizes the prediction errors a neuron
                   receives; large β gives winner-take-all selection of the
                   best-predicting sender.

The gradients below are the exact derivatives of these energies (finite
differences are the ground truth in the tests). The classical dynamics
μ̇ ∝ -grad descend them; `relax` integrates that with a fixed Euler step.
The precision k_j and the ½β factor sit inside the softmax argument, as a
Gaussian log-density demands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import NumericError, ValidationError, log_sum_exp

PCN_MODES = ("dense-baseline", "marginalized")


@dataclass
class PCNLayer:
    """One layer: values, per-node precisions, weights from the layer below."""

    values: np.ndarray                 # (size,)
    precisions: np.ndarray             # (size,), > 0
    weights: np.ndarray | None = None  # (size, size_below); None for layer 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.precisions = np.asarray(self.precisions, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValidationError("layer values must be a nonempty vector")
        if self.precisions.shape != self.values.shape:
            raise ValidationError("precisions must match layer size")
        if np.any(self.precisions <= 0):
            raise ValidationError("precisions must be positive")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.ndim != 2 or self.weights.shape[0] != self.size:
                raise ValidationError(
                    "weights must be (layer size, size below)")

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass
class PCNNetwork:
    """Stack of layers, layer 0 observed; hierarchical wiring only."""

    layers: list
    mode: str = "marginalized"
    beta: float = 1.0

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("network needs at least one layer")
        if self.mode not in PCN_MODES:
            raise ValidationError(f"mode must be one of {PCN_MODES}")
        if not self.beta > 0:
            raise ValidationError("beta must be positive")
        if self.layers[0].weights is not None:
            raise ValidationError("layer 0 is observed and takes no weights")
        for l in range(1, len(self.layers)):
            w = self.layers[l].weights
            if w is None:
                raise ValidationError(f"layer {l} needs a weight matrix")
            below = self.layers[l - 1].size
            if w.shape != (self.layers[l].size, below):
                raise ValidationError(
                    f"layer {l} weights shape {w.shape} != "
                    f"({self.layers[l].size}, {below})")

    @property
    def sizes(self) -> list:
        return [layer.size for layer in self.layers]

    def get_values(self) -> list:
        return [layer.values.copy() for layer in self.layers]

    def set_values(self, values) -> None:
        for layer, v in zip(self.layers, values):
            v = np.asarray(v, dtype=np.float64)
            if v.shape != layer.values.shape:
                raise ValidationError("values shape mismatch")
            layer.values[...] = v


def build_network(sizes, weights, precisions=None, mode: str = "marginalized",
                  beta: float = 1.0) -> PCNNetwork:
    """Assemble a network from layer sizes, weight matrices and precisions.

    weights[l] maps layer l to layer l+1 predictions (shape size_{l+1} ×
    size_l); precisions may be None (all ones), per-layer scalars, or
    per-layer vectors.
    """
    sizes = [int(s) for s in sizes]
    if len(weights) != len(sizes) - 1:
        raise ValidationError("need one weight matrix per adjacent layer pair")
    layers = []
    for l, size in enumerate(sizes):
        if precisions is None:
            k = np.ones(size)
        else:
            k = np.asarray(precisions[l], dtype=np.float64)
            if k.ndim == 0:
                k = np.full(size, float(k))
        w = None if l == 0 else np.asarray(weights[l - 1], dtype=np.float64)
        layers.append(PCNLayer(values=np.zeros(size), precisions=k, weights=w))
    return PCNNetwork(layers=layers, mode=mode, beta=beta)


def _values_or_current(net: PCNNetwork, values):
    if values is None:
        return [layer.values for layer in net.layers]
    if len(values) != len(net.layers):
        raise ValidationError("need one value vector per layer")
    out = []
    for layer, v in zip(net.layers, values):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != layer.values.shape:
            raise ValidationError("values shape mismatch")
        out.append(v)
    return out


def prediction_errors(net: PCNNetwork, values=None) -> list:
    """ε arrays per layer l ≥ 1: errors[l-1][j, i] = z_j - w_ji z_i."""
    vals = _values_or_current(net, values)
    errors = []
    for l in range(1, len(net.layers)):
        w = net.layers[l].weights
        errors.append(vals[l][:, None] - w * vals[l - 1][None, :])
    return errors


def baseline_energy(net: PCNNetwork, values=None) -> float:
    """Dense precision-weighted energy ½ Σ k_j ε_ij² (β-free)."""
    vals = _values_or_current(net, values)
    errors = prediction_errors(net, vals)
    total = 0.0
    for l, eps in enumerate(errors, start=1):
        k = net.layers[l].precisions
        total += 0.5 * float(np.sum(k[:, None] * eps * eps))
    return total


def collapsed_energy(net: PCNNetwork, values=None) -> float:
    """Marginalized free energy -Σ_j ln Σ_i (1/n_prev) exp(-½ β k_j ε_ij²).

    The uniform sender prior contributes the constant Σ_j ln n_prev relative
    to the unnormalized form; it is kept so F is the honest collapsed
    negative log-joint (up to the global Z, as everywhere).
    """
    vals = _values_or_current(net, values)
    errors = prediction_errors(net, vals)
    total = 0.0
    for l, eps in enumerate(errors, start=1):
        k = net.layers[l].precisions
        n_prev = net.layers[l - 1].size
        logits = -0.5 * net.beta * k[:, None] * eps * eps - np.log(n_prev)
        for j in range(eps.shape[0]):
            total -= log_sum_exp(logits[j])
    return total


def energy(net: PCNNetwork, values=None) -> float:
    """The network's objective in its configured mode."""
    if net.mode == "dense-baseline":
        return baseline_energy(net, values)
    return collapsed_energy(net, values)


def pcn_baseline_grad(net: PCNNetwork, values=None) -> list:
    """∂E/∂z per layer for the dense quadratic energy.

    For neuron n: + Σ_i k_n ε_in (as receiver) - Σ_j k_j ε_nj w_jn (as
    sender). The classical update integrates μ̇ = -grad, i.e. the familiar
    display with the opposite overall sign.
    """
    vals = _values_or_current(net, values)
    errors = prediction_errors(net, vals)
    grads = [np.zeros_like(v) for v in vals]
    for l, eps in enumerate(errors, start=1):
        k = net.layers[l].precisions
        w = net.layers[l].weights
        weighted = k[:, None] * eps
        grads[l] += np.sum(weighted, axis=1)
        grads[l - 1] -= np.sum(weighted * w, axis=0)
    return grads


def pcn_marginal_grad(net: PCNNetwork, values=None) -> list:
    """∂F/∂z per layer for the collapsed energy.

    Identical wiring to the baseline, but every receiving neuron softmax-
    normalizes its incoming errors: the weight on sender i is
    softmax_i(-½ β k_j ε_ij²), and the same weights modulate the sender-side
    (outgoing) term, because that is what differentiating F produces.
    """
    vals = _values_or_current(net, values)
    errors = prediction_errors(net, vals)
    grads = [np.zeros_like(v) for v in vals]
    for l, eps in enumerate(errors, start=1):
        k = net.layers[l].precisions
        w = net.layers[l].weights
        logits = -0.5 * net.beta * k[:, None] * eps * eps
        soft = np.empty_like(logits)
        for j in range(eps.shape[0]):
            soft[j] = np.exp(logits[j] - log_sum_exp(logits[j]))
        weighted = net.beta * k[:, None] * soft * eps
        grads[l] += np.sum(weighted, axis=1)
        grads[l - 1] -= np.sum(weighted * w, axis=0)
    return grads


def sender_weights(net: PCNNetwork, values=None) -> list:
    """The marginalized mode's normalization, made inspectable.

    weights[l-1][j, i] = softmax_i(-½ β k_j ε_ij²): how strongly receiver j
    in layer l listens to sender i. Rows sum to 1; large β concentrates each
    row on the best-predicting sender (winner-take-all).
    """
    vals = _values_or_current(net, values)
    errors = prediction_errors(net, vals)
    out = []
    for l, eps in enumerate(errors, start=1):
        k = net.layers[l].precisions
        logits = -0.5 * net.beta * k[:, None] * eps * eps
        soft = np.empty_like(logits)
        for j in range(eps.shape[0]):
            soft[j] = np.exp(logits[j] - log_sum_exp(logits[j]))
        out.append(soft)
    return out


def gradient(net: PCNNetwork, values=None) -> list:
    if net.mode == "dense-baseline":
        return pcn_baseline_grad(net, values)
    return pcn_marginal_grad(net, values)


def relax(net: PCNNetwork, observations, steps: int,
          step_size: float) -> np.ndarray:
    """Clamp layer 0 and run Euler gradient descent on the hidden layers.

    Returns the energy trace (length steps + 1, initial state included);
    the network's layer values hold the final state afterwards. Raises
    NumericError if the energy leaves the finite range (step too large).
    """
    if not step_size > 0:
        raise ValidationError("step_size must be positive")
    if steps < 0:
        raise ValidationError("steps must be >= 0")
    obs = np.asarray(observations, dtype=np.float64)
    if obs.shape != net.layers[0].values.shape:
        raise ValidationError(
            f"observations shape {obs.shape} != layer 0 shape "
            f"{net.layers[0].values.shape}")
    net.layers[0].values[...] = obs
    trace = np.empty(steps + 1)
    # overflow on a divergent trajectory is detected via the energy check
    with np.errstate(over="ignore", invalid="ignore"):
        trace[0] = energy(net)
        if not np.isfinite(trace[0]):
            raise NumericError("energy non-finite at step 0")
        for t in range(1, steps + 1):
            # a ValidationError here can only come from overflowed
            # potentials (collapsed mode): report it as divergence
            try:
                grads = gradient(net)
                for l in range(1, len(net.layers)):
                    net.layers[l].values -= step_size * grads[l]
                f = energy(net)
            except ValidationError as exc:
                raise NumericError(
                    f"energy non-finite at step {t}") from exc
            if not np.isfinite(f):
                raise NumericError(f"energy non-finite at step {t}")
            trace[t] = f
    return trace
