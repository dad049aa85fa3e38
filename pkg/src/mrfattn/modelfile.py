"""Structured-text model descriptions and CSV matrix I/O for the CLI.

CSV convention: comma-separated, '.' decimal, no header (callers may skip
one line), numbers emitted with 17 significant digits so doubles round-trip
exactly.

Model description files are flat key=value lines ('#' comments, blank lines
ignored); file-valued keys are paths resolved relative to the description
file. The grammar is documented in the README; the short version:

    kind=cross|self|slot|hopfield|custom
    beta=1.0              # or beta=auto for 1/sqrt(d)
    # cross:    keys= queries= [wq= wk= wv=]
    # self:     input= [wq= wk= wv=]
    # slot:     inputs= num_slots= seed=   (or slots=init.csv) [w= wv=]
    # hopfield: patterns= query= [wq= wk= wv=]
    # custom:   observed= [latent=] [w=] [wv=] [node_potentials=quadratic|none]
    #           edge_var=0>2,1>2            (repeated; source>target)
    #           edge_var=0>3@0.25,1>3@0.75  (optional prior weights; 0 masks)
"""

from __future__ import annotations

import os

import numpy as np

from .marginal import ValueSpec
from .mrf import (EdgeVariable, NodeSet, PairwiseMRF, PotentialSpec,
                  StructuralPrior, cross_attention_mrf, hopfield_mrf,
                  scaled_beta, self_attention_mrf, slot_mrf,
                  uniform_log_prior)
from .mechanisms import BlockSlotConfig, init_slots
from .numerics import ValidationError
from .pcn import PCNNetwork, build_network

FLOAT_FMT = "%.17g"


def format_float(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_matrix(path: str, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        for row in a:
            fh.write(",".join(format_float(x) for x in row))
            fh.write("\n")


def write_rows(path: str, rows) -> None:
    """Write pre-formatted (possibly ragged) rows of strings."""
    with open(path, "w", newline="") as fh:
        for row in rows:
            fh.write(",".join(row))
            fh.write("\n")


def read_matrix(path: str, header: bool = False) -> np.ndarray:
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if header:
        lines = lines[1:]
    for ln, line in enumerate(lines, start=1 + int(header)):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ValidationError(f"{path}:{ln}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValidationError(f"{path}: ragged rows")
    return np.asarray(rows, dtype=np.float64)


def read_vector(path: str, header: bool = False) -> np.ndarray:
    a = read_matrix(path, header)
    if a.shape[0] == 1:
        return a[0]
    if a.shape[1] == 1:
        return a[:, 0]
    raise ValidationError(f"{path}: expected a single row or column")


def parse_keyvalues(path: str):
    """key=value lines -> (dict of scalars, list of repeated edge_var values)."""
    scalars = {}
    edge_vars = []
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{ln}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip().lower()
            value = value.strip()
            if key == "edge_var":
                edge_vars.append(value)
            elif key in scalars:
                raise ValidationError(f"{path}:{ln}: duplicate key {key!r}")
            else:
                scalars[key] = value
    return scalars, edge_vars


def _resolve(base_dir: str, ref: str) -> str:
    return ref if os.path.isabs(ref) else os.path.join(base_dir, ref)


def _matrix_or_identity(spec, key, base_dir, d, header=False):
    if key in spec:
        return read_matrix(_resolve(base_dir, spec[key]), header)
    return np.eye(d)


def _beta(spec, d: int) -> float:
    raw = spec.get("beta", "1.0")
    if raw.lower() == "auto":
        return scaled_beta(d)
    return float(raw)


def _parse_edge_var(text: str) -> EdgeVariable:
    cands = []
    weights = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "@" in tok:
            pair, wtext = tok.split("@", 1)
            weight = float(wtext)
        else:
            pair, weight = tok, None
        if ">" not in pair:
            raise ValidationError(f"bad candidate {tok!r}: expected source>target")
        s_text, t_text = pair.split(">", 1)
        cands.append((int(s_text), int(t_text)))
        weights.append(weight)
    if not cands:
        raise ValidationError("edge_var has no candidates")
    k = len(cands)
    if all(w is None for w in weights):
        log_prior = uniform_log_prior(k)
    elif any(w is None for w in weights):
        raise ValidationError("either weight every candidate or none")
    else:
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0):
            raise ValidationError("prior weights must be >= 0")
        total = w.sum()
        if total <= 0:
            raise ValidationError("prior weights must not all be zero")
        if abs(total - 1.0) > 1e-9:
            raise ValidationError("prior weights must sum to 1 (within 1e-9)")
        with np.errstate(divide="ignore"):
            log_prior = np.where(w > 0, np.log(w / total), -np.inf)
    return EdgeVariable(candidates=np.asarray(cands, dtype=np.intp),
                        log_prior=log_prior)


def load_instance(path: str, header: bool = False):
    """Model description -> (PairwiseMRF, ValueSpec)."""
    spec, edge_var_texts = parse_keyvalues(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    kind = spec.get("kind")
    if kind is None:
        raise ValidationError(f"{path}: missing kind=")
    kind = kind.lower()

    def need(key):
        if key not in spec:
            raise ValidationError(f"{path}: kind={kind} requires {key}=")
        return spec[key]

    if kind == "cross":
        keys = read_matrix(_resolve(base_dir, need("keys")), header)
        queries = read_matrix(_resolve(base_dir, need("queries")), header)
        d = keys.shape[1]
        wq = _matrix_or_identity(spec, "wq", base_dir, d, header)
        wk = _matrix_or_identity(spec, "wk", base_dir, d, header)
        wv = _matrix_or_identity(spec, "wv", base_dir, d, header)
        mrf = cross_attention_mrf(keys, queries, wq.T @ wk, _beta(spec, d))
        return mrf, ValueSpec(w_v=wv)

    if kind == "self":
        x = read_matrix(_resolve(base_dir, need("input")), header)
        d = x.shape[1]
        wq = _matrix_or_identity(spec, "wq", base_dir, d, header)
        wk = _matrix_or_identity(spec, "wk", base_dir, d, header)
        wv = _matrix_or_identity(spec, "wv", base_dir, d, header)
        mrf = self_attention_mrf(x, wq.T @ wk, _beta(spec, d))
        return mrf, ValueSpec(w_v=wv)

    if kind == "slot":
        inputs = read_matrix(_resolve(base_dir, need("inputs")), header)
        d = inputs.shape[1]
        if "slots" in spec:
            slots = read_matrix(_resolve(base_dir, spec["slots"]), header)
        else:
            slots = init_slots(inputs, int(need("num_slots")),
                               int(spec.get("seed", "0")))
        w = _matrix_or_identity(spec, "w", base_dir, d, header)
        wv = _matrix_or_identity(spec, "wv", base_dir, d, header)
        mrf = slot_mrf(inputs, slots, w, _beta(spec, d))
        return mrf, ValueSpec(w_v=wv)

    if kind == "hopfield":
        patterns = read_matrix(_resolve(base_dir, need("patterns")), header)
        query = read_vector(_resolve(base_dir, need("query")), header)
        d = patterns.shape[1]
        wq = _matrix_or_identity(spec, "wq", base_dir, d, header)
        wk = _matrix_or_identity(spec, "wk", base_dir, d, header)
        wv = _matrix_or_identity(spec, "wv", base_dir, d, header)
        mrf = hopfield_mrf(patterns, query[None, :], wq.T @ wk, _beta(spec, d))
        return mrf, ValueSpec(w_v=wv)

    if kind == "custom":
        observed = read_matrix(_resolve(base_dir, need("observed")), header)
        d = observed.shape[1]
        if "latent" in spec:
            latent = read_matrix(_resolve(base_dir, spec["latent"]), header)
        else:
            latent = np.zeros((0, d))
        w = _matrix_or_identity(spec, "w", base_dir, d, header)
        wv = _matrix_or_identity(spec, "wv", base_dir, d, header)
        node_kind = spec.get("node_potentials", "quadratic").lower()
        if not edge_var_texts:
            raise ValidationError(f"{path}: kind=custom needs edge_var= lines")
        evs = [_parse_edge_var(text) for text in edge_var_texts]
        nodes = NodeSet(observed=observed, latent=latent)
        mrf = PairwiseMRF(nodes=nodes, prior=StructuralPrior(evs),
                          potentials=PotentialSpec(w=w, node_kind=node_kind),
                          beta=_beta(spec, d))
        return mrf, ValueSpec(w_v=wv)

    raise ValidationError(f"{path}: unknown kind {kind!r}")


def load_pcn(path: str, header: bool = False) -> PCNNetwork:
    """Network description: layers=4,3,2 / mode= / beta= / weightsL= /
    precisionsL= (CSV path or scalar) / initL= (hidden-layer start values)."""
    spec, _ = parse_keyvalues(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    if "layers" not in spec:
        raise ValidationError(f"{path}: missing layers=")
    sizes = [int(tok) for tok in spec["layers"].split(",") if tok.strip()]
    if len(sizes) < 2:
        raise ValidationError(f"{path}: need at least two layers")
    weights = []
    for l in range(1, len(sizes)):
        key = f"weights{l}"
        if key not in spec:
            raise ValidationError(f"{path}: missing {key}=")
        weights.append(read_matrix(_resolve(base_dir, spec[key]), header))
    precisions = []
    for l, size in enumerate(sizes):
        key = f"precisions{l}"
        if key not in spec:
            precisions.append(np.ones(size))
        else:
            raw = spec[key]
            try:
                precisions.append(np.full(size, float(raw)))
            except ValueError:
                precisions.append(read_vector(_resolve(base_dir, raw), header))
    mode = spec.get("mode", "marginalized")
    net = build_network(sizes, weights, precisions, mode=mode,
                        beta=float(spec.get("beta", "1.0")))
    for l in range(1, len(sizes)):
        key = f"init{l}"
        if key in spec:
            v = read_vector(_resolve(base_dir, spec[key]), header)
            if v.shape[0] != sizes[l]:
                raise ValidationError(f"{path}: {key} has wrong length")
            net.layers[l].values[...] = v
    return net


def load_blockslot(path: str, header: bool = False):
    """Block-slot description -> (BlockSlotConfig, tol, max_iter)."""
    spec, _ = parse_keyvalues(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    if "inputs" not in spec:
        raise ValidationError(f"{path}: missing inputs=")
    inputs = read_matrix(_resolve(base_dir, spec["inputs"]), header)
    if "num_slots" not in spec:
        raise ValidationError(f"{path}: missing num_slots=")
    if "blocks" not in spec:
        raise ValidationError(f"{path}: missing blocks=")
    block_dims = [int(tok) for tok in spec["blocks"].split(",") if tok.strip()]
    memories = []
    for b, d_b in enumerate(block_dims, start=1):
        key = f"memories{b}"
        if key in spec:
            bank = read_matrix(_resolve(base_dir, spec[key]), header)
        else:
            bank = np.zeros((0, d_b))
        if bank.shape[1] != d_b:
            raise ValidationError(
                f"{path}: {key} width {bank.shape[1]} != block dim {d_b}")
        memories.append(bank)
    w = (read_matrix(_resolve(base_dir, spec["w"]), header)
         if "w" in spec else None)
    init = (read_matrix(_resolve(base_dir, spec["init"]), header)
            if "init" in spec else None)
    cfg = BlockSlotConfig(
        inputs=inputs, num_slots=int(spec["num_slots"]), memories=memories,
        w=w, beta=float(spec.get("beta", "1.0")),
        beta_memory=(float(spec["beta_memory"])
                     if "beta_memory" in spec else None),
        init=init,
        seed=int(spec["seed"]) if "seed" in spec else None)
    tol = float(spec.get("tol", "1e-8"))
    max_iter = int(spec.get("max_iter", "100"))
    return cfg, tol, max_iter
