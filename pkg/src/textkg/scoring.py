"""Relational score functions over (head, relation, tail) embeddings.

Vectors for the complex and half-split models store the two parts in
contiguous halves: entries [0, d/2) are the real / role-1 part and
[d/2, d) the imaginary / role-2 part. This layout is also the checkpoint
serialization convention.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

TRANSE = "transe"
DISTMULT = "distmult"
COMPLEX = "complex"
SIMPLE = "simple"
MODEL_KINDS = (TRANSE, DISTMULT, COMPLEX, SIMPLE)


@dataclass(frozen=True)
class ScoringModel:
    kind: str
    dim: int
    p_norm: int = 2

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ContractError(f"unknown scoring model {self.kind!r}")
        if self.dim <= 0:
            raise ContractError("dimension must be positive")
        if self.p_norm not in (1, 2):
            raise ContractError("p_norm must be 1 or 2")
        if self.kind in (COMPLEX, SIMPLE) and self.dim % 2 != 0:
            raise ContractError(f"{self.kind} requires an even dimension")


def _halves(x):
    d2 = x.shape[-1] // 2
    return x[..., :d2], x[..., d2:]


def _as_batch(model, head, rel, tail):
    arrays = []
    for name, x in (("head", head), ("rel", rel), ("tail", tail)):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != model.dim:
            raise ContractError(
                f"{name} must have dimension {model.dim}, got shape {x.shape}"
            )
        arrays.append(x)
    return np.broadcast_arrays(*arrays)


def score_batch(model: ScoringModel, head, rel, tail) -> np.ndarray:
    """Score rows of (head, rel, tail); 1-D inputs broadcast against 2-D ones."""
    h, r, t = _as_batch(model, head, rel, tail)
    if model.kind == TRANSE:
        res = h + r - t
        if model.p_norm == 1:
            return -np.abs(res).sum(axis=-1)
        return -np.sqrt((res * res).sum(axis=-1))
    if model.kind == DISTMULT:
        return (h * r * t).sum(axis=-1)
    if model.kind == COMPLEX:
        hr, hi = _halves(h)
        rr, ri = _halves(r)
        tr, ti = _halves(t)
        return (hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr).sum(axis=-1)
    h1, h2 = _halves(h)
    r1, r2 = _halves(r)
    t1, t2 = _halves(t)
    return 0.5 * ((h1 * r1 * t1).sum(axis=-1) + (h2 * r2 * t2).sum(axis=-1))


def score(model: ScoringModel, head, rel, tail) -> float:
    """Scalar score of a single triple."""
    for name, x in (("head", head), ("rel", rel), ("tail", tail)):
        x = np.asarray(x)
        if x.shape != (model.dim,):
            raise ContractError(f"{name} must be a vector of length {model.dim}")
        if not np.isfinite(x).all():
            raise ContractError(f"{name} contains non-finite values")
    return float(score_batch(model, head, rel, tail)[0])


def score_gradient_batch(model: ScoringModel, head, rel, tail):
    """Row-wise (ds/dhead, ds/drel, ds/dtail) for batched inputs."""
    h, r, t = _as_batch(model, head, rel, tail)
    if model.kind == TRANSE:
        res = h + r - t
        if model.p_norm == 1:
            g = np.sign(res)
        else:
            norm = np.sqrt((res * res).sum(axis=-1, keepdims=True))
            zero = norm[:, 0] == 0.0
            if zero.any():
                warnings.warn(
                    "TransE L2 gradient at zero residual is degenerate; "
                    "returning a zero subgradient"
                )
            safe = np.where(norm == 0.0, 1.0, norm)
            g = np.where(norm == 0.0, 0.0, res / safe)
        return -g, -g, g
    if model.kind == DISTMULT:
        return r * t, h * t, h * r
    if model.kind == COMPLEX:
        hr, hi = _halves(h)
        rr, ri = _halves(r)
        tr, ti = _halves(t)
        gh = np.concatenate([rr * tr + ri * ti, rr * ti - ri * tr], axis=-1)
        gr = np.concatenate([hr * tr + hi * ti, hr * ti - hi * tr], axis=-1)
        gt = np.concatenate([hr * rr - hi * ri, hi * rr + hr * ri], axis=-1)
        return gh, gr, gt
    h1, h2 = _halves(h)
    r1, r2 = _halves(r)
    t1, t2 = _halves(t)
    gh = 0.5 * np.concatenate([r1 * t1, r2 * t2], axis=-1)
    gr = 0.5 * np.concatenate([h1 * t1, h2 * t2], axis=-1)
    gt = 0.5 * np.concatenate([h1 * r1, h2 * r2], axis=-1)
    return gh, gr, gt


def score_gradient(model: ScoringModel, head, rel, tail):
    """Analytic (ds/dhead, ds/drel, ds/dtail) for a single triple."""
    gh, gr, gt = score_gradient_batch(model, head, rel, tail)
    return gh[0], gr[0], gt[0]
