"""Model variants, parameter storage, and the combine/transform/score pipeline.

Entity row layout: [scalar params (k * scalar_width), vector free params
(k * vector_param_width)]. Relation row layout: [scaling params
(k * scaling_param_width), rotation params (k * rotation_param_width)].
Unit group elements are stored by their free parameters (a phase angle for
U(1), a 3-vector rotation parameter for unit quaternions) and materialized on
use, so unitarity holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .errors import LengthMismatch, ShapeMismatch

ABLATION_MODES = ("scalar", "vector", "both")

GROUP_FIXED = "fixed"
GROUP_GL1 = "gl1"
GROUP_U1 = "u1"
GROUP_UQ = "unit_quaternion"


@dataclass(frozen=True)
class ModelVariant:
    name: str
    scalar_group: str  # ring housing entity scalars: 'real' | 'quaternion'
    vector_group: str  # space housing entity vectors: 'real' | 'complex' | 'quaternion'
    scaling_group: str  # GROUP_GL1 | GROUP_UQ | GROUP_FIXED
    rotation_group: str  # GROUP_U1 | GROUP_UQ | GROUP_FIXED
    score_kind: str  # 'cosine' | 'distance'

    @property
    def scalar_width(self):
        return 4 if self.scalar_group == "quaternion" else 1

    @property
    def vector_width(self):
        return {"real": 1, "complex": 2, "quaternion": 4}[self.vector_group]

    @property
    def vector_param_width(self):
        # free parameters per dimension of the unit vector part
        return {"real": 0, "complex": 1, "quaternion": 3}[self.vector_group]

    @property
    def scaling_param_width(self):
        return {GROUP_FIXED: 0, GROUP_GL1: 1, GROUP_UQ: 3}[self.scaling_group]

    @property
    def rotation_param_width(self):
        return {GROUP_FIXED: 0, GROUP_U1: 1, GROUP_UQ: 3}[self.rotation_group]

    def entity_row_width(self, k):
        return k * (self.scalar_width + self.vector_param_width)

    def relation_row_width(self, k):
        return k * (self.scaling_param_width + self.rotation_param_width)


VARIANTS = {
    "distmult": ModelVariant("distmult", "real", "real", GROUP_GL1, GROUP_FIXED, "cosine"),
    "rotate": ModelVariant("rotate", "real", "complex", GROUP_FIXED, GROUP_U1, "distance"),
    "module_rc": ModelVariant("module_rc", "real", "complex", GROUP_GL1, GROUP_U1, "cosine"),
    "module_rh": ModelVariant("module_rh", "real", "quaternion", GROUP_GL1, GROUP_UQ, "cosine"),
    "module_hh": ModelVariant(
        "module_hh", "quaternion", "quaternion", GROUP_UQ, GROUP_UQ, "cosine"
    ),
}


@dataclass
class ParameterStore:
    variant: ModelVariant
    k: int
    entity: np.ndarray  # (n_entities, entity_row_width)
    relation: np.ndarray  # (n_relations, relation_row_width)
    ablation: str = "both"

    @property
    def n_entities(self):
        return self.entity.shape[0]

    @property
    def n_relations(self):
        return self.relation.shape[0]

    def entity_parts(self):
        """Views (E, k, scalar_width) and (E, k, vector_param_width)."""
        v = self.variant
        split = self.k * v.scalar_width
        es = self.entity[:, :split].reshape(self.n_entities, self.k, v.scalar_width)
        ev = self.entity[:, split:].reshape(self.n_entities, self.k, v.vector_param_width)
        return es, ev

    def relation_parts(self):
        v = self.variant
        split = self.k * v.scaling_param_width
        rs = self.relation[:, :split].reshape(self.n_relations, self.k, v.scaling_param_width)
        rv = self.relation[:, split:].reshape(self.n_relations, self.k, v.rotation_param_width)
        return rs, rv

    def free_masks(self):
        """Boolean masks over entity/relation row columns; frozen ablation
        blocks are False."""
        v = self.variant
        ent = np.ones(v.entity_row_width(self.k), dtype=bool)
        rel = np.ones(v.relation_row_width(self.k), dtype=bool)
        es_w = self.k * v.scalar_width
        rs_w = self.k * v.scaling_param_width
        if self.ablation == "scalar":
            ent[es_w:] = False
            rel[rs_w:] = False
        elif self.ablation == "vector":
            ent[:es_w] = False
            rel[:rs_w] = False
        return ent, rel


def _identity_scalar(variant):
    if variant.scalar_group == "quaternion":
        return np.array([1.0, 0.0, 0.0, 0.0])
    return np.array([1.0])


def init_model(variant, k, n_entities, n_relations, seed, ablation="both"):
    """Seed-deterministic initialization.

    Real scalar coordinates are drawn uniform(-0.5/sqrt(k), 0.5/sqrt(k));
    free parameters of unit group elements uniform(-pi, pi). Frozen ablation
    blocks are set to the group identity and consume no random draws, so e.g.
    a scalar-only module_rc run shares its scalar draws with a distmult run
    of the same seed.
    """
    if isinstance(variant, str):
        variant = VARIANTS[variant]
    if k < 1:
        raise ValueError("k must be >= 1")
    if ablation not in ABLATION_MODES:
        raise ValueError(f"unknown ablation mode {ablation!r}")
    rng = np.random.default_rng(seed)
    bound = 0.5 / np.sqrt(k)

    sw, vpw = variant.scalar_width, variant.vector_param_width
    spw, rpw = variant.scaling_param_width, variant.rotation_param_width
    scalar_free = ablation != "vector"
    vector_free = ablation != "scalar"

    entity = np.empty((n_entities, variant.entity_row_width(k)), dtype=np.float64)
    if scalar_free:
        entity[:, : k * sw] = rng.uniform(-bound, bound, size=(n_entities, k * sw))
    else:
        entity[:, : k * sw] = np.tile(_identity_scalar(variant), k)
    if vpw:
        if vector_free:
            entity[:, k * sw :] = rng.uniform(-np.pi, np.pi, size=(n_entities, k * vpw))
        else:
            entity[:, k * sw :] = 0.0

    relation = np.empty((n_relations, variant.relation_row_width(k)), dtype=np.float64)
    if spw:
        if scalar_free:
            if variant.scaling_group == GROUP_GL1:
                relation[:, : k * spw] = rng.uniform(-bound, bound, size=(n_relations, k * spw))
            else:
                relation[:, : k * spw] = rng.uniform(
                    -np.pi, np.pi, size=(n_relations, k * spw)
                )
        else:
            # identity: GL(1) -> 1, unit quaternion -> zero rotation vector
            relation[:, : k * spw] = 1.0 if variant.scaling_group == GROUP_GL1 else 0.0
    if rpw:
        if vector_free:
            relation[:, k * spw :] = rng.uniform(-np.pi, np.pi, size=(n_relations, k * rpw))
        else:
            relation[:, k * spw :] = 0.0

    return ParameterStore(variant, k, entity, relation, ablation)


def materialize_vector(ev, variant):
    """Free vector params (..., k, vpw) -> unit elements (..., k, vector_width)."""
    if variant.vector_group == "real":
        return np.ones(ev.shape[:-1] + (1,), dtype=np.float64)
    if variant.vector_group == "complex":
        return algebra.angle_to_complex(ev[..., 0])
    return algebra.exp_map(ev)


def materialize_scaling(rs, variant):
    """Scaling params -> group elements, or None for a fixed scaling group."""
    if variant.scaling_group == GROUP_FIXED:
        return None
    if variant.scaling_group == GROUP_GL1:
        return rs
    return algebra.exp_map(rs)


def materialize_rotation(rv, variant):
    if variant.rotation_group == GROUP_FIXED:
        return None
    if variant.rotation_group == GROUP_U1:
        return algebra.angle_to_complex(rv[..., 0])
    return algebra.exp_map(rv)


def combine(scalar, vector, variant):
    """Element-wise scalar multiplication s_i * v_i (Hamilton product when the
    scalar ring is the quaternions)."""
    scalar = np.asarray(scalar, dtype=np.float64)
    vector = np.asarray(vector, dtype=np.float64)
    if scalar.shape[-2] != vector.shape[-2]:
        raise LengthMismatch("scalar and vector tuples differ in length")
    if variant.scalar_width == 1:
        return scalar * vector
    return algebra.quat_mul(scalar, vector)


def combined_embeddings(store, ids=None):
    """Combined tuples s_e * v_e for all (or selected) entities: (N, k, w)."""
    es, ev = store.entity_parts()
    if ids is not None:
        es, ev = es[ids], ev[ids]
    return combine(es, materialize_vector(ev, store.variant), store.variant)


def transform_head(s_h, v_h, g_s, g_v, variant):
    """Scaled/rotated head parts combined: T_s(s_h) * T_v(v_h)."""
    if g_s is not None:
        s_h = s_h * g_s if variant.scaling_group == GROUP_GL1 else algebra.quat_mul(s_h, g_s)
    if g_v is not None:
        v_h = algebra.elem_mul(v_h, g_v)
    return combine(s_h, v_h, variant)


def transformed_heads(store, h_ids, r_ids):
    """Transformed head embeddings for id arrays: (B, k, vector_width)."""
    variant = store.variant
    es, ev = store.entity_parts()
    rs, rv = store.relation_parts()
    s_h = es[h_ids]
    v_h = materialize_vector(ev[h_ids], variant)
    g_s = materialize_scaling(rs[r_ids], variant)
    g_v = materialize_rotation(rv[r_ids], variant)
    return transform_head(s_h, v_h, g_s, g_v, variant)


def _pair_scores(h_prime, tails, kind):
    """Score transformed heads (B, k, w) against tails (B, k, w)."""
    if kind == "cosine":
        return np.sum(h_prime * tails, axis=(-2, -1))
    diff = h_prime - tails
    return -np.sum(np.sqrt(np.sum(diff * diff, axis=-1)), axis=-1)


def score(store, h_id, r_id, t_id):
    """Score of one triple; higher is more plausible for both score kinds."""
    for idx, bound in ((h_id, store.n_entities), (r_id, store.n_relations), (t_id, store.n_entities)):
        if not 0 <= idx < bound:
            raise IndexError(f"id {idx} out of range")
    h_prime = transformed_heads(store, np.array([h_id]), np.array([r_id]))
    t = combined_embeddings(store, np.array([t_id]))
    return float(_pair_scores(h_prime, t, store.variant.score_kind)[0])


def score_all_tails(store, h_ids, r_ids, tails_combined=None):
    """Scores of (h, r) against every entity: (B, n_entities).

    The transformed head is computed once per (h, r) row and reused across
    candidates; pass a precomputed combined-entity table to amortize it.
    """
    h_ids = np.atleast_1d(np.asarray(h_ids, dtype=np.int64))
    r_ids = np.atleast_1d(np.asarray(r_ids, dtype=np.int64))
    if h_ids.shape != r_ids.shape:
        raise ShapeMismatch("head and relation id arrays differ in shape")
    c_all = tails_combined if tails_combined is not None else combined_embeddings(store)
    h_prime = transformed_heads(store, h_ids, r_ids)
    b, k, w = h_prime.shape
    if store.variant.score_kind == "cosine":
        return h_prime.reshape(b, k * w) @ c_all.reshape(-1, k * w).T
    # distance kind: chunk candidates to bound the (B, E, k, w) intermediate
    n = c_all.shape[0]
    out = np.empty((b, n), dtype=np.float64)
    chunk = max(1, int(4e6 / max(1, b * k * w)))
    for start in range(0, n, chunk):
        d = h_prime[:, None, :, :] - c_all[None, start : start + chunk, :, :]
        out[:, start : start + chunk] = -np.sum(np.sqrt(np.sum(d * d, axis=-1)), axis=-1)
    return out
