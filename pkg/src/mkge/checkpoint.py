"""Binary checkpoint files: little-endian, magic "MKGE", versioned header,
then the parameter tables (and optionally Adagrad state) as float64 in index
order. Round trips are bit-exact."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import model, train
from .errors import BadMagic, DigestMismatch, MissingFile, VersionUnsupported

MAGIC = b"MKGE"
FORMAT_VERSION = 1

_ABLATION_CODES = {name: i for i, name in enumerate(model.ABLATION_MODES)}
_ABLATION_NAMES = {i: name for name, i in _ABLATION_CODES.items()}


def config_digest(variant_name, k, ablation, n_entities, n_relations):
    """Digest binding a checkpoint to its model shape and dataset sizes."""
    text = f"{variant_name},{k},{ablation},{n_entities},{n_relations}"
    return hashlib.sha256(text.encode()).digest()


@dataclass
class Checkpoint:
    store: model.ParameterStore
    opt_state: train.OptimizerState | None
    epoch: int
    digest: bytes

    def verify_digest(self, expected):
        if self.digest != expected:
            raise DigestMismatch("checkpoint does not match the current config/dataset")


def save_checkpoint(path, store, opt_state=None, epoch=0, digest=b"\x00" * 32):
    variant = store.variant
    name = variant.name.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(name)))
        fh.write(name)
        fh.write(struct.pack("<IIQQ", store.k, _ABLATION_CODES[store.ablation],
                             store.n_entities, store.n_relations))
        fh.write(digest)
        fh.write(struct.pack("<Q", epoch))
        fh.write(struct.pack("<B", 1 if opt_state is not None else 0))
        fh.write(np.ascontiguousarray(store.entity, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(store.relation, dtype="<f8").tobytes())
        if opt_state is not None:
            fh.write(struct.pack("<d", opt_state.lr))
            fh.write(np.ascontiguousarray(opt_state.acc_entity, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(opt_state.acc_relation, dtype="<f8").tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise BadMagic(f"truncated checkpoint while reading {what}")
    return buf


def load_checkpoint(path):
    try:
        fh = open(path, "rb")
    except FileNotFoundError as exc:
        raise MissingFile(str(exc)) from exc
    with fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise BadMagic("not a MKGE checkpoint")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != FORMAT_VERSION:
            raise VersionUnsupported(f"checkpoint format version {version}")
        (name_len,) = struct.unpack("<I", _read_exact(fh, 4, "variant"))
        name = _read_exact(fh, name_len, "variant").decode()
        if name not in model.VARIANTS:
            raise BadMagic(f"unknown model variant {name!r}")
        k, ablation_code, n_ent, n_rel = struct.unpack("<IIQQ", _read_exact(fh, 24, "shape"))
        digest = _read_exact(fh, 32, "digest")
        (epoch,) = struct.unpack("<Q", _read_exact(fh, 8, "epoch"))
        (has_opt,) = struct.unpack("<B", _read_exact(fh, 1, "flags"))
        variant = model.VARIANTS[name]
        ew, rw = variant.entity_row_width(k), variant.relation_row_width(k)

        def read_table(rows, cols, what):
            buf = _read_exact(fh, rows * cols * 8, what)
            return np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(rows, cols)

        entity = read_table(n_ent, ew, "entity table")
        relation = read_table(n_rel, rw, "relation table")
        store = model.ParameterStore(variant, k, entity, relation,
                                     _ABLATION_NAMES[ablation_code])
        opt_state = None
        if has_opt:
            (lr,) = struct.unpack("<d", _read_exact(fh, 8, "lr"))
            opt_state = train.OptimizerState(
                acc_entity=read_table(n_ent, ew, "entity accumulators"),
                acc_relation=read_table(n_rel, rw, "relation accumulators"),
                lr=lr,
            )
        trailing = fh.read(1)
        if trailing:
            raise BadMagic("trailing bytes after checkpoint payload")
    return Checkpoint(store, opt_state, epoch, digest)
