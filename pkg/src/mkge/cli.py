"""Experiment harness: train / eval / ablate / sweep subcommands.

Configuration is resolved as defaults < preset < config file < command-line
flags; the resolved key=value form is written next to the outputs and
reparses to an equal config. All outputs are CSV with a header row.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, fields, replace

from .errors import MkgeError, ParseError

PRESETS = {
    # best published settings per benchmark for the quaternion-module model
    "fb15k237": dict(model="module_hh", epochs=200, batch_size=300, k=128, p=3,
                     lam=0.045, lambda1=2.0, lambda2=0.5, lambda3=2.0, lr=0.1,
                     schedule="constant"),
    "wn18rr": dict(model="module_hh", epochs=200, batch_size=500, k=128, p=3,
                   lam=0.08, lambda1=2.0, lambda2=0.5, lambda3=2.0, lr=0.1,
                   schedule="exp"),
    "yago3-10": dict(model="module_hh", epochs=200, batch_size=1000, k=128, p=3,
                     lam=0.005, lambda1=2.0, lambda2=0.5, lambda3=2.0, lr=0.1,
                     schedule="constant"),
}

MODEL_ALIASES = {"rc": "module_rc", "rh": "module_rh", "hh": "module_hh",
                 "distmult": "distmult", "rotate": "rotate"}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = ""
    model: str = "module_hh"
    k: int = 32
    p: int = 3
    lam: float = 0.0
    lambda1: float = 2.0
    lambda2: float = 0.5
    lambda3: float = 2.0
    epochs: int = 100
    batch_size: int = 100
    lr: float = 0.1
    schedule: str = "constant"
    seed: int = 0
    ablation: str = "both"
    eval_interval: int = 5
    patience: int = 10
    out: str = "runs/run"

    def validate(self):
        from . import model as model_mod

        if not self.dataset:
            raise ValueError("--dataset is required")
        if self.model not in model_mod.VARIANTS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.p not in (2, 3):
            raise ValueError("p must be 2 or 3")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch size >= 1")
        if min(self.lam, self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError("regularization rates must be nonnegative")
        if self.schedule not in ("constant", "exp"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.ablation not in model_mod.ABLATION_MODES:
            raise ValueError(f"unknown ablation mode {self.ablation!r}")
        if self.eval_interval < 1 or self.patience < 1:
            raise ValueError("eval interval and patience must be >= 1")
        return self

    def to_text(self):
        lines = []
        for f in fields(self):
            lines.append(f"{f.name}={getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


def parse_config_text(text, base=None):
    cfg = base or ExperimentConfig()
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    casts = {"int": int, "float": float, "str": str}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"config line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in types:
            raise ParseError(f"config line {lineno}: unknown key {key!r}")
        updates[key] = casts[types[key]](value)
    return replace(cfg, **updates)


def load_config_file(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base=base)


def resolve_config(args):
    cfg = ExperimentConfig()
    if getattr(args, "preset", None):
        cfg = replace(cfg, **PRESETS[args.preset])
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, base=cfg)
    overrides = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if "model" in overrides:
        overrides["model"] = MODEL_ALIASES.get(overrides["model"], overrides["model"])
    return replace(cfg, **overrides).validate()


def _loss_config(cfg):
    from .train import LossConfig

    return LossConfig(p=cfg.p, lam=cfg.lam, lambda1=cfg.lambda1,
                      lambda2=cfg.lambda2, lambda3=cfg.lambda3)


def _fit_config(cfg):
    from .train import FitConfig

    return FitConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr,
                     schedule=cfg.schedule, seed=cfg.seed,
                     eval_interval=cfg.eval_interval, patience=cfg.patience,
                     loss=_loss_config(cfg))


def _prepare(cfg):
    from . import data

    vocab, triples = data.build_dataset(cfg.dataset)
    index = data.build_filter_index(triples, vocab)
    train_aug = data.augment_reciprocal(triples.train, vocab)
    return vocab, triples, index, train_aug


def _digest(cfg, vocab):
    from .checkpoint import config_digest

    return config_digest(cfg.model, cfg.k, cfg.ablation,
                         vocab.n_entities, vocab.n_relations)


def _write_outputs(out_dir, cfg, vocab, triples, index, store, report=None):
    from . import ranking

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.cfg"), "w", encoding="utf-8") as fh:
        fh.write(cfg.to_text())
    if report is not None:
        report.to_csv(os.path.join(out_dir, "train_report.csv"))
    metrics = ranking.evaluate(triples.test, store, index)
    metrics.to_csv(os.path.join(out_dir, "metrics.csv"))
    ranking.per_relation_csv(metrics, os.path.join(out_dir, "per_relation.csv"), vocab)
    return metrics


def run_training(cfg, out_dir=None, resume=None):
    """Shared train pipeline; returns (store, report, metrics)."""
    from . import checkpoint as ckpt
    from . import model, train

    out_dir = out_dir or cfg.out
    vocab, triples, index, train_aug = _prepare(cfg)
    digest = _digest(cfg, vocab)
    start_epoch, opt_state = 0, None
    if resume:
        loaded = ckpt.load_checkpoint(resume)
        loaded.verify_digest(digest)
        store, opt_state, start_epoch = loaded.store, loaded.opt_state, loaded.epoch
    else:
        store = model.init_model(cfg.model, cfg.k, vocab.n_entities, vocab.n_relations,
                                 seed=cfg.seed, ablation=cfg.ablation)
    report, opt_state = train.fit(store, train_aug, _fit_config(cfg),
                                  valid_triples=triples.valid, filter_index=index,
                                  opt_state=opt_state, start_epoch=start_epoch)
    os.makedirs(out_dir, exist_ok=True)
    final_epoch = report.epochs[-1].epoch + 1 if report.epochs else start_epoch
    ckpt.save_checkpoint(os.path.join(out_dir, "checkpoint.mkge"), store,
                         opt_state=opt_state, epoch=final_epoch, digest=digest)
    metrics = _write_outputs(out_dir, cfg, vocab, triples, index, store, report)
    return store, report, metrics


def cmd_train(args):
    cfg = resolve_config(args)
    _, _, metrics = run_training(cfg, resume=getattr(args, "resume", None))
    print(metrics.format_table())
    return 0


def cmd_eval(args):
    from . import checkpoint as ckpt
    from . import ranking

    cfg = resolve_config(args)
    vocab, triples, index, _ = _prepare(cfg)
    loaded = ckpt.load_checkpoint(args.checkpoint)
    store = loaded.store
    loaded.verify_digest(_digest(replace(cfg, model=store.variant.name, k=store.k,
                                         ablation=store.ablation), vocab))
    split = triples.splits()[args.split]
    metrics = ranking.evaluate(split, store, index)
    os.makedirs(cfg.out, exist_ok=True)
    metrics.to_csv(os.path.join(cfg.out, "metrics.csv"))
    ranking.per_relation_csv(metrics, os.path.join(cfg.out, "per_relation.csv"), vocab)
    print(metrics.format_table())
    return 0


def cmd_ablate(args):
    cfg = resolve_config(args)
    rows = []
    for mode in ("scalar", "vector", "both"):
        mode_cfg = replace(cfg, ablation=mode)
        out_dir = os.path.join(cfg.out, mode)
        _, _, metrics = run_training(mode_cfg, out_dir=out_dir)
        rows.append((mode, metrics))
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "ablation.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mode,mrr,hits1,hits3,hits10\n")
        for mode, m in rows:
            fh.write(f"{mode},{m.mrr:.6f},{m.hits1:.6f},{m.hits3:.6f},{m.hits10:.6f}\n")
    for mode, m in rows:
        print(f"{mode:<7} mrr={m.mrr:.4f} h@1={m.hits1:.4f}")
    return 0


def cmd_sweep(args):
    cfg = resolve_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "sweep.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,mrr,hits1,hits3,hits10,seconds\n")
        for k in args.k_list:
            t0 = time.perf_counter()
            k_cfg = replace(cfg, k=k)
            _, _, metrics = run_training(k_cfg, out_dir=os.path.join(cfg.out, f"k{k}"))
            seconds = time.perf_counter() - t0
            fh.write(f"{k},{metrics.mrr:.6f},{metrics.hits1:.6f},{metrics.hits3:.6f},"
                     f"{metrics.hits10:.6f},{seconds:.3f}\n")
            print(f"k={k} mrr={metrics.mrr:.4f} ({seconds:.1f}s)")
    return 0


def _add_common_flags(parser):
    parser.add_argument("--dataset", help="directory with train.txt/valid.txt/test.txt")
    parser.add_argument("--model", choices=sorted(set(MODEL_ALIASES) | set(MODEL_ALIASES.values())))
    parser.add_argument("--k", type=int)
    parser.add_argument("--p", type=int, choices=(2, 3))
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--lambda1", type=float)
    parser.add_argument("--lambda2", type=float)
    parser.add_argument("--lambda3", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--schedule", choices=("constant", "exp"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--ablation", choices=("scalar", "vector", "both"))
    parser.add_argument("--eval-interval", dest="eval_interval", type=int)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="mkge",
                                     description="Knowledge graph embeddings over modules")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and evaluate the test split")
    _add_common_flags(p_train)
    p_train.add_argument("--resume", help="checkpoint to continue training from")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_common_flags(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=("train", "valid", "test"), default="test")
    p_eval.set_defaults(func=cmd_eval)

    p_ablate = sub.add_parser("ablate", help="train scalar/vector/both with one seed")
    _add_common_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_sweep = sub.add_parser("sweep", help="train and evaluate for several k")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--k-list", dest="k_list", type=int, nargs="+", required=True)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def _apply_thread_cap():
    threads = os.environ.get("MKGE_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def main(argv=None):
    _apply_thread_cap()  # before numpy spins up its thread pools
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MkgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
