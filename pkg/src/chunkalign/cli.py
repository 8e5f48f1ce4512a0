"""Command-line pipeline: prepare, train, align, evaluate, grid, crossdomain.

Option precedence is defaults < config file (--config, JSON object keyed
by flag name) < explicit command-line flags. All randomness flows from
--seed; identical inputs, config, and seed give identical output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evaluate as ev
from . import train as tr
from .corpus import load_canonical, merge_annotations, parse_wa, save_canonical, validate
from .embed import load_annotations, load_vectors
from .net import PointerParams
from .ot import SinkhornConfig
from .rules import load_triples


class CliError(ValueError):
    pass


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--corpus", help="canonical corpus file")
    parser.add_argument("--vectors", help="word-vector text file (mean-pooling presets)")
    parser.add_argument("--contextual", help="contextual annotation JSONL (boundary presets)")
    parser.add_argument("--triples", help="relation-triple TSV for rule constraints")
    parser.add_argument("--preset", choices=sorted(tr.PRESETS))
    parser.add_argument("--rho", type=float, help="rule strength")
    parser.add_argument("--dim", type=int, help="pointer projection dimension d")
    parser.add_argument("--lambda", dest="lam", type=float, help="entropy regularization strength")
    parser.add_argument("--sinkhorn-iters", type=int, help="fixed normalization sweep count")
    parser.add_argument("--tau", type=float, help="syntactic-similarity threshold")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--seeds", type=int, help="run N seeds (seed, seed+1, ...) and average")
    parser.add_argument("--mutual", action="store_const", const=True, default=None,
                        help="decode only cells that win both their row and column")
    parser.add_argument("--out", help="output directory")


DEFAULTS = {
    "preset": "M2",
    "rho": None,
    "dim": 100,
    "lam": 0.6,
    "sinkhorn_iters": 20,
    "tau": 0.8,
    "seed": 0,
    "seeds": 1,
    "epochs": 200,
    "patience": 5,
    "lr": 1e-3,
    "mutual": False,
}


def _resolve(args, keys):
    """Merge defaults, config file, and flags for the given keys."""
    merged = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as handle:
                file_values = json.load(handle)
        except (OSError, json.JSONDecodeError) as err:
            raise CliError(f"cannot read config file {config_path}: {err}") from None
        if not isinstance(file_values, dict):
            raise CliError(f"config file {config_path} must hold a JSON object")
        merged.update(file_values)
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _require(merged, args, *keys):
    for key in keys:
        value = getattr(args, key, None) or merged.get(key)
        if not value:
            raise CliError(f"--{key.replace('_', '-')} is required for this command")
        merged[key] = value
    return merged


def _train_config(merged):
    preset = merged["preset"]
    rho = merged["rho"]
    if rho is None:
        rho = 2.0 if tr.PRESETS[preset][2] else 0.0
    return tr.TrainConfig(
        model_preset=preset,
        learning_rate=float(merged["lr"]),
        max_epochs=int(merged["epochs"]),
        patience=int(merged["patience"]),
        seed=int(merged["seed"]),
        proj_dim=int(merged["dim"]),
        rho=float(rho),
        tau=float(merged["tau"]),
        sinkhorn=SinkhornConfig(lam=float(merged["lam"]), iterations=int(merged["sinkhorn_iters"])),
        mutual_decode=bool(merged["mutual"]),
    )


def _load_resources(merged, cfg):
    table = annotations = lexicon = None
    if merged.get("vectors"):
        table = load_vectors(merged["vectors"])
    if merged.get("contextual"):
        annotations = load_annotations(merged["contextual"])
    if merged.get("triples"):
        lexicon = load_triples(merged["triples"])
    if cfg.embedding_mode == "mean" and table is None:
        raise CliError(f"preset {cfg.model_preset} needs --vectors")
    if cfg.embedding_mode == "boundary" and annotations is None:
        raise CliError(f"preset {cfg.model_preset} needs --contextual")
    if cfg.constrained and cfg.rho > 0 and lexicon is None:
        raise CliError(f"preset {cfg.model_preset} with rho > 0 needs --triples")
    return table, annotations, lexicon


def _load_corpus(path, annotations):
    """Load a canonical corpus, folding in POS tags and heads from the
    annotation records when they are provided (rules need them)."""
    corpus = load_canonical(path)
    if annotations is not None:
        corpus = merge_annotations(corpus, annotations)
    return corpus


def _out_dir(merged):
    out = Path(merged.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _checkpoint_meta(cfg):
    return {
        "preset": cfg.model_preset,
        "rho": cfg.rho,
        "tau": cfg.tau,
        "lam": cfg.sinkhorn.lam,
        "sinkhorn_iters": cfg.sinkhorn.iterations,
        "epsilon": cfg.sinkhorn.epsilon,
        "epsilon_mode": cfg.sinkhorn.epsilon_mode,
        "mutual": cfg.mutual_decode,
    }


def _config_from_checkpoint(header, merged):
    merged = dict(merged)
    merged.setdefault("preset", header.get("preset", "M2"))
    for key, meta_key in (("rho", "rho"), ("tau", "tau"), ("lam", "lam"),
                          ("sinkhorn_iters", "sinkhorn_iters"), ("mutual", "mutual")):
        if merged.get(key) in (None, DEFAULTS.get(key)):
            merged[key] = header.get(meta_key, merged.get(key))
    merged["preset"] = header.get("preset", merged["preset"])
    merged["dim"] = header.get("proj_dim", merged["dim"])
    return merged


# ---------------------------------------------------------------------------
# Commands


def cmd_prepare(args):
    merged = _resolve(args, ["seed", "out"])
    if not args.wa:
        raise CliError("--wa is required")
    with open(args.wa, encoding="utf-8") as handle:
        pairs = parse_wa(handle.read())
    if args.annotations:
        pairs = merge_annotations(pairs, load_annotations(args.annotations))
    strict_violations = []
    for pair in pairs:
        for violation in validate(pair):
            if "gap" in violation:
                continue  # unchunked tokens are common in alignment data
            strict_violations.append(f"{pair.id}: {violation}")
    if strict_violations:
        raise CliError("corpus validation failed:\n" + "\n".join(strict_violations))
    out = _out_dir(merged)
    target = out / (args.name or "corpus.jsonl")
    save_canonical(pairs, target)
    print(f"wrote {len(pairs)} pairs to {target}")
    return 0


def _fit_once(corpus, cfg, resources, out, tag=""):
    table, annotations, lexicon = resources
    log_path = out / f"train_log{tag}.jsonl"
    with open(log_path, "w", encoding="utf-8") as log_file:
        def hook(entry):
            log_file.write(json.dumps(entry) + "\n")
            print(f"epoch {entry['epoch']}: loss {entry['loss']:.6f} train_f1 {entry['train_f1']:.4f}")

        params, log = tr.fit(
            corpus, cfg, table=table, annotations=annotations, lexicon=lexicon, log_hook=hook
        )
    checkpoint = out / f"checkpoint{tag}.npz"
    params.save(checkpoint, meta=_checkpoint_meta(cfg))
    best = max((e["train_f1"] for e in log), default=0.0)
    print(f"saved {checkpoint} (best train F1 {best:.4f}, {len(log)} epochs)")
    return params, best


def cmd_train(args):
    merged = _resolve(args, ["corpus", "vectors", "contextual", "triples", "preset", "rho",
                             "dim", "lam", "sinkhorn_iters", "tau", "seed", "seeds", "out",
                             "epochs", "patience", "lr", "mutual"])
    _require(merged, args, "corpus")
    cfg = _train_config(merged)
    resources = _load_resources(merged, cfg)
    corpus = _load_corpus(merged["corpus"], resources[1])
    out = _out_dir(merged)
    runs = int(merged["seeds"])
    scores = []
    for k in range(runs):
        run_cfg = replace(cfg, seed=cfg.seed + k)
        tag = "" if runs == 1 else f"_seed{run_cfg.seed}"
        _, best = _fit_once(corpus, run_cfg, resources, out, tag=tag)
        scores.append(best)
    if runs > 1:
        print(f"mean best train F1 over {runs} runs: {float(np.mean(scores)):.4f}")
    return 0


def _decode_corpus(params, header, corpus_path, merged, verbose=False):
    cfg = _train_config(_config_from_checkpoint(header, merged))
    resources = _load_resources(_config_from_checkpoint(header, merged), cfg)
    corpus = _load_corpus(corpus_path, resources[1])
    batch = tr.prepare_pair_inputs(
        corpus, cfg, table=resources[0], annotations=resources[1], lexicon=resources[2]
    )
    predictions = []
    for pair, (X, Y, _, shift) in zip(corpus, batch):
        probs = tr.forward_pair(params, X, Y, cfg, shift=shift)
        if cfg.bidirectional:
            if verbose:
                print(
                    f"{pair.id}: row residual {probs.row_residual:.3e}, "
                    f"col residual {probs.col_residual:.3e}, plan entropy {probs.entropy:.4f}",
                    file=sys.stderr,
                )
            predictions.append(ev.decode(probs, mutual=cfg.mutual_decode))
        else:
            n, m = X.shape[0], Y.shape[0]
            predictions.append(
                ev.decode(probs[:n, :], tr._GateView(g_y=1.0 - probs[n, :m]), mutual=cfg.mutual_decode)
            )
    return corpus, predictions


def cmd_align(args):
    merged = _resolve(args, ["corpus", "vectors", "contextual", "triples", "rho", "dim",
                             "lam", "sinkhorn_iters", "tau", "seed", "out", "mutual"])
    _require(merged, args, "corpus")
    if not args.checkpoint:
        raise CliError("--checkpoint is required")
    params, header = PointerParams.load(args.checkpoint)
    corpus, predictions = _decode_corpus(params, header, merged["corpus"], merged,
                                         verbose=args.verbose)
    out = _out_dir(merged)
    target = out / (args.name or "alignments.txt")
    ev.write_alignments(zip(corpus, predictions), target)
    print(f"wrote alignments for {len(corpus)} pairs to {target}")
    return 0


def cmd_evaluate(args):
    merged = _resolve(args, ["corpus", "vectors", "contextual", "triples", "rho", "dim",
                             "lam", "sinkhorn_iters", "tau", "out", "mutual"])
    _require(merged, args, "corpus")
    if args.alignments:
        corpus = load_canonical(merged["corpus"])
        decoded = ev.read_alignments(args.alignments)
        predictions = []
        for pair in corpus:
            if pair.id not in decoded:
                raise CliError(f"alignment file lacks pair {pair.id!r}")
            predictions.append(decoded[pair.id])
    elif args.checkpoint:
        params, header = PointerParams.load(args.checkpoint)
        corpus, predictions = _decode_corpus(params, header, merged["corpus"], merged)
    else:
        raise CliError("evaluate needs --alignments or --checkpoint")
    report = ev.evaluate_corpus(predictions, corpus)
    text = "\n".join(report.lines())
    print(text)
    if merged.get("out"):
        out = _out_dir(merged)
        (out / "evaluation.txt").write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_grid(args):
    merged = _resolve(args, ["corpus", "vectors", "contextual", "triples", "preset", "dim",
                             "lam", "sinkhorn_iters", "tau", "seed", "out", "epochs",
                             "patience", "lr", "mutual"])
    _require(merged, args, "corpus")
    corpus = load_canonical(merged["corpus"])
    cfg = _train_config(merged)
    resources = _load_resources(merged, cfg)
    rho_grid = [float(x) for x in (args.rho_grid or "0,1,2,4").split(",")]
    dim_grid = [int(x) for x in (args.dim_grid or "100,150,200,768").split(",")]
    results, (best_entry, best_params) = tr.grid_search(
        corpus, cfg, rho_grid=rho_grid, dim_grid=dim_grid,
        table=resources[0], annotations=resources[1], lexicon=resources[2],
    )
    out = _out_dir(merged)
    with open(out / "grid.jsonl", "w", encoding="utf-8") as handle:
        for entry in results:
            handle.write(json.dumps(entry) + "\n")
    best_cfg = replace(cfg, rho=best_entry["rho"], proj_dim=best_entry["proj_dim"])
    best_params.save(out / "checkpoint.npz", meta=_checkpoint_meta(best_cfg))
    for entry in results:
        if entry.get("skipped"):
            print(f"rho={entry['rho']} d={entry['proj_dim']}: skipped ({entry['reason']})")
        else:
            print(f"rho={entry['rho']} d={entry['proj_dim']}: train F1 {entry['best_f1']:.4f}")
    print(f"best: rho={best_entry['rho']} d={best_entry['proj_dim']} train F1 {best_entry['best_f1']:.4f}")
    return 0


def cmd_crossdomain(args):
    merged = _resolve(args, ["corpus", "vectors", "contextual", "triples", "preset", "rho",
                             "dim", "lam", "sinkhorn_iters", "tau", "seed", "seeds", "out",
                             "epochs", "patience", "lr", "mutual"])
    _require(merged, args, "corpus")
    if not args.test_corpus:
        raise CliError("--test-corpus is required")
    cfg = _train_config(merged)
    resources = _load_resources(merged, cfg)
    train_corpus = _load_corpus(merged["corpus"], resources[1])
    out = _out_dir(merged)
    runs = int(merged["seeds"])
    scores = []
    for k in range(runs):
        run_cfg = replace(cfg, seed=cfg.seed + k)
        tag = "" if runs == 1 else f"_seed{run_cfg.seed}"
        params, _ = _fit_once(train_corpus, run_cfg, resources, out, tag=tag)
        header = _checkpoint_meta(run_cfg)
        header["proj_dim"] = run_cfg.proj_dim
        test_corpus, predictions = _decode_corpus(params, header, args.test_corpus, merged)
        report = ev.evaluate_corpus(predictions, test_corpus)
        scores.append(report.f1)
        print(f"seed {run_cfg.seed}: test F1 {report.f1:.4f}")
        (out / f"evaluation{tag}.txt").write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    print(f"mean test F1 over {runs} run(s): {float(np.mean(scores)):.4f}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chunkalign",
        description="Chunk alignment for interpretable sentence similarity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="convert a .wa file to the canonical corpus format")
    p.add_argument("--wa", required=True, help="SemEval-style .wa alignment file")
    p.add_argument("--annotations", help="annotation JSONL to merge POS tags and heads from")
    p.add_argument("--name", help="output file name (default corpus.jsonl)")
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="fit a model on a corpus with gold alignments")
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("align", help="decode alignments for a corpus with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--name", help="output file name (default alignments.txt)")
    p.add_argument("--verbose", action="store_true",
                   help="print per-pair transport diagnostics to stderr")
    _add_common(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("evaluate", help="score alignments (from a file or a checkpoint) against gold")
    p.add_argument("--alignments", help="alignment output file to score")
    p.add_argument("--checkpoint", help="decode with this checkpoint and score")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="hyperparameter grid search ranked by training F1")
    p.add_argument("--rho-grid", help="comma-separated rule strengths (default 0,1,2,4)")
    p.add_argument("--dim-grid", help="comma-separated projection dims (default 100,150,200,768)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("crossdomain", help="train on one corpus, evaluate on another")
    p.add_argument("--test-corpus", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_crossdomain)
    return parser


def dispatch(argv):
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
