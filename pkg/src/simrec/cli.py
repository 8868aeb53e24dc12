"""Command-line entry points for the whole pipeline.

Commands: prepare, finetune, train, evaluate, serve. Each is
resumable-safe: rerunning with identical inputs and seed produces
identical outputs. Domain errors exit 1 with the error name; usage
errors exit 2.
"""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

from .config import load_config
from .contrastive import ContrastiveConfig, finetune
from .corpus import (
    build_pair_dataset,
    corpus_hash,
    journal_table_hash,
    journal_to_dict,
    load_corpus,
    write_jsonl,
)
from .encoders import KIND_TOY, ToyConfig, ToyTransformerEncoder, load_encoder, save_encoder
from .errors import SimrecError
from .evaluation import export_report, run_sweep
from .recommender import DownstreamConfig, DownstreamModel, train_downstream
from .text import normalize_text

LOSS_LOG_NAME = "loss_log.jsonl"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simrec",
        description="journal recommendation pipeline: prepare, finetune, train, evaluate, serve",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file (YAML/JSON); falls back to $SIMREC_CONFIG")
        p.add_argument("--seed", type=int, help="override the config seed")

    def corpus_args(p):
        p.add_argument("--papers", required=True, help="papers JSONL file")
        p.add_argument("--journals", required=True, help="journals JSONL file")
        p.add_argument("--split-file", help="optional explicit split JSONL file")

    p = sub.add_parser("prepare", help="normalize the corpus into split files")
    common(p)
    corpus_args(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("finetune", help="contrastively fine-tune an encoder on pairs")
    common(p)
    corpus_args(p)
    p.add_argument("--out", required=True, help="encoder artifact output directory")
    p.add_argument("--pretrained", help="pretrained backbone name (needs transformers)")

    p = sub.add_parser("train", help="train a downstream head for one combo")
    common(p)
    corpus_args(p)
    p.add_argument("--encoder", required=True, help="encoder artifact directory")
    p.add_argument("--combo", default="TAK", help="feature combo code, e.g. TAK or TAKS")
    p.add_argument("--out", required=True, help="model artifact output directory")

    p = sub.add_parser("evaluate", help="run the combo sweep and export a report")
    common(p)
    corpus_args(p)
    p.add_argument("--encoder", required=True, help="encoder artifact directory")
    p.add_argument("--combos", default="TAK,TAKS", help="comma-separated combo codes")
    p.add_argument("--out", required=True, help="report output path (.jsonl)")

    p = sub.add_parser("serve", help="serve recommendations from a model artifact")
    common(p)
    p.add_argument("--artifact", required=True, help="model artifact directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000, help="0 picks an ephemeral port")
    p.add_argument("--static", help="optional static UI directory to mount at /")

    return parser


def _merged_config(args) -> dict:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def _load_split(args):
    return load_corpus(args.papers, args.journals, args.split_file)


def _normalized_paper(record) -> dict:
    keywords = [normalize_text(k) for k in record.keywords]
    return {
        "id": record.id,
        "title": normalize_text(record.title),
        "abstract": normalize_text(record.abstract),
        "keywords": [k for k in keywords if k],
        "journal_id": record.journal_id,
    }


def cmd_prepare(args) -> int:
    _merged_config(args)
    split = _load_split(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "train.jsonl", (_normalized_paper(r) for r in split.train))
    write_jsonl(out / "test.jsonl", (_normalized_paper(r) for r in split.test))
    write_jsonl(out / "journals.jsonl", (
        {**journal_to_dict(j), "scope_text": normalize_text(j.scope_text)}
        for j in split.journals
    ))
    write_jsonl(out / "split.jsonl", (
        {"id": r.id, "split": name}
        for name, records in (("train", split.train), ("test", split.test))
        for r in records
    ))
    print(f"journals: {len(split.journals)}")
    print(f"train: {len(split.train)}")
    print(f"test: {len(split.test)}")
    print(f"wrote normalized splits to {out}")
    return 0


def _contrastive_config(cfg: dict, pretrained: bool) -> ContrastiveConfig:
    lr = cfg.get("contrastive_lr")
    if lr is None:
        lr = 3e-5 if pretrained else 1e-3
    return ContrastiveConfig(
        tau=cfg["tau"],
        batch_size=cfg["contrastive_batch_size"],
        epochs=cfg["contrastive_epochs"],
        learning_rate=lr,
        weight_decay=cfg["weight_decay"],
        seed=cfg["seed"],
        warmup_fraction=cfg["warmup_fraction"],
        include_positive=cfg["include_positive"],
        max_len=cfg["max_len"] if pretrained else None,
    )


def cmd_finetune(args) -> int:
    cfg = _merged_config(args)
    split = _load_split(args)
    pairs = build_pair_dataset(split)
    print(f"pairs: {len(pairs)} (skipped {pairs.skipped})")

    if args.pretrained:
        from .encoders import PretrainedTransformerEncoder
        encoder = PretrainedTransformerEncoder(model_name=args.pretrained,
                                               max_len=cfg["max_len"])
    else:
        texts = [t for pair in pairs.pairs for t in pair]
        encoder = ToyTransformerEncoder.from_texts(
            texts,
            ToyConfig(layers=cfg["toy_layers"], heads=cfg["toy_heads"],
                      model_dim=cfg["toy_model_dim"], ffn_dim=cfg["toy_ffn_dim"],
                      vocab_size=cfg["toy_vocab_size"], max_len=cfg["toy_max_len"]),
            seed=cfg["seed"],
        )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _contrastive_config(cfg, pretrained=bool(args.pretrained))
    encoder, log = finetune(encoder, pairs, config, log_path=out / LOSS_LOG_NAME)
    save_encoder(encoder, out, provenance={
        "journal_table_hash": journal_table_hash(split.journals),
        "dataset_hash": corpus_hash(split),
        "pairs": len(pairs),
        "skipped": pairs.skipped,
    })
    print(f"steps: {len(log)}")
    if log:
        print(f"first loss: {log[0].loss:.6f}")
        print(f"last loss: {log[-1].loss:.6f}")
    print(f"saved encoder artifact to {out}")
    return 0


def _downstream_config(cfg: dict, toy_encoder: bool) -> DownstreamConfig:
    return DownstreamConfig(
        hidden_dim=cfg["hidden_dim"],
        dropout=cfg["dropout"],
        epochs=cfg["downstream_epochs"],
        batch_size=cfg["downstream_batch_size"],
        learning_rate=cfg["downstream_lr"],
        weight_decay=cfg["weight_decay"],
        encoder_lr_scale=cfg["encoder_lr_scale"],
        freeze_encoder=cfg["freeze_encoder"],
        seed=cfg["seed"],
        max_len=None if toy_encoder else cfg["max_len"],
        eval_batch_size=cfg["eval_batch_size"],
    )


def cmd_train(args) -> int:
    cfg = _merged_config(args)
    encoder = load_encoder(args.encoder)
    split = _load_split(args)
    config = _downstream_config(cfg, toy_encoder=encoder.kind == KIND_TOY)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = train_downstream(encoder, split, args.combo, config,
                             out_dir=out, log_path=out / LOSS_LOG_NAME)
    info = model.training_info
    print(f"steps: {info['steps']}")
    print(f"final loss: {info['final_loss']:.6f}")
    print(f"saved model artifact to {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _merged_config(args)
    encoder = load_encoder(args.encoder)
    split = _load_split(args)
    combos = [c for c in (s.strip() for s in args.combos.split(",")) if c]
    if not combos:
        raise ValueError("no combos given")
    config = _downstream_config(cfg, toy_encoder=encoder.kind == KIND_TOY)
    report = run_sweep(encoder, split, combos, config)
    out = export_report(report, args.out)
    print(out.with_suffix(".txt").read_text(encoding="utf-8"), end="")
    print(f"wrote report to {out}")
    if report.failures:
        for failure in report.failures:
            print(f"combo {failure['combo']} failed: {failure['error']}",
                  file=sys.stderr)
        return 1
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    model = DownstreamModel.load(args.artifact)
    app = create_app(model=model, static_dir=args.static)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, args.port))
    port = sock.getsockname()[1]
    print(f"serving on http://{args.host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return 0


_COMMANDS = {
    "prepare": cmd_prepare,
    "finetune": cmd_finetune,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SimrecError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
