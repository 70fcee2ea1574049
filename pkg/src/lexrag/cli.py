"""Command-line entry points for the whole pipeline and the server."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as cfgmod
from . import evalkit, indexing, rag
from .errors import EmptyIndexError, LexragError
from .rerank import TrainConfig, load_model, save_model, train_reranker, load_training_file
from .vecstore import VectorStore, exists as store_exists

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

RERANKER_FILENAME = "reranker.json"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _open_store(index_dir: str) -> VectorStore:
    if not store_exists(index_dir):
        raise EmptyIndexError(f"missing index at {index_dir}; run ingest first")
    return VectorStore.load(index_dir)


def _load_model_if_present(index_dir: str):
    path = os.path.join(index_dir, RERANKER_FILENAME)
    return load_model(path) if os.path.exists(path) else None


def _chunk_row(c) -> dict:
    return {
        "chunk_id": c.chunk_id,
        "path": c.path,
        "text": c.text,
        "cosine_score": c.cosine_score,
        "rerank_score": c.rerank_score,
    }


def _cmd_ingest(args) -> int:
    raw = cfgmod.load_config_file(args.config)
    chunk_cfg = cfgmod.build_chunk_config(
        raw, max_tokens=args.max_tokens, overlap_tokens=args.overlap
    )
    embed_cfg = cfgmod.build_embedder_config(raw)
    grammar = cfgmod.build_grammar(raw)
    if store_exists(args.index):
        store = VectorStore.load(args.index)
    else:
        store = VectorStore(embed_cfg.dim)
    summary = indexing.index_file(args.path, store, chunk_cfg, embed_cfg, grammar)
    store.save(args.index)
    print(f"doc_id: {summary.doc_id}")
    print(f"pages: {summary.pages}")
    print(f"chunks: {summary.chunks}")
    for warning in summary.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def _cmd_query(args) -> int:
    raw = cfgmod.load_config_file(args.config)
    embed_cfg = cfgmod.build_embedder_config(raw)
    chunk_cfg = cfgmod.build_chunk_config(raw)
    store = _open_store(args.index)
    model = _load_model_if_present(args.index)
    results = rag.retrieve(
        args.question, args.k, args.rerank, store, embed_cfg,
        model=model, max_tokens=chunk_cfg.max_tokens,
    )
    if args.json:
        print(json.dumps({"results": [_chunk_row(c) for c in results]}))
        return EXIT_OK
    for c in results:
        score = c.rerank_score if c.rerank_score is not None else c.cosine_score
        snippet = c.text[:60].replace("\n", " ")
        print(f"{c.path:<40} {score:8.4f}  {snippet}")
    return EXIT_OK


def _cmd_answer(args) -> int:
    raw = cfgmod.load_config_file(args.config)
    embed_cfg = cfgmod.build_embedder_config(raw)
    chunk_cfg = cfgmod.build_chunk_config(raw)
    rag_cfg = cfgmod.build_rag_config(
        raw, k=args.k, rerank_enabled=args.rerank, backend=args.backend,
        chunk_max_tokens=chunk_cfg.max_tokens,
    )
    store = _open_store(args.index)
    model = _load_model_if_present(args.index)
    result = rag.answer(args.question, store, embed_cfg, rag_cfg, model=model)
    if args.json:
        from .server import answer_to_dict

        print(json.dumps(answer_to_dict(result)))
        return EXIT_OK
    print(result.answer)
    print()
    for chunk_id, path in result.citations:
        print(f"  [{path}] ({chunk_id})")
    return EXIT_OK


def _cmd_train_rerank(args) -> int:
    raw = cfgmod.load_config_file(args.config)
    embed_cfg = cfgmod.build_embedder_config(raw)
    chunk_cfg = cfgmod.build_chunk_config(raw)
    train_cfg = cfgmod.build_train_config(
        raw,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
    )
    store = _open_store(args.index)
    dataset = load_training_file(
        args.train_file, store=store, embed_cfg=embed_cfg,
        max_tokens=chunk_cfg.max_tokens,
    )
    model, history = train_reranker(dataset, train_cfg)
    out_path = args.out or os.path.join(args.index, RERANKER_FILENAME)
    save_model(model, out_path)
    print(f"examples: {len(dataset)}")
    print(f"final loss: {history[-1]:.6f}")
    print(f"model: {out_path}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    raw = cfgmod.load_config_file(args.config)
    embed_cfg = cfgmod.build_embedder_config(raw)
    chunk_cfg = cfgmod.build_chunk_config(raw)
    rag_cfg = cfgmod.build_rag_config(
        raw, rerank_enabled=args.rerank, chunk_max_tokens=chunk_cfg.max_tokens
    )
    store = _open_store(args.index)
    model = _load_model_if_present(args.index)
    gold = evalkit.load_gold(args.gold_file)
    report = evalkit.run_eval(gold, store, embed_cfg, rag_cfg, args.k, model=model)
    report.config = {
        "k": args.k,
        "rerank": args.rerank,
        "backend": rag_cfg.backend,
        "dim": embed_cfg.dim,
        "gold_file": os.path.basename(args.gold_file),
    }
    evalkit.save_report(report, args.out)
    if args.json:
        print(json.dumps(evalkit.report_to_dict(report)))
        return EXIT_OK
    m = report.macro
    print(
        f"macro precision={m.precision:.3f} recall={m.recall:.3f} f1={m.f1:.3f} "
        f"(questions={len(report.per_question)}, skipped={report.skipped})"
    )
    print(f"report: {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .server import serve

    raw = cfgmod.load_config_file(args.config)
    cfg = cfgmod.build_server_config(
        raw, bind_addr=args.bind, index_dir=args.index, static_dir=args.static_dir
    )
    serve(cfg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexrag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="extract, clean, chunk, embed, and index a document")
    p.add_argument("path")
    p.add_argument("--index", required=True)
    p.add_argument("--max-tokens", type=int, default=None, dest="max_tokens")
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("query", help="retrieve the top-k chunks for a question")
    p.add_argument("question")
    p.add_argument("--index", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("answer", help="answer a question with citations")
    p.add_argument("question")
    p.add_argument("--index", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--backend", choices=["stub", "remote"], default="stub")
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_answer)

    p = sub.add_parser("train-rerank", help="train the logistic re-ranker")
    p.add_argument("train_file")
    p.add_argument("--index", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_train_rerank)

    p = sub.add_parser("eval", help="score retrieval against a gold set")
    p.add_argument("gold_file")
    p.add_argument("--index", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--out", default="eval_report.json")
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the REST API server")
    p.add_argument("--config", default=None)
    p.add_argument("--index", default=None)
    p.add_argument("--bind", default=None)
    p.add_argument("--static-dir", default=None, dest="static_dir")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except LexragError as exc:
        print(f"error ({exc.kind}): {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
