"""Command-line entry points.

Every verb is a thin wrapper over the library: ingest and index build
the knowledge base, analyze runs the full pipeline synchronously and
writes the report file, serve starts the HTTP API, eval-report prints
score distributions. All verbs share one JSON config file. Exit code 0
means success; failures exit nonzero with a stage-attributed message.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import CorpusStore
from .errors import PipelineError, ProvkitError
from .service import AnalysisEngine, ServiceConfig, create_app, index_corpus


def _config(args) -> ServiceConfig:
    return ServiceConfig.load(args.config)


def cmd_ingest(args) -> int:
    config = _config(args)
    store = CorpusStore(config.corpus_dir, create=True)
    for bundle in args.bundle:
        record = store.ingest_document(bundle, context_pages=args.context_pages)
        print(f"ingested {record.doc_id}: {record.page_count} pages")
    print(f"corpus now lists {len(store.manifest.documents)} documents, "
          f"{len(store.manifest.assets)} image assets")
    return 0


def cmd_index(args) -> int:
    config = _config(args)
    index = index_corpus(config)
    print(
        f"index written to {config.index_path} "
        f"(raw: {len(index.raw)}, edge: {len(index.edge)}, semantic: {len(index.semantic)})"
    )
    return 0


def cmd_analyze(args) -> int:
    from .inference import run_analysis
    from .retrieval import Retriever, VectorIndex

    config = _config(args)
    store = CorpusStore(config.corpus_dir)
    index = VectorIndex.load(config.index_path)
    retriever = Retriever(
        index, config.make_embedder(), config.make_semantic_embedder(), side=config.side
    )
    data = Path(args.image).read_bytes()
    report = run_analysis(
        data,
        store=store,
        retriever=retriever,
        client=config.make_vlm(),
        k=args.k if args.k is not None else config.k,
        m=args.m if args.m is not None else config.m,
        phase1_workers=config.phase1_workers,
    )
    out = Path(args.out)
    out.write_bytes(report.to_json_bytes())
    print(f"report written to {out}")
    print(f"site: {report.site}")
    print(f"period: {report.period}")
    print(f"best reference: {report.best_reference[0]} p.{report.best_reference[1]}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = _config(args)
    engine = AnalysisEngine(config)
    app = create_app(engine)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def cmd_eval_report(args) -> int:
    from .evaluation import ScoreLog

    config = _config(args)
    log = ScoreLog(config.scores_path)
    dist = log.distribution(args.question)
    if args.format == "json":
        print(json.dumps(dist.rounded(), sort_keys=True, indent=2))
    else:
        print(dist.table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provkit",
        description="Retrieval-assisted provenance attribution for artifact photographs.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="register document bundles in the corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--bundle", action="append", required=True, help="bundle directory (repeatable)")
    p.add_argument("--context-pages", type=int, default=0,
                   help="widen image context to this many neighboring pages")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("index", help="embed the corpus and write the search index")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("analyze", help="run the full pipeline on one image")
    p.add_argument("--config", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--k", type=int, default=None, help="per-strategy retrieval depth")
    p.add_argument("--m", type=int, default=None, help="candidate cap after aggregation")
    p.add_argument("--out", default="report.json")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("serve", help="start the HTTP API and review UI")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("eval-report", help="print the expert score distribution")
    p.add_argument("--config", required=True)
    p.add_argument("--question", required=True, choices=["Q1", "Q2"])
    p.add_argument("--format", default="text", choices=["text", "json"])
    p.set_defaults(fn=cmd_eval_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PipelineError as exc:
        print(f"error: analysis failed at {exc.stage}: {exc.message}", file=sys.stderr)
        return 1
    except ProvkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
