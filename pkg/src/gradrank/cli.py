"""Command-line interface: ``gradrank {train,score,explain,snippet,stats,synth}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, ranker, report, snippet, text
from .errors import GradRankError
from .gradcam import compute_localization, explain
from .interaction import build_interaction_matrix


def _load_pair(args):
    model = ranker.load_model(args.model)
    emb = text.load_embeddings(args.embeddings, seed=args.seed)
    query = text.tokenize(args.query, args.max_q)
    doc = text.tokenize(text.read_text(args.doc_file), args.max_d)
    return model, emb, query, doc


def cmd_train(args):
    emb = text.load_embeddings(args.embeddings, seed=args.seed)
    data = text.load_dataset(args.dataset, args.max_q, args.max_d)
    config = ranker.RankerConfig(seed=args.seed)
    model = ranker.init_model(config)
    ranker.train(model, data, emb, epochs=args.epochs, lr=args.lr, margin=args.margin, seed=args.seed,
                 callback=lambda epoch, loss: print(f"epoch {epoch} loss {loss:.9g}"))
    ranker.save_model(model, args.out)
    print(f"pairwise accuracy {ranker.pairwise_accuracy(model, data, emb):.4f}")
    print(f"wrote {args.out}")


def cmd_score(args):
    model, emb, query, doc = _load_pair(args)
    print(f"{model.score_pair(query, doc, emb):.9g}")


def cmd_explain(args):
    model, emb, query, doc = _load_pair(args)
    rep = explain(model, query, doc, emb, top_k=args.top_k, window=args.window)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(rep.to_json(), encoding="utf-8")
    report.write_ppm(rep.L, out / "L.ppm", args.cell_px)
    report.write_ppm(rep.M, out / "M.ppm", args.cell_px)
    print(f"score {rep.score:.9g}")
    print("effective terms: " + ", ".join(t.token for t in rep.effective))
    print("filtered terms: " + ", ".join(t.token for t in rep.filtered))
    print(f"wrote {out / 'report.json'}, {out / 'L.ppm'}, {out / 'M.ppm'}")


def cmd_snippet(args):
    model, emb, query, doc = _load_pair(args)
    _, _, loc = compute_localization(model, build_interaction_matrix(query, doc, emb))
    van = snippet.vanilla_snippet(query, doc, args.window)
    gc = snippet.gradcam_snippet(query, doc, loc.l, args.window)
    same = (van.start, van.end) == (gc.start, gc.end)
    payload = {
        "window": args.window,
        "vanilla": report._span_dict(van),
        "gradcam": report._span_dict(gc),
        "status": "same" if same else "different",
    }
    print(f"vanilla [{van.start}, {van.end}): {van.text()}")
    print(f"gradcam [{gc.start}, {gc.end}): {gc.text()}")
    print(payload["status"])
    blob = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(blob, encoding="utf-8")
    else:
        sys.stdout.write(blob)


def cmd_stats(args):
    model = ranker.load_model(args.model)
    emb = text.load_embeddings(args.embeddings, seed=args.seed)
    data = text.load_dataset(args.dataset, args.max_q, args.max_d)
    result = corpus.corpus_analysis(model, data, emb, window=args.window)
    blob = result.to_json()
    if args.out:
        Path(args.out).write_text(blob, encoding="utf-8")
    for test in result.tests.values():
        p = "n/a" if test.p_value is None else f"{test.p_value:.3g}"
        print(f"{test.measure}: direction {test.direction}, p {p}, "
              f"n_pos {test.n_pos}, n_neg {test.n_neg}, excluded {test.excluded_count}")
    if not args.out:
        sys.stdout.write(blob)


def cmd_synth(args):
    data, emb = corpus.generate_synthetic_corpus(args.queries, args.vocab, args.seed,
                                                 n_negatives=args.negatives)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text.save_dataset(data, out / "dataset.tsv")
    text.save_embeddings(emb, out / "embeddings.txt")
    print(f"wrote {out / 'dataset.tsv'} ({len(data)} queries) and {out / 'embeddings.txt'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, model=True, pair=False, dataset=False):
        if model:
            p.add_argument("--model", required=True)
        p.add_argument("--embeddings", required=True)
        if dataset:
            p.add_argument("--dataset", required=True)
        if pair:
            p.add_argument("--query", required=True)
            p.add_argument("--doc-file", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-q", type=int, default=text.DEFAULT_MAX_Q)
        p.add_argument("--max-d", type=int, default=text.DEFAULT_MAX_D)

    p = sub.add_parser("train", help="train a ranker with pairwise hinge loss")
    common(p, model=False, dataset=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--margin", type=float, default=1.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score one query-document pair")
    common(p, pair=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("explain", help="write report.json and L/M heatmaps")
    common(p, pair=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--window", type=int, default=snippet.DEFAULT_WINDOW)
    p.add_argument("--cell-px", type=int, default=16)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("snippet", help="compare vanilla and Grad-CAM snippets")
    common(p, pair=True)
    p.add_argument("--window", type=int, default=snippet.DEFAULT_WINDOW)
    p.add_argument("--out", help="JSON file to write")
    p.set_defaults(func=cmd_snippet)

    p = sub.add_parser("stats", help="positive vs negative separation over a dataset")
    common(p, dataset=True)
    p.add_argument("--window", type=int, default=snippet.DEFAULT_WINDOW)
    p.add_argument("--out", help="JSON file to write")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a synthetic dataset and embedding file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--vocab", type=int, default=200)
    p.add_argument("--negatives", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except GradRankError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot access {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
