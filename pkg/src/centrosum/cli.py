"""Command-line operator surface.

Subcommands: ``summarize``, ``train``, ``evaluate``, ``oracle`` (summarize
with the reference-derived centroid), ``adapt-crosssum`` and ``gradcheck``.
Flags may be pre-seeded from a ``key = value`` config file passed with
``--config``; explicit flags always win.

Exit codes: 0 success, 2 validation error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .cera import (
    TrainConfig,
    clone_params,
    forward,
    gradient_check_report,
    load_checkpoint,
    normalize_cluster,
    save_checkpoint,
    train,
    write_history,
)
from .corpus import (
    Cluster,
    CrossSumDocument,
    SummarySentence,
    build_crosssum_clusters,
    cluster_gold_centroid,
    load_split,
    mean_pool_cluster,
    preprocess_cluster,
    read_embeddings,
    read_pairings,
    save_split,
)
from .errors import DataError, NumericError, ValidationError
from .rouge import bootstrap_ci, score_summary
from .selection import SelectionConfig, render_summary, select_summary

DATASET_BUDGETS = {
    "multinews": 230,
    "multi-news": 230,
    "wcep10": 50,
    "wcep-10": 50,
    "tac2008": 100,
    "duc2004": 100,
    "crosssum": 100,
}

CENTROID_SOURCES = ("mean-pool", "cera", "cerai", "oracle")


# ---------------------------------------------------------------------------
# Config file support
# ---------------------------------------------------------------------------


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {line_no}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_defaults(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    for action in parser._actions:  # noqa: SLF001 - argparse has no public hook
        if action.dest in cfg:
            raw = cfg[action.dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                value: object = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            parser.set_defaults(**{action.dest: value})


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _resolve_budget(args: argparse.Namespace) -> int:
    if args.budget is not None:
        return args.budget
    if args.dataset:
        tag = args.dataset.lower()
        if tag not in DATASET_BUDGETS:
            raise ValidationError(
                f"unknown dataset tag {args.dataset!r}; known: {sorted(set(DATASET_BUDGETS))}"
            )
        return DATASET_BUDGETS[tag]
    raise ValidationError("either --budget or --dataset is required")


def _selection_config(args: argparse.Namespace, budget: int) -> SelectionConfig:
    return SelectionConfig(
        n=args.preselect,
        beam_size=args.beam_size,
        window=args.window,
        budget=budget,
        mode=args.mode,
    )


def _sanitize(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def _summarize_one(task: tuple) -> tuple[str, str, dict | None]:
    cluster, config, source, params, want_trace = task
    pre = preprocess_cluster(cluster, config.budget)
    if source == "mean-pool":
        centroid = mean_pool_cluster(pre)
    elif source == "oracle":
        centroid = cluster_gold_centroid(pre)
    else:
        centroid, _ = forward(normalize_cluster(pre), params)
    trace: list | None = [] if want_trace else None
    state = select_summary(pre, centroid, config, trace)
    original_index = {id(s): i for i, s in enumerate(cluster.all_sentences())}
    pre_sentences = pre.all_sentences()
    chosen = sorted(original_index[id(pre_sentences[i])] for i in state.chosen)
    line = "\t".join(
        [
            cluster.id,
            ",".join(str(i) for i in chosen),
            _sanitize(render_summary(pre, state)),
            f"{state.score:.10f}",
        ]
    )
    trace_record = {"cluster_id": cluster.id, "events": trace} if want_trace else None
    return cluster.id, line, trace_record


# ---------------------------------------------------------------------------
# summarize / oracle
# ---------------------------------------------------------------------------


def cmd_summarize(args: argparse.Namespace) -> int:
    clusters = load_split(args.corpus, args.embeddings)
    budget = _resolve_budget(args)
    config = _selection_config(args, budget)
    source = args.source
    if source not in CENTROID_SOURCES:
        raise ValidationError(f"--source must be one of {CENTROID_SOURCES}")
    params = None
    if source in ("cera", "cerai"):
        if not args.checkpoint:
            raise ValidationError(f"--checkpoint is required for --source {source}")
        expect_d = clusters[0].dim if clusters else None
        params, _ = load_checkpoint(args.checkpoint, expect_variant=source, expect_d=expect_d)
    tasks = [(cluster, config, source, params, bool(args.trace)) for cluster in clusters]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_summarize_one, tasks))
    else:
        results = [_summarize_one(task) for task in tasks]
    lines = [line for _, line, _ in results]
    Path(args.output).write_text(
        ("\n".join(lines) + "\n") if lines else "", encoding="utf-8"
    )
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for _, _, record in results:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {len(lines)} summaries to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    train_clusters = load_split(args.train_corpus, args.train_embeddings)
    val_clusters = load_split(args.val_corpus, args.val_embeddings)
    budget = args.budget if args.budget is not None else 100
    train_pre = [preprocess_cluster(c, budget) for c in train_clusters]
    val_pre = [preprocess_cluster(c, budget) for c in val_clusters]
    config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        scheduler_step=args.scheduler_step,
        scheduler_gamma=args.scheduler_gamma,
        max_epochs=args.max_epochs,
        patience=args.patience,
        variant=args.variant,
        validation_metric=args.val_metric,
        seed=args.seed,
        num_positions=args.positions,
        selection=SelectionConfig(
            n=args.preselect,
            beam_size=args.beam_size,
            window=args.window,
            budget=budget,
            mode=args.mode,
        ),
    )
    params, history = train(train_pre, val_pre, config)
    meta = {
        "variant": config.variant,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "scheduler_step": config.scheduler_step,
        "scheduler_gamma": config.scheduler_gamma,
        "seed": config.seed,
        "validation_metric": config.validation_metric,
        "epochs_run": len(history),
    }
    save_checkpoint(params, args.output, meta)
    history_path = args.history or f"{args.output}.history.tsv"
    write_history(history, history_path)
    if not args.no_figures:
        from .report import render_history_figure

        render_history_figure(history, f"{history_path}.png")
    best = max if config.validation_metric == "rouge2-recall" else min
    best_entry = best(history, key=lambda e: e.val_metric)
    print(
        f"trained {config.variant} for {len(history)} epochs; "
        f"best {config.validation_metric} = {best_entry.val_metric:.6f} "
        f"at epoch {best_entry.epoch}; checkpoint: {args.output}"
    )
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _read_summaries(path: str | Path) -> list[tuple[str, str]]:
    records: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(
                    f"{path}: line {line_no}: expected 4 tab-separated fields, "
                    f"got {len(parts)}"
                )
            cluster_id, _, text, _ = parts
            if cluster_id in seen:
                raise DataError(f"{path}: duplicate cluster id {cluster_id!r}")
            seen.add(cluster_id)
            records.append((cluster_id, text))
    return records


def _read_references(path: str | Path) -> dict[str, list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    references: dict[str, list[str]] = {}
    stripped = text.lstrip()
    if stripped.startswith("{"):
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {line_no}: malformed JSON ({exc})") from exc
            refs = [
                " ".join(sentence["text"] for sentence in ref)
                for ref in obj.get("references", [])
            ]
            references[str(obj["id"])] = refs
    else:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError(
                    f"{path}: line {line_no}: expected id and at least one reference"
                )
            references[parts[0]] = parts[1:]
    return references


def _read_batch(path: str | Path) -> list[tuple[str, str, list[str]]]:
    rows: list[tuple[str, str, list[str]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise DataError(
                    f"{path}: line {line_no}: expected id, candidate and at least "
                    "one reference"
                )
            rows.append((parts[0], parts[1], parts[2:]))
    return rows


def cmd_evaluate(args: argparse.Namespace) -> int:
    if args.batch:
        rows = _read_batch(args.batch)
    else:
        if not args.summaries or not args.references:
            raise ValidationError(
                "either --batch or both --summaries and --references are required"
            )
        summaries = _read_summaries(args.summaries)
        references = _read_references(args.references)
        rows = []
        for cluster_id, candidate in summaries:
            if cluster_id not in references:
                raise DataError(
                    f"cluster id {cluster_id!r} from the summary file has no "
                    "references"
                )
            if not references[cluster_id]:
                raise DataError(f"cluster id {cluster_id!r} has an empty reference list")
            rows.append((cluster_id, candidate, references[cluster_id]))

    per_cluster = [(cid, score_summary(cand, refs)) for cid, cand, refs in rows]
    metrics = ("R1", "R2", "RL")
    per_cluster_lines = [
        "cluster_id\t"
        + "\t".join(f"{m}_{part}" for m in metrics for part in ("recall", "precision", "f1"))
    ]
    for cid, scores in per_cluster:
        cells = [cid]
        for m in metrics:
            score = scores[m]
            cells += [f"{score.recall:.6f}", f"{score.precision:.6f}", f"{score.f1:.6f}"]
        per_cluster_lines.append("\t".join(cells))

    aggregates = {}
    for m in metrics:
        for part, attr in (("R", "recall"), ("F", "f1")):
            values = [getattr(scores[m], attr) for _, scores in per_cluster]
            aggregates[f"{m}-{part}"] = bootstrap_ci(
                values, iterations=args.iterations, confidence=args.confidence,
                seed=args.seed,
            )

    prefix = args.output
    Path(f"{prefix}.per_cluster.tsv").write_text(
        "\n".join(per_cluster_lines) + "\n", encoding="utf-8"
    )
    agg_lines = ["metric\tmean\tci_low\tci_high\titerations\tconfidence"]
    for label, summary in aggregates.items():
        agg_lines.append(
            f"{label}\t{summary.mean:.6f}\t{summary.ci_low:.6f}\t"
            f"{summary.ci_high:.6f}\t{summary.iterations}\t{summary.confidence}"
        )
    Path(f"{prefix}.aggregate.tsv").write_text("\n".join(agg_lines) + "\n", encoding="utf-8")
    if not args.no_figures:
        from .report import render_score_figure

        render_score_figure(aggregates, f"{prefix}.png")

    print(f"scored {len(per_cluster)} clusters")
    for label, summary in aggregates.items():
        marker = "  <- main metric" if label == "R2-R" else ""
        print(
            f"{label:5s} {summary.mean:.4f} "
            f"[{summary.ci_low:.4f}, {summary.ci_high:.4f}]{marker}"
        )
    return 0


# ---------------------------------------------------------------------------
# adapt-crosssum
# ---------------------------------------------------------------------------


def _read_crosssum_documents(
    metadata_path: str | Path, embeddings_path: str | Path
) -> dict[str, CrossSumDocument]:
    matrix = read_embeddings(embeddings_path)

    def sentences(payloads: list[dict], line_no: int) -> list[SummarySentence]:
        out = []
        for payload in payloads:
            row = payload.get("emb_row")
            if not isinstance(row, int) or row < 0 or row >= matrix.shape[0]:
                raise DataError(
                    f"line {line_no}: emb_row {row!r} outside store of "
                    f"{matrix.shape[0]} rows"
                )
            out.append(SummarySentence(payload["text"], matrix[row]))
        return out

    documents: dict[str, CrossSumDocument] = {}
    with open(metadata_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON ({exc})") from exc
            doc_id = str(obj["id"])
            if doc_id in documents:
                raise DataError(f"line {line_no}: duplicate document id {doc_id!r}")
            documents[doc_id] = CrossSumDocument(
                id=doc_id,
                sentences=sentences(obj.get("sentences", []), line_no),
                summary=sentences(obj.get("summary", []), line_no),
                language=obj.get("lang"),
            )
    return documents


def cmd_adapt_crosssum(args: argparse.Namespace) -> int:
    documents = _read_crosssum_documents(args.documents, args.embeddings)
    pairings = read_pairings(args.pairs)
    clusters = build_crosssum_clusters(pairings, documents, reference_limit=args.limit)

    train_langs = {lang.strip() for lang in args.train_langs.split(",") if lang.strip()}
    zs_langs = {lang.strip() for lang in args.zs_langs.split(",") if lang.strip()}
    main_pool: list[Cluster] = []
    zero_shot: list[Cluster] = []
    skipped = 0
    for cluster in clusters:
        if not cluster.references:
            skipped += 1
            continue
        langs = set(cluster.languages or [])
        if langs and langs <= train_langs:
            main_pool.append(cluster)
        elif langs and langs <= zs_langs:
            zero_shot.append(cluster)
        elif not langs:
            main_pool.append(cluster)  # untagged documents default to the main pool
        else:
            skipped += 1

    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(main_pool))
    n_val = int(round(args.val_fraction * len(main_pool)))
    n_test = int(round(args.test_fraction * len(main_pool)))
    val_idx = set(order[:n_val].tolist())
    test_idx = set(order[n_val : n_val + n_test].tolist())
    splits: dict[str, list[Cluster]] = {"train": [], "val": [], "test": [], "zs": zero_shot}
    for idx, cluster in enumerate(main_pool):
        if idx in val_idx:
            splits["val"].append(cluster)
        elif idx in test_idx:
            splits["test"].append(cluster)
        else:
            splits["train"].append(cluster)

    for name, members in splits.items():
        if not members:
            continue
        save_split(members, f"{args.output_prefix}.{name}.jsonl", f"{args.output_prefix}.{name}.cemb")
    counts = ", ".join(f"{name}: {len(members)}" for name, members in splits.items())
    print(f"built {len(clusters)} clusters ({counts}; skipped: {skipped})")
    return 0


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def cmd_gradcheck(args: argparse.Namespace) -> int:
    variants = ("cera", "cerai") if args.variant == "both" else (args.variant,)
    all_passed = True
    for variant in variants:
        passed, rows = gradient_check_report(
            variant,
            instances=args.instances,
            d=args.dim,
            eps=args.eps,
            threshold=args.threshold,
            seed=args.seed,
            corrupt=args.corrupt_gradients,
        )
        worst: dict[str, float] = {}
        for row in rows:
            worst[row["tensor"]] = max(worst.get(row["tensor"], 0.0), row["max_rel_err"])
        for tensor, err in worst.items():
            status = "ok" if err < args.threshold else "FAIL"
            print(f"{variant:6s} {tensor:12s} max rel err {err:.3e}  {status}")
        all_passed = all_passed and passed
    print("gradient check:", "PASS" if all_passed else "FAIL")
    return 0 if all_passed else 4


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_selection_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preselect", "-n", type=int, default=9,
                        help="sentences pre-selected per document (default 9)")
    parser.add_argument("--beam-size", "-B", type=int, default=5,
                        help="beam width (default 5)")
    parser.add_argument("--window", "-T", type=int, default=9,
                        help="oversized candidates tolerated by greedy extension (default 9)")
    parser.add_argument("--mode", choices=("baseline-greedy", "beam-only", "beam+greedy"),
                        default="beam+greedy", help="selection pipeline (default beam+greedy)")
    parser.add_argument("--budget", type=int, default=None, help="summary word budget")
    parser.add_argument("--dataset", default=None,
                        help="dataset tag that implies a default budget "
                             "(multinews=230, tac2008/duc2004/crosssum=100, wcep10=50)")


def _add_summarize_args(parser: argparse.ArgumentParser, with_source: bool) -> None:
    parser.add_argument("--corpus", required=True, help="cluster metadata (JSON lines)")
    parser.add_argument("--embeddings", required=True, help="embedding store (CEMB)")
    parser.add_argument("--output", required=True, help="summary file to write")
    if with_source:
        parser.add_argument("--source", choices=CENTROID_SOURCES, default="mean-pool",
                            help="centroid source (default mean-pool)")
    parser.add_argument("--checkpoint", default=None,
                        help="model checkpoint (required for cera/cerai sources)")
    parser.add_argument("--trace", default=None,
                        help="optional JSON-lines selection trace file")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes; 1 guarantees bitwise reproducibility")
    _add_selection_args(parser)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="centrosum",
        description="Centroid-based extractive multi-document summarization.",
    )
    parser.add_argument("--config", default=None,
                        help="key = value file providing flag defaults")
    subparsers = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    summarize = subparsers.add_parser("summarize", help="select summaries for a corpus")
    _add_summarize_args(summarize, with_source=True)
    summarize.set_defaults(func=cmd_summarize)
    registry["summarize"] = summarize

    oracle = subparsers.add_parser(
        "oracle", help="summarize with the reference-derived centroid"
    )
    _add_summarize_args(oracle, with_source=False)
    oracle.set_defaults(func=cmd_summarize, source="oracle")
    registry["oracle"] = oracle

    train_p = subparsers.add_parser("train", help="train the centroid regressor")
    train_p.add_argument("--train-corpus", required=True)
    train_p.add_argument("--train-embeddings", required=True)
    train_p.add_argument("--val-corpus", required=True)
    train_p.add_argument("--val-embeddings", required=True)
    train_p.add_argument("--output", required=True, help="checkpoint file to write")
    train_p.add_argument("--history", default=None,
                         help="history TSV (default: <output>.history.tsv)")
    train_p.add_argument("--variant", choices=("cera", "cerai"), default="cera")
    train_p.add_argument("--lr", type=float, default=5e-4, help="learning rate (default 5e-4)")
    train_p.add_argument("--batch-size", type=int, default=2, help="clusters per batch (default 2)")
    train_p.add_argument("--scheduler-step", type=int, default=3,
                         help="epochs between learning-rate decays (default 3)")
    train_p.add_argument("--scheduler-gamma", type=float, default=0.1,
                         help="learning-rate decay factor (default 0.1)")
    train_p.add_argument("--max-epochs", type=int, default=20)
    train_p.add_argument("--patience", type=int, default=3,
                         help="epochs without improvement before stopping (default 3)")
    train_p.add_argument("--val-metric", choices=("rouge2-recall", "cosine-loss"),
                         default="rouge2-recall")
    train_p.add_argument("--positions", type=int, default=35,
                         help="positional-table rows (default 35)")
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument("--no-figures", action="store_true",
                         help="skip rendering the training-curve figure")
    _add_selection_args(train_p)
    train_p.set_defaults(func=cmd_train)
    registry["train"] = train_p

    evaluate = subparsers.add_parser("evaluate", help="score summaries with ROUGE")
    evaluate.add_argument("--summaries", default=None, help="summary file from `summarize`")
    evaluate.add_argument("--references", default=None,
                          help="references: corpus JSON-lines or TSV (id, ref...)")
    evaluate.add_argument("--batch", default=None,
                          help="single-file mode: TSV of (id, candidate, refs...)")
    evaluate.add_argument("--output", default="rouge_report",
                          help="output prefix (default rouge_report)")
    evaluate.add_argument("--iterations", type=int, default=1000,
                          help="bootstrap resamples (default 1000)")
    evaluate.add_argument("--confidence", type=float, default=0.95,
                          help="bootstrap confidence level (default 0.95)")
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--no-figures", action="store_true",
                          help="skip rendering the score figure")
    evaluate.set_defaults(func=cmd_evaluate)
    registry["evaluate"] = evaluate

    adapt = subparsers.add_parser(
        "adapt-crosssum", help="aggregate paired single documents into MDS clusters"
    )
    adapt.add_argument("--documents", required=True, help="document metadata (JSON lines)")
    adapt.add_argument("--embeddings", required=True, help="embedding store (CEMB)")
    adapt.add_argument("--pairs", required=True, help="two-column TSV of document-id pairs")
    adapt.add_argument("--output-prefix", required=True)
    adapt.add_argument("--limit", type=int, default=100,
                       help="word limit for interleaved references (default 100)")
    adapt.add_argument("--train-langs", default="en,es,fr")
    adapt.add_argument("--zs-langs", default="pt,ru,tr")
    adapt.add_argument("--val-fraction", type=float, default=0.1)
    adapt.add_argument("--test-fraction", type=float, default=0.1)
    adapt.add_argument("--seed", type=int, default=0)
    adapt.set_defaults(func=cmd_adapt_crosssum)
    registry["adapt-crosssum"] = adapt

    gradcheck = subparsers.add_parser(
        "gradcheck", help="finite-difference check of the analytic gradients"
    )
    gradcheck.add_argument("--variant", choices=("cera", "cerai", "both"), default="both")
    gradcheck.add_argument("--instances", type=int, default=5)
    gradcheck.add_argument("--dim", type=int, default=16)
    gradcheck.add_argument("--eps", type=float, default=1e-4)
    gradcheck.add_argument("--threshold", type=float, default=1e-3)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--corrupt-gradients", action="store_true",
                           help=argparse.SUPPRESS)
    gradcheck.set_defaults(func=cmd_gradcheck)
    registry["gradcheck"] = gradcheck

    return parser, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    try:
        if config_path:
            cfg = load_config_file(config_path)
            for sub in registry.values():
                _apply_config_defaults(sub, cfg)
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
