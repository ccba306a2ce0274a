"""End-to-end tests of the command-line surface on small on-disk fixtures."""

from __future__ import annotations

import json

import numpy as np
import pytest

from centrosum.cli import main
from centrosum.corpus import load_split, save_split, word_count, write_embeddings

from conftest import random_cluster


@pytest.fixture
def corpus(tmp_path, rng):
    clusters = [
        random_cluster(
            rng,
            n_docs=2,
            sentences_per_doc=(3, 4),
            d=6,
            cluster_id=f"c{i}",
            with_reference=True,
            bias=rng.normal(size=6),
        )
        for i in range(4)
    ]
    meta = tmp_path / "corpus.jsonl"
    store = tmp_path / "corpus.cemb"
    save_split(clusters, meta, store)
    return clusters, meta, store


def test_summarize_mean_pool(tmp_path, corpus):
    clusters, meta, store = corpus
    out = tmp_path / "summaries.tsv"
    code = main(
        [
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out),
            "--budget", "25",
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == len(clusters)
    for line in lines:
        cluster_id, indices, text, score = line.split("\t")
        assert word_count(text) <= 25
        parsed = [int(i) for i in indices.split(",")]
        assert parsed == sorted(parsed)
        float(score)


def test_summarize_budget_from_dataset_tag(tmp_path, corpus):
    _, meta, store = corpus
    out = tmp_path / "summaries.tsv"
    code = main(
        [
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out),
            "--dataset", "wcep10",
        ]
    )
    assert code == 0
    for line in out.read_text().splitlines():
        assert word_count(line.split("\t")[2]) <= 50


def test_summarize_requires_budget_or_dataset(tmp_path, corpus):
    _, meta, store = corpus
    code = main(
        [
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(tmp_path / "x.tsv"),
        ]
    )
    assert code == 2


def test_summarize_missing_checkpoint_is_validation_error(tmp_path, corpus):
    _, meta, store = corpus
    code = main(
        [
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(tmp_path / "x.tsv"),
            "--budget", "25",
            "--source", "cera",
        ]
    )
    assert code == 2


def test_summarize_jobs_parallel_matches_serial(tmp_path, corpus):
    _, meta, store = corpus
    serial = tmp_path / "serial.tsv"
    parallel = tmp_path / "parallel.tsv"
    base = [
        "summarize",
        "--corpus", str(meta),
        "--embeddings", str(store),
        "--budget", "25",
    ]
    assert main(base + ["--output", str(serial)]) == 0
    assert main(base + ["--output", str(parallel), "--jobs", "3"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_summarize_trace_sidecar(tmp_path, corpus):
    _, meta, store = corpus
    out = tmp_path / "summaries.tsv"
    trace = tmp_path / "trace.jsonl"
    code = main(
        [
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out),
            "--budget", "25",
            "--trace", str(trace),
        ]
    )
    assert code == 0
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(records) == 4
    assert all(record["events"] for record in records)
    stages = {event["stage"] for record in records for event in record["events"]}
    assert "preselect" in stages and "result" in stages


def test_oracle_selects_reference_sentence(tmp_path, rng):
    # one cluster whose reference equals one source sentence; budget fits only it
    from centrosum.corpus import Cluster, ReferenceSummary, Sentence, SummarySentence

    d = 5
    vectors = [rng.normal(size=d) for _ in range(3)]
    vectors = [v / np.linalg.norm(v) for v in vectors]
    sentences = [
        Sentence(0, 0, "alpha beta gamma", vectors[0]),
        Sentence(0, 1, "delta epsilon zeta", vectors[1]),
        Sentence(0, 2, "eta theta iota", vectors[2]),
    ]
    cluster = Cluster(
        id="pin",
        documents=[sentences],
        references=[
            ReferenceSummary([SummarySentence("delta epsilon zeta", vectors[1].copy())])
        ],
    )
    meta, store = tmp_path / "m.jsonl", tmp_path / "s.cemb"
    save_split([cluster], meta, store)
    out = tmp_path / "out.tsv"
    code = main(
        [
            "oracle",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out),
            "--budget", "3",
        ]
    )
    assert code == 0
    cluster_id, indices, text, score = out.read_text().strip().split("\t")
    assert text == "delta epsilon zeta"
    assert float(score) == pytest.approx(1.0, abs=1e-9)


def test_evaluate_identical_files_score_one(tmp_path):
    summaries = tmp_path / "summaries.tsv"
    summaries.write_text(
        "c0\t0\tthe quick brown fox\t0.5\nc1\t1\tlazy dogs sleep\t0.5\n",
        encoding="utf-8",
    )
    refs = tmp_path / "refs.tsv"
    refs.write_text(
        "c0\tthe quick brown fox\nc1\tlazy dogs sleep\n", encoding="utf-8"
    )
    prefix = tmp_path / "report"
    code = main(
        [
            "evaluate",
            "--summaries", str(summaries),
            "--references", str(refs),
            "--output", str(prefix),
        ]
    )
    assert code == 0
    aggregate = (tmp_path / "report.aggregate.tsv").read_text().splitlines()
    for line in aggregate[1:]:
        fields = line.split("\t")
        assert float(fields[1]) == pytest.approx(1.0)
    assert (tmp_path / "report.per_cluster.tsv").exists()
    assert (tmp_path / "report.png").exists()


def test_evaluate_empty_candidate_scores_zero(tmp_path):
    batch = tmp_path / "batch.tsv"
    batch.write_text("c0\t\tsome reference text\n", encoding="utf-8")
    prefix = tmp_path / "report"
    code = main(
        ["evaluate", "--batch", str(batch), "--output", str(prefix), "--no-figures"]
    )
    assert code == 0
    per_cluster = (tmp_path / "report.per_cluster.tsv").read_text().splitlines()
    values = [float(x) for x in per_cluster[1].split("\t")[1:]]
    assert all(v == 0.0 for v in values)


def test_evaluate_id_mismatch_is_data_error(tmp_path):
    summaries = tmp_path / "summaries.tsv"
    summaries.write_text("c9\t0\ttext here\t0.5\n", encoding="utf-8")
    refs = tmp_path / "refs.tsv"
    refs.write_text("c0\treference text\n", encoding="utf-8")
    code = main(
        [
            "evaluate",
            "--summaries", str(summaries),
            "--references", str(refs),
            "--output", str(tmp_path / "r"),
        ]
    )
    assert code == 3


def test_evaluate_references_from_corpus_jsonl(tmp_path, corpus):
    clusters, meta, store = corpus
    out = tmp_path / "summaries.tsv"
    assert main(
        [
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out),
            "--budget", "25",
        ]
    ) == 0
    code = main(
        [
            "evaluate",
            "--summaries", str(out),
            "--references", str(meta),
            "--output", str(tmp_path / "rep"),
            "--no-figures",
        ]
    )
    assert code == 0


def test_train_and_summarize_with_checkpoint(tmp_path, rng):
    clusters = [
        random_cluster(
            rng, n_docs=2, sentences_per_doc=(2, 3), d=6,
            cluster_id=f"t{i}", with_reference=True, bias=rng.normal(size=6),
        )
        for i in range(6)
    ]
    train_meta, train_store = tmp_path / "train.jsonl", tmp_path / "train.cemb"
    val_meta, val_store = tmp_path / "val.jsonl", tmp_path / "val.cemb"
    save_split(clusters[:4], train_meta, train_store)
    save_split(clusters[4:], val_meta, val_store)
    ckpt = tmp_path / "model.ckpt"
    code = main(
        [
            "train",
            "--train-corpus", str(train_meta),
            "--train-embeddings", str(train_store),
            "--val-corpus", str(val_meta),
            "--val-embeddings", str(val_store),
            "--output", str(ckpt),
            "--max-epochs", "2",
            "--patience", "2",
            "--val-metric", "cosine-loss",
            "--budget", "30",
        ]
    )
    assert code == 0
    assert ckpt.exists()
    history = tmp_path / "model.ckpt.history.tsv"
    assert history.exists()
    assert (tmp_path / "model.ckpt.history.tsv.png").exists()
    out = tmp_path / "cera_summaries.tsv"
    code = main(
        [
            "summarize",
            "--corpus", str(val_meta),
            "--embeddings", str(val_store),
            "--output", str(out),
            "--budget", "30",
            "--source", "cera",
            "--checkpoint", str(ckpt),
        ]
    )
    assert code == 0
    assert len(out.read_text().splitlines()) == 2


def test_train_determinism_bitwise(tmp_path, rng):
    clusters = [
        random_cluster(
            rng, n_docs=2, sentences_per_doc=(2, 2), d=5,
            cluster_id=f"t{i}", with_reference=True,
        )
        for i in range(4)
    ]
    train_meta, train_store = tmp_path / "train.jsonl", tmp_path / "train.cemb"
    save_split(clusters[:3], train_meta, train_store)
    val_meta, val_store = tmp_path / "val.jsonl", tmp_path / "val.cemb"
    save_split(clusters[3:], val_meta, val_store)

    def run(tag: str) -> tuple[bytes, bytes]:
        ckpt = tmp_path / f"{tag}.ckpt"
        history = tmp_path / f"{tag}.history.tsv"
        code = main(
            [
                "train",
                "--train-corpus", str(train_meta),
                "--train-embeddings", str(train_store),
                "--val-corpus", str(val_meta),
                "--val-embeddings", str(val_store),
                "--output", str(ckpt),
                "--history", str(history),
                "--max-epochs", "3",
                "--patience", "3",
                "--val-metric", "cosine-loss",
                "--seed", "11",
                "--budget", "40",
                "--no-figures",
            ]
        )
        assert code == 0
        return ckpt.read_bytes(), history.read_bytes()

    assert run("a") == run("b")


def test_adapt_crosssum_pipeline(tmp_path, rng):
    d = 4
    documents = []
    langs = {"a": "en", "b": "en", "c": "es", "d": "pt", "e": "ru", "f": "en"}
    for doc_id, lang in langs.items():
        documents.append(
            {
                "id": doc_id,
                "lang": lang,
                "sentences": [
                    {"text": f"{doc_id} body {i} words here", "emb_row": None}
                    for i in range(2)
                ],
                "summary": [{"text": f"{doc_id} summary sentence", "emb_row": None}],
            }
        )
    rows = []
    for doc in documents:
        for sentence in doc["sentences"] + doc["summary"]:
            sentence["emb_row"] = len(rows)
            vec = rng.normal(size=d)
            rows.append(vec / np.linalg.norm(vec))
    docs_path = tmp_path / "docs.jsonl"
    docs_path.write_text(
        "\n".join(json.dumps(doc) for doc in documents) + "\n", encoding="utf-8"
    )
    store_path = tmp_path / "docs.cemb"
    write_embeddings(store_path, np.asarray(rows, dtype=np.float32))
    pairs_path = tmp_path / "pairs.tsv"
    pairs_path.write_text("a\tb\nb\tc\nd\te\n", encoding="utf-8")
    prefix = tmp_path / "mds"
    code = main(
        [
            "adapt-crosssum",
            "--documents", str(docs_path),
            "--embeddings", str(store_path),
            "--pairs", str(pairs_path),
            "--output-prefix", str(prefix),
            "--val-fraction", "0",
            "--test-fraction", "0",
        ]
    )
    assert code == 0
    train_clusters = load_split(f"{prefix}.train.jsonl", f"{prefix}.train.cemb")
    assert len(train_clusters) == 1
    assert len(train_clusters[0].documents) == 3  # a, b, c via transitivity
    assert train_clusters[0].references
    zs_clusters = load_split(f"{prefix}.zs.jsonl", f"{prefix}.zs.cemb")
    assert len(zs_clusters) == 1
    assert len(zs_clusters[0].documents) == 2  # d, e


def test_adapt_crosssum_dangling_pair_id(tmp_path, rng):
    docs_path = tmp_path / "docs.jsonl"
    docs_path.write_text(
        json.dumps(
            {
                "id": "a",
                "lang": "en",
                "sentences": [{"text": "a body", "emb_row": 0}],
                "summary": [{"text": "a summary", "emb_row": 1}],
            }
        )
        + "\n",
        encoding="utf-8",
    )
    store_path = tmp_path / "docs.cemb"
    write_embeddings(store_path, rng.normal(size=(2, 4)).astype(np.float32))
    pairs_path = tmp_path / "pairs.tsv"
    pairs_path.write_text("a\tmissing\n", encoding="utf-8")
    code = main(
        [
            "adapt-crosssum",
            "--documents", str(docs_path),
            "--embeddings", str(store_path),
            "--pairs", str(pairs_path),
            "--output-prefix", str(tmp_path / "x"),
        ]
    )
    assert code == 3


def test_gradcheck_passes_and_negative_control(capsys):
    code = main(["gradcheck", "--variant", "cera", "--instances", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    code = main(
        ["gradcheck", "--variant", "cera", "--instances", "1", "--corrupt-gradients"]
    )
    assert code == 4


def test_config_file_provides_defaults_and_flags_win(tmp_path, corpus):
    _, meta, store = corpus
    config = tmp_path / "run.conf"
    config.write_text("budget = 25\npreselect = 2\n", encoding="utf-8")
    out = tmp_path / "from_config.tsv"
    code = main(
        [
            "--config", str(config),
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out),
        ]
    )
    assert code == 0
    config_lengths = [
        word_count(line.split("\t")[2]) for line in out.read_text().splitlines()
    ]
    assert all(length <= 25 for length in config_lengths)
    assert any(length > 14 for length in config_lengths)
    # explicit flag beats the config value
    out2 = tmp_path / "flag_wins.tsv"
    code = main(
        [
            "--config", str(config),
            "summarize",
            "--corpus", str(meta),
            "--embeddings", str(store),
            "--output", str(out2),
            "--budget", "14",
        ]
    )
    assert code == 0
    for line in out2.read_text().splitlines():
        assert word_count(line.split("\t")[2]) <= 14


def test_dataset_budget_defaults():
    from centrosum.cli import DATASET_BUDGETS

    assert DATASET_BUDGETS["multinews"] == 230
    assert DATASET_BUDGETS["tac2008"] == 100
    assert DATASET_BUDGETS["duc2004"] == 100
    assert DATASET_BUDGETS["crosssum"] == 100
    assert DATASET_BUDGETS["wcep10"] == 50


def test_tuned_configuration_defaults():
    from centrosum.cera import DEFAULT_NUM_POSITIONS, TrainConfig
    from centrosum.selection import SelectionConfig

    selection = SelectionConfig()
    assert (selection.n, selection.beam_size, selection.window) == (9, 5, 9)
    config = TrainConfig()
    assert config.learning_rate == 5e-4
    assert config.batch_size == 2
    assert (config.scheduler_step, config.scheduler_gamma) == (3, 0.1)
    assert DEFAULT_NUM_POSITIONS == 35


def test_bootstrap_defaults_match_reporting_protocol():
    import inspect

    from centrosum.rouge import bootstrap_ci

    signature = inspect.signature(bootstrap_ci)
    assert signature.parameters["iterations"].default == 1000
    assert signature.parameters["confidence"].default == 0.95
