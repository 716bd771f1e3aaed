from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from capfuse import analytics, quality
from capfuse.cli import main
from capfuse.corpus import load_manifest, shard_paths

from conftest import FIXTURES


@pytest.fixture
def cli():
    return CliRunner()


def invoke(cli, *args):
    result = cli.invoke(main, [str(a) for a in args])
    if result.exception and not isinstance(result.exception, SystemExit):
        raise result.exception
    return result


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def shard_bytes(out_dir) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in shard_paths(Path(out_dir) / "shards")}


# -- synth-manifest ------------------------------------------------------


def test_synth_manifest_is_deterministic(cli, tmp_path):
    a, b, c = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "c.jsonl"
    assert invoke(cli, "synth-manifest", "--out", a, "--clips", 20).exit_code == 0
    assert invoke(cli, "synth-manifest", "--out", b, "--clips", 20).exit_code == 0
    assert invoke(cli, "synth-manifest", "--out", c, "--clips", 20, "--seed", 9).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    records = load_manifest(a)
    assert len(records) == 20
    assert all(r.tags for r in records)
    # every ninth clip is audio-only unless --all-video
    assert records[8].media_video is None
    assert records[0].media_video is not None


def test_synth_manifest_all_video(cli, tmp_path):
    out = tmp_path / "m.jsonl"
    invoke(cli, "synth-manifest", "--out", out, "--clips", 18, "--all-video")
    assert all(r.media_video for r in load_manifest(out))


# -- run -----------------------------------------------------------------


def test_run_emits_summary_and_shards(cli, tmp_path):
    manifest = tmp_path / "m.jsonl"
    invoke(cli, "synth-manifest", "--out", manifest, "--clips", 10)
    out = tmp_path / "out"
    result = invoke(cli, "run", "--manifest", manifest, "--out", out)
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output.splitlines()[0])
    assert summary["ingested"] == 10
    assert summary["fused"] + summary["uncertain"] + summary["failed"] == 10
    assert shard_bytes(out)


def test_run_resume_reuses_cache_and_matches_bytes(cli, tmp_path):
    manifest = tmp_path / "m.jsonl"
    invoke(cli, "synth-manifest", "--out", manifest, "--clips", 8)
    out = tmp_path / "out"
    invoke(cli, "run", "--manifest", manifest, "--out", out)
    first = shard_bytes(out)
    cache_entries = set((out / "cache").iterdir())
    assert cache_entries

    resumed = invoke(cli, "run", "--manifest", manifest, "--out", out, "--resume")
    assert resumed.exit_code == 0
    assert shard_bytes(out) == first
    assert set((out / "cache").iterdir()) == cache_entries

    # without --resume the cache is rebuilt from scratch, same bytes
    fresh = invoke(cli, "run", "--manifest", manifest, "--out", out)
    assert fresh.exit_code == 0
    assert shard_bytes(out) == first


def test_run_limit_and_seed(cli, tmp_path):
    manifest = tmp_path / "m.jsonl"
    invoke(cli, "synth-manifest", "--out", manifest, "--clips", 10)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    r = invoke(cli, "run", "--manifest", manifest, "--out", out_a, "--limit", 4)
    assert json.loads(r.output.splitlines()[0])["ingested"] == 4
    invoke(cli, "run", "--manifest", manifest, "--out", out_b, "--limit", 4, "--seed", 3)
    assert shard_bytes(out_a) != shard_bytes(out_b)


def test_run_rejects_bad_manifest(cli, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"clip_id": "x"}\n')
    result = cli.invoke(main, ["run", "--manifest", str(bad), "--out", str(tmp_path / "o")])
    assert result.exit_code != 0
    assert "line 1" in result.output


# -- calibrate -----------------------------------------------------------


def split_calibration_fixture(tmp_path):
    rows = [json.loads(l) for l in (FIXTURES / "calibration_set.jsonl").read_text().splitlines()]
    scores = tmp_path / "scores.jsonl"
    labels = tmp_path / "labels.jsonl"
    write_jsonl(scores, [{"clip_id": r["clip_id"], "cosine": r["cosine"]} for r in rows])
    write_jsonl(labels, [{"clip_id": r["clip_id"], "label": r["label"]} for r in rows])
    return scores, labels


def test_calibrate_on_reference_set(cli, tmp_path):
    scores, labels = split_calibration_fixture(tmp_path)
    out = tmp_path / "report.json"
    result = invoke(cli, "calibrate", "--scores", scores, "--labels", labels, "--out", out)
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["chosen_threshold"] == 0.08
    assert report["exact_match_rate"] == pytest.approx(0.883, abs=5e-4)
    assert report["filter_rate"] == pytest.approx(0.073, abs=5e-4)
    assert "chosen threshold 0.080" in result.output


def test_calibrate_reduces_annotator_rows(cli, tmp_path):
    scores = tmp_path / "scores.jsonl"
    labels = tmp_path / "labels.jsonl"
    write_jsonl(scores, [{"clip_id": "c0", "cosine": 0.02}, {"clip_id": "c1", "cosine": 0.6}])
    # c0: scores 1 and 2 -> mean 1.5 -> discard; c1: 5 and 4 -> keep
    write_jsonl(
        labels,
        [
            {"clip_id": "c0", "score": 1},
            {"clip_id": "c0", "score": 2},
            {"clip_id": "c1", "score": 5},
            {"clip_id": "c1", "score": 4},
        ],
    )
    out = tmp_path / "r.json"
    result = invoke(cli, "calibrate", "--scores", scores, "--labels", labels, "--out", out)
    assert result.exit_code == 0
    expected = quality.calibrate([(0.02, 1), (0.6, 0)])
    assert json.loads(out.read_text())["chosen_threshold"] == expected.chosen_threshold


def test_calibrate_computes_scores_from_phrase_errors(cli, tmp_path):
    scores = tmp_path / "scores.jsonl"
    labels = tmp_path / "labels.jsonl"
    write_jsonl(scores, [{"clip_id": "c0", "cosine": 0.01}, {"clip_id": "c1", "cosine": 0.7}])
    write_jsonl(
        labels,
        [
            {"clip_id": "c0", "phrase_errors": [1, 1]},   # rate 100 -> score 1
            {"clip_id": "c0", "phrase_errors": [1, 0.5]},  # rate 75 -> score 1
            {"clip_id": "c1", "phrase_errors": []},        # clean -> score 5
            {"clip_id": "c1", "phrase_errors": [0]},       # rate 0 -> score 5
        ],
    )
    out = tmp_path / "r.json"
    assert invoke(cli, "calibrate", "--scores", scores, "--labels", labels, "--out", out).exit_code == 0
    expected = quality.calibrate([(0.01, 1), (0.7, 0)])
    assert json.loads(out.read_text())["chosen_threshold"] == expected.chosen_threshold


def test_calibrate_warns_on_degenerate_labels(cli, tmp_path):
    scores = tmp_path / "scores.jsonl"
    labels = tmp_path / "labels.jsonl"
    write_jsonl(scores, [{"clip_id": "c0", "cosine": 0.1}, {"clip_id": "c1", "cosine": 0.2}])
    write_jsonl(labels, [{"clip_id": "c0", "label": 0}, {"clip_id": "c1", "label": 0}])
    result = invoke(cli, "calibrate", "--scores", scores, "--labels", labels,
                    "--out", tmp_path / "r.json")
    assert result.exit_code == 0
    assert "all labels agree" in result.output


def test_calibrate_requires_overlap(cli, tmp_path):
    scores = tmp_path / "scores.jsonl"
    labels = tmp_path / "labels.jsonl"
    write_jsonl(scores, [{"clip_id": "c0", "cosine": 0.1}])
    write_jsonl(labels, [{"clip_id": "other", "label": 1}])
    result = cli.invoke(main, ["calibrate", "--scores", str(scores), "--labels", str(labels),
                               "--out", str(tmp_path / "r.json")])
    assert result.exit_code != 0
    assert "no clips" in result.output


# -- stats ---------------------------------------------------------------


def test_stats_with_llm_passes(cli, tmp_path):
    manifest = tmp_path / "m.jsonl"
    invoke(cli, "synth-manifest", "--out", manifest, "--clips", 8)
    out = tmp_path / "out"
    run_result = invoke(cli, "run", "--manifest", manifest, "--out", out)
    fused = json.loads(run_result.output.splitlines()[0])["fused"]

    stats_path = tmp_path / "stats.json"
    result = invoke(
        cli, "stats", "--shards", out / "shards", "--out", stats_path,
        "--with-modality", "--with-semantic",
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(stats_path.read_text())
    assert payload["captions"] == fused
    assert payload["kept"] + payload["filtered"] == fused
    assert payload["length"]["count"] == fused
    assert sum(payload["cosine_histogram"]["bin_counts"]) == fused
    assert set(payload["modality"]["counts"]) == set(analytics.MODALITY_KEYS)
    assert 0.0 <= payload["modality"]["multimodal_fraction"] <= 1.0
    assert set(payload["semantic"]["presence_fractions"]) == set(analytics.EXTRACTION_KEYS)


# -- distances -----------------------------------------------------------


def test_distances_output_and_report(cli, tmp_path):
    emb = tmp_path / "emb.jsonl"
    lab = tmp_path / "lab.jsonl"
    write_jsonl(
        emb,
        [
            {"clip_id": "a1", "embedding": [1.0, 0.0]},
            {"clip_id": "a2", "embedding": [0.9, 0.1]},
            {"clip_id": "b1", "embedding": [0.0, 1.0]},
        ],
    )
    write_jsonl(
        lab,
        [
            {"clip_id": "a1", "category": "amb"},
            {"clip_id": "a2", "category": "amb"},
            {"clip_id": "b1", "category": "spk"},
        ],
    )
    out = tmp_path / "d.json"
    result = invoke(cli, "distances", "--embeddings", emb, "--labels", lab, "--out", out)
    assert result.exit_code == 0, result.output
    assert "intra amb:" in result.output
    assert "n/a (singleton)" in result.output
    assert "inter amb / spk:" in result.output
    report = json.loads(out.read_text())
    direct = analytics.cluster_distances(
        {"a1": [1.0, 0.0], "a2": [0.9, 0.1], "b1": [0.0, 1.0]},
        {"a1": "amb", "a2": "amb", "b1": "spk"},
    )
    assert report["intra"]["amb"] == direct.intra["amb"]
    assert report["inter"]["amb"]["spk"] == direct.inter["amb"]["spk"]


def test_distances_rejects_unlabeled_ids(cli, tmp_path):
    emb = tmp_path / "emb.jsonl"
    lab = tmp_path / "lab.jsonl"
    write_jsonl(emb, [{"clip_id": "a", "embedding": [1.0]}])
    write_jsonl(lab, [])
    result = cli.invoke(main, ["distances", "--embeddings", str(emb), "--labels", str(lab)])
    assert result.exit_code != 0
    assert "missing labels" in result.output


# -- eval-retrieval ------------------------------------------------------


def test_eval_retrieval_known_answers(cli, tmp_path):
    queries = tmp_path / "q.jsonl"
    candidates = tmp_path / "c.jsonl"
    truth = tmp_path / "t.jsonl"
    write_jsonl(
        queries,
        [
            {"id": "q0", "embedding": [1.0, 0.0]},
            {"id": "q1", "embedding": [0.0, 1.0]},
        ],
    )
    write_jsonl(
        candidates,
        [
            {"id": "c0", "embedding": [1.0, 0.0]},
            {"id": "c1", "embedding": [0.7, 0.7]},
            {"id": "c2", "embedding": [0.0, 1.0]},
        ],
    )
    # q0's truth tops its ranking; q1's truth ranks second
    write_jsonl(truth, [
        {"query_id": "q0", "candidate_ids": ["c0"]},
        {"query_id": "q1", "candidate_ids": ["c1"]},
    ])
    result = invoke(cli, "eval-retrieval", "--queries", queries, "--candidates", candidates,
                    "--truth", truth, "--k", "1,2", "--out", tmp_path / "r.json")
    assert result.exit_code == 0, result.output
    assert "R@1: 50.00" in result.output
    assert "R@2: 100.00" in result.output
    assert "mean over listed k: 75.00" in result.output
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["recall"] == {"1": 50.0, "2": 100.0}
    assert report["mean_over_listed_k"] == 75.0


def test_eval_retrieval_rejects_unknown_candidate(cli, tmp_path):
    queries = tmp_path / "q.jsonl"
    candidates = tmp_path / "c.jsonl"
    truth = tmp_path / "t.jsonl"
    write_jsonl(queries, [{"id": "q0", "embedding": [1.0]}])
    write_jsonl(candidates, [{"id": "c0", "embedding": [1.0]}])
    write_jsonl(truth, [{"query_id": "q0", "candidate_ids": ["ghost"]}])
    result = cli.invoke(main, ["eval-retrieval", "--queries", str(queries),
                               "--candidates", str(candidates), "--truth", str(truth)])
    assert result.exit_code != 0
    assert "unknown candidates" in result.output


# -- serve ---------------------------------------------------------------


def test_serve_requires_two_annotators(cli, tmp_path):
    result = cli.invoke(main, ["serve", "--annotators", "solo",
                               "--labels", str(tmp_path / "l.jsonl")])
    assert result.exit_code != 0
    assert "at least two annotators" in result.output
