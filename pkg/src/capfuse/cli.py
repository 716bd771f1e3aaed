"""Command-line surface for pipeline runs, calibration, stats and serving."""

from __future__ import annotations

import dataclasses
import json
import shutil
import sys
from pathlib import Path

import click

from . import analytics, quality, retrieval
from .config import RunConfig, load_config, mock_config
from .corpus import load_manifest, read_shards, render_tag_line, write_manifest, ClipRecord, Tag
from .errors import CapfuseError
from .pipeline import PipelineRunner


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise click.ClickException(f"{path} line {lineno}: invalid JSON: {exc}") from exc
    return rows


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@click.group()
def main() -> None:
    """Audio caption dataset tooling: run, calibrate, analyze, serve."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Run config JSON; defaults to all-mock backends.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--resume", is_flag=True, help="Reuse cached stage results in OUT; without this flag OUT starts fresh.")
@click.option("--limit", type=int, default=None, help="Process only the first N manifest entries.")
@click.option("--seed", type=int, default=None, help="Override the config seed (drives mock backends).")
def run(manifest: str, config_path: str | None, out_dir: str, resume: bool, limit: int | None, seed: int | None):
    """Run the two-stage captioning pipeline over a manifest."""
    try:
        config = load_config(config_path) if config_path else mock_config()
        if seed is not None:
            config = dataclasses.replace(config, seed=seed)
        records = load_manifest(manifest)
    except (CapfuseError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    out = Path(out_dir)
    if not resume:
        for sub in ("cache", "shards"):
            shutil.rmtree(out / sub, ignore_errors=True)
    runner = PipelineRunner(config)
    result = runner.run(records, out, limit=limit)
    click.echo(json.dumps(result.summary.to_dict(), sort_keys=True))
    click.echo(f"shards: {len(result.shard_files)} file(s) under {out / 'shards'}", err=True)


def _discard_labels(rows: list[dict]) -> dict[str, int]:
    """Per-clip discard labels from label rows.

    Rows carrying an explicit 0/1 "label" win; otherwise annotator rows are
    reduced per clip by averaging rubric scores and binarizing (mean <= 2
    means the caption should be discarded).
    """
    explicit: dict[str, int] = {}
    scored: dict[str, list[float]] = {}
    for row in rows:
        clip_id = row["clip_id"]
        if "label" in row:
            explicit[clip_id] = int(row["label"])
            continue
        if "score" in row:
            score = int(row["score"])
        else:
            errors = row.get("phrase_errors", [])
            rate = quality.hallucination_rate(errors) if errors else 0
            score = quality.bucket_score(rate)
        scored.setdefault(clip_id, []).append(score)
    labels = {cid: (1 if sum(s) / len(s) <= 2 else 0) for cid, s in scored.items()}
    labels.update(explicit)
    return labels


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {clip_id, cosine}.")
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of annotator rows or explicit {clip_id, label}.")
@click.option("--step", type=float, default=0.005, show_default=True)
@click.option("--lo", type=float, default=-0.2, show_default=True)
@click.option("--hi", type=float, default=1.0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def calibrate(scores_path: str, labels_path: str, step: float, lo: float, hi: float, out_path: str):
    """Sweep discard thresholds against labeled similarity scores."""
    cosines = {row["clip_id"]: float(row["cosine"]) for row in _read_jsonl(scores_path)}
    labels = _discard_labels(_read_jsonl(labels_path))
    samples = [(cosines[cid], labels[cid]) for cid in sorted(cosines) if cid in labels]
    if not samples:
        raise click.ClickException("no clips present in both scores and labels")
    try:
        report = quality.calibrate(samples, step=step, lo=lo, hi=hi)
    except (ValueError, CapfuseError) as exc:
        raise click.ClickException(str(exc)) from exc
    _write_json(out_path, report.to_dict())
    click.echo(report.render_table())
    if report.degenerate:
        click.echo("warning: all labels agree; precision or recall is undefined", err=True)


@main.command()
@click.option("--shards", "shards_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--with-modality", is_flag=True, help="Ask the synthesizer which modalities each caption used.")
@click.option("--with-semantic", is_flag=True, help="Ask the synthesizer to extract grounded semantic terms.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Backend config; required for the modality/semantic passes (mock by default).")
def stats(shards_dir: str, out_path: str, with_modality: bool, with_semantic: bool, config_path: str | None):
    """Summarize a shard directory: lengths, score histogram, optional LLM passes."""
    records = list(read_shards(shards_dir))
    kept = [r for r in records if r.kept]
    payload: dict = {
        "captions": len(records),
        "kept": len(kept),
        "filtered": len(records) - len(kept),
        "length": analytics.length_stats([r.caption for r in records]).to_dict(),
        "cosine_histogram": analytics.score_histogram([r.cosine for r in records]),
    }
    if with_modality or with_semantic:
        config = load_config(config_path) if config_path else mock_config()
        runner = PipelineRunner(config)
        synthesizer = runner.clients["synthesizer"]
        prompts = runner.prompts
        if with_modality:
            usages = []
            for r in records:
                cap_str = json.dumps(
                    {
                        "audio_caption": r.cue_bundle.get("audio_caption", ""),
                        "speech_caption": r.cue_bundle.get("speech_transcript", ""),
                        "music_caption": r.cue_bundle.get("music_caption", ""),
                        "video_caption": r.cue_bundle.get("video_caption", ""),
                        "final_cap": r.caption,
                    },
                    ensure_ascii=False,
                )
                reply = synthesizer.generate_text(r.clip_id, prompts.modality_check.format(cap_str=cap_str))
                usages.append(analytics.parse_modality_reply(reply))
            payload["modality"] = {
                "counts": analytics.modality_usage_counts(usages),
                "multimodal_fraction": analytics.multimodality_fraction(usages),
            }
        if with_semantic:
            extractions = []
            dropped = 0
            for r in records:
                reply = synthesizer.generate_text(
                    r.clip_id, prompts.object_extraction.format(caption=r.caption)
                )
                extraction = analytics.validate_semantic_extraction(reply, r.caption)
                dropped += len(extraction.dropped)
                extractions.append(extraction)
            payload["semantic"] = {
                "presence_fractions": analytics.extraction_presence_fractions(extractions),
                "dropped_terms": dropped,
            }
    _write_json(out_path, payload)
    click.echo(json.dumps({k: v for k, v in payload.items() if not isinstance(v, dict)}, sort_keys=True))


@main.command()
@click.option("--embeddings", "embeddings_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {clip_id, embedding}.")
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {clip_id, category}.")
@click.option("--mode", type=click.Choice(["pairwise", "centroid"]), default="pairwise", show_default=True)
@click.option("--cap", type=int, default=5000, show_default=True, help="Subsample cap per category.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def distances(embeddings_path: str, labels_path: str, mode: str, cap: int, seed: int, out_path: str | None):
    """Mean cosine distances within and between labeled embedding clusters."""
    embeddings = {row["clip_id"]: row["embedding"] for row in _read_jsonl(embeddings_path)}
    labels = {row["clip_id"]: row["category"] for row in _read_jsonl(labels_path)}
    try:
        report = analytics.cluster_distances(embeddings, labels, mode=mode, cap=cap, seed=seed)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    if out_path:
        _write_json(out_path, report.to_dict())
    for cat in report.categories:
        intra = report.intra[cat]
        shown = "n/a (singleton)" if intra is None else f"{intra:.4f}"
        click.echo(f"intra {cat}: {shown}  (n={report.sizes[cat]})")
    for i, a in enumerate(report.categories):
        for b in report.categories[i + 1 :]:
            click.echo(f"inter {a} / {b}: {report.inter[a][b]:.4f}")


@main.command("eval-retrieval")
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "candidates_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {query_id, candidate_ids}.")
@click.option("--k", "ks", default="1,5,10", show_default=True, help="Comma-separated k values.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def eval_retrieval(queries_path: str, candidates_path: str, truth_path: str, ks: str, out_path: str | None):
    """Recall@k for query embeddings against candidate embeddings."""
    import numpy as np

    queries = _read_jsonl(queries_path)
    candidates = _read_jsonl(candidates_path)
    cand_index = {row["id"]: i for i, row in enumerate(candidates)}
    truth_by_query = {row["query_id"]: row["candidate_ids"] for row in _read_jsonl(truth_path)}
    truth = []
    for row in queries:
        ids = truth_by_query.get(row["id"], [])
        unknown = [c for c in ids if c not in cand_index]
        if unknown:
            raise click.ClickException(f"query {row['id']}: unknown candidates {unknown[:3]}")
        truth.append([cand_index[c] for c in ids])
    try:
        k_list = [int(k) for k in ks.split(",") if k.strip()]
        sim = retrieval.similarity_matrix(
            np.array([row["embedding"] for row in queries], dtype=np.float64),
            np.array([row["embedding"] for row in candidates], dtype=np.float64),
        )
        recalls = retrieval.recall_at_k(sim, truth, k_list)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    for k in k_list:
        click.echo(f"R@{k}: {recalls[k]:.2f}")
    click.echo(f"mean over listed k: {retrieval.mean_recall(recalls):.2f}")
    if out_path:
        _write_json(out_path, {"recall": {str(k): recalls[k] for k in k_list},
                               "mean_over_listed_k": retrieval.mean_recall(recalls)})


@main.command()
@click.option("--tasks", "tasks_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--labels", "labels_path", type=click.Path(dir_okay=False), default="labels.jsonl",
              show_default=True, help="Label log; appended to and replayed on restart.")
@click.option("--annotators", default="a1,a2", show_default=True, help="Comma-separated annotator ids.")
@click.option("--shards", "shards_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Preload clips from a shard directory.")
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
def serve(tasks_path, labels_path, annotators, shards_dir, ui_dir, host, port):
    """Serve the annotation and pipeline HTTP API."""
    import uvicorn

    from .service import LabelStore, ServiceState, create_app

    names = [a.strip() for a in annotators.split(",") if a.strip()]
    if len(names) < 2:
        raise click.ClickException("need at least two annotators")
    state = ServiceState(annotators=names, label_store=LabelStore(labels_path))
    if tasks_path:
        count = state.load_tasks(tasks_path)
        click.echo(f"loaded {count} tasks", err=True)
    if shards_dir:
        count = state.load_shards(shards_dir)
        click.echo(f"loaded {count} clips", err=True)
    uvicorn.run(create_app(state, ui_dir=ui_dir), host=host, port=port)


@main.command("synth-manifest")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--clips", "n_clips", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--all-video", is_flag=True, help="Give every clip a video reference.")
def synth_manifest(out_path: str, n_clips: int, seed: int, all_video: bool):
    """Generate a deterministic manifest for desk-scale mock runs."""
    import random

    rng = random.Random(seed)
    label_bank = ["Speech", "Music", "Rain", "Engine", "Crowd", "Birdsong", "Footsteps", "Wind"]
    records = []
    for i in range(n_clips):
        clip_id = f"clip-{i:04d}"
        tags = [
            Tag(label=label, confidence_pct=rng.choice([100, 90, 80, 70, 60, 50, 37.5]))
            for label in rng.sample(label_bank, k=rng.randint(1, 3))
        ]
        has_video = all_video or i % 9 != 8
        records.append(
            ClipRecord(
                clip_id=clip_id,
                media_audio=f"audio/{clip_id}.wav",
                media_video=f"video/{clip_id}.mp4" if has_video else None,
                duration_s=10.0,
                tags=tags,
            )
        )
    write_manifest(records, out_path)
    click.echo(f"wrote {n_clips} clips to {out_path}")


if __name__ == "__main__":
    sys.exit(main())
