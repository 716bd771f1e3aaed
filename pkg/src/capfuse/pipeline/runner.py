"""Two-stage captioning pipeline: cue extraction, fusion, scoring, filter.

Per clip: separate vocals, then in parallel transcribe speech (vocal stem),
caption the raw audio, gate on music and caption the accompaniment when it
passes, caption the video when one exists.  The cues feed one synthesizer
call; non-uncertain captions are embedded alongside the clip audio and the
cosine between the two decides the keep/filter flag.

Every backend-producing stage is content-addressed in a StageCache, so
re-running over the same output directory repeats no completed backend
call; a changed prompt or model invalidates exactly the stages downstream
of it.  Shards are rewritten from scratch in manifest order each run,
which makes repeated runs byte-identical.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..backends import BackendClient, MockTransport
from ..config import RunConfig, build_clients
from ..corpus import ClipRecord, CueBundle, ShardRecord, ShardWriter, StageCache
from ..errors import BackendError, CapfuseError, StageFailure
from ..prompts import PromptSet, render_integration_prompt
from .parse import parse_fusion_output
from .stages import FingerprintChain, StageIdentity

log = logging.getLogger(__name__)

STATUS_FUSED = "fused"
STATUS_UNCERTAIN = "uncertain"
STATUS_FAILED = "failed"


def _dump(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass
class ClipOutcome:
    clip_id: str
    status: str
    caption: str = ""
    ambiguities: list[str] = field(default_factory=list)
    cosine: float | None = None
    cue_bundle: dict = field(default_factory=dict)
    failed_stage: str | None = None
    error: str | None = None


@dataclass(frozen=True)
class RunSummary:
    ingested: int
    fused: int
    uncertain: int
    failed: int
    kept: int
    filtered: int
    filter_rate: float

    def to_dict(self) -> dict:
        return {
            "ingested": self.ingested,
            "fused": self.fused,
            "uncertain": self.uncertain,
            "failed": self.failed,
            "kept": self.kept,
            "filtered": self.filtered,
            "filter_rate": self.filter_rate,
        }


@dataclass
class RunResult:
    summary: RunSummary
    outcomes: dict[str, ClipOutcome]
    shard_files: list[Path]
    out_dir: Path


def cosine_of(a: list[float], b: list[float]) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm embedding")
    return float(va @ vb / (na * nb))


class PipelineRunner:
    def __init__(
        self,
        config: RunConfig,
        clients: dict[str, BackendClient] | None = None,
        transport: MockTransport | None = None,
        clock=time.monotonic,
    ) -> None:
        self.config = config
        if clients is None:
            clients, transport = build_clients(config)
        self.clients = clients
        self.transport = transport
        self.prompts: PromptSet = config.prompts()
        self._clock = clock
        self.cache: StageCache | None = None

    def handshake(self) -> StageIdentity:
        """Resolve model identities once per run; they anchor every fingerprint."""
        model_ids = {role: client.meta()["model_id"] for role, client in self.clients.items()}
        prompt_hashes = {
            name: self.prompts.hash_of(name)
            for name in ("asr", "audio_caption", "music_caption", "video_caption", "integration")
        }
        return StageIdentity(
            model_ids=model_ids,
            prompt_hashes=prompt_hashes,
            music_gate_threshold=self.config.music_gate_threshold,
            similarity_threshold=self.config.similarity_threshold,
        )

    # -- per-clip execution ----------------------------------------------

    def _cached(self, clip: ClipRecord, chain: FingerprintChain, stage: str, deadline: float, producer):
        fp = chain.of(stage)
        hit = self.cache.get(clip.clip_id, stage, fp)
        if hit is not None:
            return json.loads(hit.decode("utf-8"))
        if self._clock() > deadline:
            raise StageFailure(stage, TimeoutError("clip deadline exceeded"))
        try:
            value = producer()
        except BackendError as exc:
            raise StageFailure(stage, exc) from exc
        self.cache.put(clip.clip_id, stage, _dump(value), fp)
        return value

    def _run_clip(self, clip: ClipRecord, identity: StageIdentity) -> ClipOutcome:
        chain = FingerprintChain(identity, clip)
        deadline = self._clock() + self.config.clip_deadline_s
        cid = clip.clip_id

        def audio_cap() -> str:
            payload = self._cached(
                clip, chain, "audio_cap", deadline,
                lambda: {"text": self.clients["audio_captioner"].generate_text(
                    cid, self.prompts.audio_caption, media=clip.media_audio)},
            )
            return payload["text"]

        def video_cap() -> str:
            if clip.media_video is None:
                return ""
            payload = self._cached(
                clip, chain, "video_cap", deadline,
                lambda: {"text": self.clients["video_captioner"].generate_text(
                    cid, self.prompts.video_caption, media=clip.media_video)},
            )
            return payload["text"]

        def separate() -> dict:
            def produce():
                vocal, accomp = self.clients["separator"].separate(cid, clip.media_audio)
                return {"vocal": vocal, "accompaniment": accomp}

            return self._cached(clip, chain, "separate", deadline, produce)

        def asr(vocal: str) -> str:
            payload = self._cached(
                clip, chain, "asr", deadline,
                lambda: {"text": self.clients["asr"].generate_text(cid, self.prompts.asr, media=vocal)},
            )
            return payload["text"]

        def music_chain(accomp: str) -> str:
            gate = self._cached(
                clip, chain, "music_gate", deadline,
                lambda: (lambda g: {"score": g.score, "passed": g.passed})(
                    self.clients["music_gate"].classify_music(
                        cid, accomp, self.config.music_gate_threshold)
                ),
            )
            if not gate["passed"]:
                return ""
            payload = self._cached(
                clip, chain, "music_cap", deadline,
                lambda: {"text": self.clients["music_captioner"].generate_text(
                    cid, self.prompts.music_caption, media=accomp)},
            )
            return payload["text"]

        # Audio and video captioning need nothing from separation, so they
        # start immediately; ASR and the music chain wait on the stems.
        with ThreadPoolExecutor(max_workers=4, thread_name_prefix=f"cue-{cid}") as pool:
            fut_audio = pool.submit(audio_cap)
            fut_video = pool.submit(video_cap)
            stems = separate()
            fut_asr = pool.submit(asr, stems["vocal"])
            fut_music = pool.submit(music_chain, stems["accompaniment"])
            bundle = CueBundle(
                clip_id=cid,
                audio_caption=fut_audio.result(),
                speech_transcript=fut_asr.result(),
                music_caption=fut_music.result(),
                video_caption=fut_video.result(),
                tag_line=clip.tag_line(),
            )

        if not bundle.has_any_cue():
            raise StageFailure("fuse", ValueError("no cues extracted"))

        fuse_prompt = render_integration_prompt(
            self.prompts.integration,
            tag_line=bundle.tag_line,
            audio_caption=bundle.audio_caption,
            speech_transcript=bundle.speech_transcript,
            music_caption=bundle.music_caption,
            video_caption=bundle.video_caption,
        )
        fused_raw = self._cached(
            clip, chain, "fuse", deadline,
            lambda: {"raw": self.clients["synthesizer"].generate_text(cid, fuse_prompt)},
        )["raw"]
        try:
            fused = parse_fusion_output(cid, fused_raw)
        except CapfuseError as exc:
            raise StageFailure("fuse", exc) from exc

        if fused.uncertain:
            return ClipOutcome(clip_id=cid, status=STATUS_UNCERTAIN, cue_bundle=bundle.to_dict())

        def score() -> dict:
            text_vec = self.clients["embedder"].embed(cid, "text", fused.caption)
            audio_vec = self.clients["embedder"].embed(cid, "audio", clip.media_audio)
            return {"cosine": cosine_of(text_vec, audio_vec)}

        cosine = self._cached(clip, chain, "embed_score", deadline, score)["cosine"]
        return ClipOutcome(
            clip_id=cid,
            status=STATUS_FUSED,
            caption=fused.caption,
            ambiguities=list(fused.ambiguities),
            cosine=cosine,
            cue_bundle=bundle.to_dict(),
        )

    def _run_clip_safe(self, clip: ClipRecord, identity: StageIdentity) -> ClipOutcome:
        try:
            return self._run_clip(clip, identity)
        except StageFailure as exc:
            log.warning("clip %s failed at %s: %s", clip.clip_id, exc.stage, exc.cause)
            return ClipOutcome(
                clip_id=clip.clip_id, status=STATUS_FAILED, failed_stage=exc.stage, error=str(exc.cause)
            )
        except Exception as exc:
            log.warning("clip %s failed: %s", clip.clip_id, exc)
            return ClipOutcome(
                clip_id=clip.clip_id, status=STATUS_FAILED, failed_stage="unknown", error=str(exc)
            )

    # -- whole-run orchestration -----------------------------------------

    def run(self, records: list[ClipRecord], out_dir: str | Path, limit: int | None = None) -> RunResult:
        if limit is not None:
            records = records[:limit]
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if self.cache is None:
            self.cache = StageCache(out / "cache")
        identity = self.handshake()

        outcomes: dict[str, ClipOutcome] = {}
        with ThreadPoolExecutor(max_workers=self.config.workers, thread_name_prefix="clip") as pool:
            futures = {pool.submit(self._run_clip_safe, clip, identity): clip for clip in records}
            for fut in as_completed(futures):
                outcome = fut.result()
                outcomes[outcome.clip_id] = outcome

        tau = self.config.similarity_threshold
        shard_dir = out / "shards"
        shard_dir.mkdir(exist_ok=True)
        for stale in shard_dir.glob("shard-*.jsonl"):
            stale.unlink()
        kept = 0
        with ShardWriter(shard_dir, self.config.records_per_shard) as writer:
            for clip in records:
                outcome = outcomes[clip.clip_id]
                if outcome.status != STATUS_FUSED:
                    continue
                keep = outcome.cosine >= tau
                kept += keep
                writer.append(
                    ShardRecord(
                        clip_id=clip.clip_id,
                        caption=outcome.caption,
                        ambiguities=outcome.ambiguities,
                        cosine=outcome.cosine,
                        kept=keep,
                        cue_bundle=outcome.cue_bundle,
                    )
                )
        shard_files = writer.close()

        with (out / "failures.jsonl").open("w", encoding="utf-8") as fh:
            for clip in records:
                outcome = outcomes[clip.clip_id]
                if outcome.status == STATUS_FAILED:
                    fh.write(
                        _dump(
                            {"clip_id": clip.clip_id, "stage": outcome.failed_stage, "error": outcome.error}
                        ).decode("utf-8")
                        + "\n"
                    )

        fused = sum(1 for o in outcomes.values() if o.status == STATUS_FUSED)
        summary = RunSummary(
            ingested=len(records),
            fused=fused,
            uncertain=sum(1 for o in outcomes.values() if o.status == STATUS_UNCERTAIN),
            failed=sum(1 for o in outcomes.values() if o.status == STATUS_FAILED),
            kept=kept,
            filtered=fused - kept,
            filter_rate=(fused - kept) / fused if fused else 0.0,
        )
        (out / "summary.json").write_text(
            json.dumps(summary.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        return RunResult(summary=summary, outcomes=outcomes, shard_files=shard_files, out_dir=out)
