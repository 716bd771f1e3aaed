from __future__ import annotations

import json

import numpy as np
import pytest

from capfuse import analytics
from capfuse.errors import ExtractionSchemaError, ModalityParseError


# -- caption lengths -----------------------------------------------------


def test_token_length():
    assert analytics.token_length("") == 0
    assert analytics.token_length("one") == 1
    assert analytics.token_length("  spaced   out  words ") == 3


def test_length_stats_hand_count():
    captions = ["a b c", "one two", "x", "", "five words here right now"]
    stats = analytics.length_stats(captions, bins=5)
    assert stats.count == 5
    assert stats.mean == pytest.approx((3 + 2 + 1 + 0 + 5) / 5, abs=0)
    assert stats.min == 0
    assert stats.max == 5
    assert sum(stats.bin_counts) == 5
    assert len(stats.bin_edges) == len(stats.bin_counts) + 1


def test_length_stats_empty():
    stats = analytics.length_stats([])
    assert stats.count == 0
    assert stats.mean is None
    assert stats.bin_counts == ()


def test_length_stats_serializes():
    d = analytics.length_stats(["a b", "c"]).to_dict()
    assert d["count"] == 2 and d["mean"] == 1.5


# -- cosine histogram ----------------------------------------------------


def test_score_histogram_hand_count():
    hist = analytics.score_histogram([-1.0, -0.98, 0.0, 0.049, 0.05, 0.51, 1.0])
    edges, counts = hist["bin_edges"], hist["bin_counts"]
    assert len(edges) == 41 and len(counts) == 40
    assert edges[0] == -1.0 and edges[-1] == 1.0
    # -1.0 and -0.98 share the first bin
    assert counts[0] == 2
    # [0.0, 0.05) holds 0.0 and 0.049; 0.05 starts the next bin
    assert counts[20] == 2
    assert counts[21] == 1
    # the top edge is inclusive
    assert counts[39] == 1
    assert sum(counts) == 7


def test_score_histogram_empty():
    assert sum(analytics.score_histogram([])["bin_counts"]) == 0


# -- modality attribution ------------------------------------------------


def test_parse_modality_reply_list_form():
    assert analytics.parse_modality_reply("['audio_caption', 'video_caption']") == [
        "audio_caption",
        "video_caption",
    ]


def test_parse_modality_reply_canonical_order():
    reply = "['video_caption', 'audio_caption', 'speech_caption']"
    assert analytics.parse_modality_reply(reply) == [
        "audio_caption",
        "speech_caption",
        "video_caption",
    ]


def test_parse_modality_reply_case_and_prose():
    assert analytics.parse_modality_reply("Mostly the VIDEO_CAPTION was used.") == [
        "video_caption"
    ]


def test_parse_modality_reply_rejects_empty():
    with pytest.raises(ModalityParseError):
        analytics.parse_modality_reply("none of the above")


def test_modalities_from_cues():
    bundle = {
        "audio_caption": "waves",
        "speech_transcript": "",
        "music_caption": "piano",
        "video_caption": "a beach",
    }
    assert analytics.modalities_from_cues(bundle) == [
        "audio_caption",
        "music_caption",
        "video_caption",
    ]


def test_multimodality_fraction_hand_count():
    usages = [
        ["audio_caption"],
        ["audio_caption", "video_caption"],
        ["speech_caption", "music_caption", "video_caption"],
        [],
        ["audio_caption", "audio_caption"],
    ]
    assert analytics.multimodality_fraction(usages) == pytest.approx(2 / 5, abs=0)
    with pytest.raises(ValueError):
        analytics.multimodality_fraction([])


def test_multimodality_fraction_monotone_under_added_multi_usage():
    usages = [["audio_caption"], ["audio_caption", "video_caption"]]
    base = analytics.multimodality_fraction(usages)
    grown = analytics.multimodality_fraction(
        usages + [["speech_caption", "music_caption"]]
    )
    assert grown >= base


def test_modality_usage_counts_dedupes_within_caption():
    usages = [["audio_caption", "audio_caption"], ["audio_caption", "video_caption"]]
    counts = analytics.modality_usage_counts(usages)
    assert counts["audio_caption"] == 2
    assert counts["video_caption"] == 1
    assert counts["speech_caption"] == 0


# -- semantic term extraction -------------------------------------------


CAPTION = "A jazz guitar plays while rain falls in a calm street scene."


def extraction_reply(**overrides) -> str:
    payload = {
        "instrument": ["guitar"],
        "emotion": ["calm"],
        "music genre": ["jazz"],
        "scene": ["street"],
    }
    payload.update(overrides)
    return json.dumps(payload)


def test_extraction_keeps_grounded_terms():
    out = analytics.validate_semantic_extraction(extraction_reply(), CAPTION)
    assert out.fields == {
        "instrument": ("guitar",),
        "emotion": ("calm",),
        "music genre": ("jazz",),
        "scene": ("street",),
    }
    assert out.dropped == ()


def test_extraction_drops_exactly_the_absent_terms():
    reply = extraction_reply(
        instrument=["guitar", "Drums"], scene=["street", "airport"]
    )
    out = analytics.validate_semantic_extraction(reply, CAPTION)
    assert out.fields["instrument"] == ("guitar",)
    assert out.fields["scene"] == ("street",)
    assert sorted(out.dropped) == ["Drums", "airport"]


def test_extraction_grounding_is_case_insensitive():
    reply = extraction_reply(instrument=["GUITAR"], emotion=["Calm"])
    out = analytics.validate_semantic_extraction(reply, CAPTION)
    assert out.fields["instrument"] == ("GUITAR",)
    assert out.fields["emotion"] == ("Calm",)


def test_extraction_schema_errors():
    with pytest.raises(ExtractionSchemaError):
        analytics.validate_semantic_extraction("no json here", CAPTION)
    with pytest.raises(ExtractionSchemaError):
        analytics.validate_semantic_extraction('{"instrument": []}', CAPTION)
    with pytest.raises(ExtractionSchemaError):
        analytics.validate_semantic_extraction(
            extraction_reply(emotion="calm"), CAPTION
        )
    with pytest.raises(ExtractionSchemaError):
        analytics.validate_semantic_extraction(
            extraction_reply(scene=[1, 2]), CAPTION
        )


def test_extraction_kept_terms_always_appear_in_caption():
    # invariant: whatever survives grounding is a substring of the caption
    replies = [
        extraction_reply(instrument=["gui", "tar", "guitar plays", "zither"]),
        extraction_reply(scene=["STREET SCENE", "beach"]),
    ]
    for reply in replies:
        out = analytics.validate_semantic_extraction(reply, CAPTION)
        for terms in out.fields.values():
            for term in terms:
                assert term.lower() in CAPTION.lower()


def test_extraction_presence_fractions():
    a = analytics.validate_semantic_extraction(extraction_reply(), CAPTION)
    b = analytics.validate_semantic_extraction(
        extraction_reply(instrument=["zither"], emotion=["angry"]), CAPTION
    )
    fr = analytics.extraction_presence_fractions([a, b])
    assert fr["instrument"] == 0.5
    assert fr["emotion"] == 0.5
    assert fr["music genre"] == 1.0
    assert fr["scene"] == 1.0
    with pytest.raises(ValueError):
        analytics.extraction_presence_fractions([])


# -- cluster distances ---------------------------------------------------


def brute_distances(embeddings, labels, mode):
    by: dict[str, list[str]] = {}
    for cid in sorted(embeddings):
        by.setdefault(labels[cid], []).append(cid)
    cats = sorted(by)
    unit = {
        cid: np.asarray(embeddings[cid], dtype=float)
        / np.linalg.norm(np.asarray(embeddings[cid], dtype=float))
        for cid in embeddings
    }
    cent = {c: np.mean([unit[i] for i in by[c]], axis=0) for c in cats}
    intra: dict[str, float | None] = {}
    inter: dict[str, dict[str, float]] = {c: {} for c in cats}
    for c in cats:
        ids = by[c]
        if len(ids) < 2:
            intra[c] = None
        elif mode == "pairwise":
            ds = [
                1.0 - float(unit[a] @ unit[b])
                for k, a in enumerate(ids)
                for b in ids[k + 1 :]
            ]
            intra[c] = sum(ds) / len(ds)
        else:
            cn = cent[c] / np.linalg.norm(cent[c])
            intra[c] = float(np.mean([1.0 - unit[i] @ cn for i in ids]))
    for i, a in enumerate(cats):
        for b in cats[i + 1 :]:
            if mode == "pairwise":
                ds = [1.0 - float(unit[x] @ unit[y]) for x in by[a] for y in by[b]]
                d = sum(ds) / len(ds)
            else:
                d = float(
                    1.0
                    - (cent[a] @ cent[b])
                    / (np.linalg.norm(cent[a]) * np.linalg.norm(cent[b]))
                )
            inter[a][b] = d
            inter[b][a] = d
    return intra, inter


def thirty_vector_fixture():
    rng = np.random.default_rng(42)
    centers = {"ambient": [3, 0, 0, 0], "speech": [0, 3, 0, 0], "music": [0, 0, 3, 0]}
    embeddings, labels = {}, {}
    for cat, center in centers.items():
        for i in range(10):
            cid = f"{cat}-{i:02d}"
            embeddings[cid] = (np.array(center, dtype=float) + rng.standard_normal(4)).tolist()
            labels[cid] = cat
    return embeddings, labels


@pytest.mark.parametrize("mode", ["pairwise", "centroid"])
def test_distances_match_brute_force(mode):
    embeddings, labels = thirty_vector_fixture()
    report = analytics.cluster_distances(embeddings, labels, mode=mode)
    intra, inter = brute_distances(embeddings, labels, mode)
    for cat in report.categories:
        assert report.intra[cat] == pytest.approx(intra[cat], abs=1e-9)
        for other, d in report.inter[cat].items():
            assert d == pytest.approx(inter[cat][other], abs=1e-9)


@pytest.mark.parametrize("mode", ["pairwise", "centroid"])
def test_distances_random_inputs_match_brute_force(mode):
    rng = np.random.default_rng(9)
    for trial in range(10):
        n = int(rng.integers(4, 25))
        cats = ["a", "b", "c"][: int(rng.integers(2, 4))]
        embeddings, labels = {}, {}
        for i in range(n):
            cid = f"v{i:03d}"
            embeddings[cid] = rng.standard_normal(6).tolist()
            labels[cid] = cats[int(rng.integers(0, len(cats)))]
        # guarantee no category is empty
        for j, cat in enumerate(cats):
            embeddings[f"seed{j}"] = rng.standard_normal(6).tolist()
            labels[f"seed{j}"] = cat
        report = analytics.cluster_distances(embeddings, labels, mode=mode)
        intra, inter = brute_distances(embeddings, labels, mode)
        for cat in report.categories:
            if report.intra[cat] is None:
                assert intra[cat] is None
            else:
                assert report.intra[cat] == pytest.approx(intra[cat], abs=1e-9), trial
            for other, d in report.inter[cat].items():
                assert d == pytest.approx(inter[cat][other], abs=1e-9), trial


def test_distances_symmetry_and_scale_invariance():
    rng = np.random.default_rng(17)
    embeddings, labels = thirty_vector_fixture()
    report = analytics.cluster_distances(embeddings, labels)
    for a in report.categories:
        for b, d in report.inter[a].items():
            assert report.inter[b][a] == d
    scaled = {
        cid: (np.asarray(vec) * float(rng.uniform(0.1, 40.0))).tolist()
        for cid, vec in embeddings.items()
    }
    rescaled = analytics.cluster_distances(scaled, labels)
    for cat in report.categories:
        assert rescaled.intra[cat] == pytest.approx(report.intra[cat], abs=1e-9)
        for other, d in report.inter[cat].items():
            assert rescaled.inter[cat][other] == pytest.approx(d, abs=1e-9)


def test_distances_singleton_category():
    embeddings = {"a1": [1.0, 0.0], "a2": [0.9, 0.1], "b1": [0.0, 1.0]}
    labels = {"a1": "big", "a2": "big", "b1": "lone"}
    report = analytics.cluster_distances(embeddings, labels)
    assert report.singleton_categories == ("lone",)
    assert report.intra["lone"] is None
    assert report.intra["big"] is not None
    assert report.sizes == {"big": 2, "lone": 1}


def test_distances_strict_id_label_matching():
    with pytest.raises(ValueError, match="missing labels"):
        analytics.cluster_distances({"a": [1.0]}, {})
    with pytest.raises(ValueError, match="missing embeddings"):
        analytics.cluster_distances({"a": [1.0]}, {"a": "x", "ghost": "y"})
    with pytest.raises(ValueError):
        analytics.cluster_distances({}, {})


def test_distances_zero_norm_names_the_id():
    embeddings = {"ok": [1.0, 0.0], "dead": [0.0, 0.0]}
    labels = {"ok": "c", "dead": "c"}
    with pytest.raises(ValueError, match="dead"):
        analytics.cluster_distances(embeddings, labels)


def test_distances_degenerate_centroid():
    embeddings = {"p": [1.0, 0.0], "q": [-1.0, 0.0]}
    labels = {"p": "c", "q": "c"}
    with pytest.raises(ValueError, match="degenerate centroid"):
        analytics.cluster_distances(embeddings, labels, mode="centroid")


def test_distances_subsampling_is_deterministic():
    rng = np.random.default_rng(3)
    embeddings = {f"v{i:03d}": rng.standard_normal(5).tolist() for i in range(40)}
    labels = {cid: "all" for cid in embeddings}
    a = analytics.cluster_distances(embeddings, labels, cap=12, seed=5)
    b = analytics.cluster_distances(embeddings, labels, cap=12, seed=5)
    assert a.intra == b.intra
    assert a.subsampled == {"all": True}
    assert a.sizes == {"all": 40}
    full = analytics.cluster_distances(embeddings, labels, cap=5000)
    assert full.subsampled == {"all": False}


def test_distances_report_serializes():
    embeddings, labels = thirty_vector_fixture()
    d = analytics.cluster_distances(embeddings, labels).to_dict()
    assert d["mode"] == "pairwise"
    assert set(d["categories"]) == {"ambient", "speech", "music"}


def test_distances_rejects_unknown_mode():
    with pytest.raises(ValueError):
        analytics.cluster_distances({"a": [1.0]}, {"a": "x"}, mode="euclid")
