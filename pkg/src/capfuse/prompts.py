"""Prompt templates for the expert backends and the fusion synthesizer.

The templates are the default instruction set for each text-producing role;
a run config may override any of them with a file of its own.  The
synthesizer contract is load-bearing: the pipeline parser depends on the
output JSON keys and on the uncertainty sentinel emitted verbatim, and the
fusion cache fingerprint includes the template hash so a prompt edit forces
a re-synthesis on resume.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

# Emitted by the synthesizer, instead of JSON, when auditory facts cannot be
# reliably reconstructed from the cues.  Matched verbatim by the parser.
UNCERTAIN_SENTINEL = "UNCERTAIN_AUDIO_INFORMATION_DETECTED"

# Required keys of the synthesizer's JSON output.
AMBIGUITIES_KEY = "Potential ambiguities"
CAPTION_KEY = "Audio caption"

VIDEO_CAPTION_PROMPT = """\
Please provide a comprehensive video description focusing exclusively on observable visual elements, including timestamps:

1. Key entities and actions with timestamps:
- List main objects/subjects and their visible actions with approximate timestamps (MM:SS format)
- Describe object/subject movements and interactions, material properties (metal, wood, liquid), and the timing of significant visual events

2. Scene description with timeline:
- Overall scene dynamics and visual interactions
- Notable visual events with timestamps: object collisions or impacts, movement patterns, material changes, human/animal visible actions
- Environmental context (indoor/outdoor, spatial relationships)

3. Overall description with chronological flow:
- Provide a comprehensive visual narrative of the video
- Include timestamps for key moments and transitions (MM:SS format)
- Focus on observable actions and movements, using specific, action-oriented language
- Present events in chronological order with clear time markers

Guidelines:
- Describe only directly visible elements; avoid assumptions about non-visible elements
- Note material properties and physical interactions
- Include timestamps for all significant events; timestamps must not exceed the duration of the video
- Maintain strict focus on visual information
"""

AUDIO_CAPTION_PROMPT = """\
Describe the audio in detail, but there is no need for association or speculation.
"""

ASR_PROMPT = """\
Transcribe any spoken content in this audio verbatim. Return an empty result if there is no distinct human voice.
"""

MUSIC_CAPTION_PROMPT = """\
Describe the musical content of this audio: genre, instrumentation, tempo, and mood.
"""

OBJECT_EXTRACTION_PROMPT = """\
I will give you a sentence. Please extract some information I need in a JSON format. Sentence: '{caption}'

My requirement:
1. Extract instruments and return as a list
2. Extract emotions and return as a list
3. Extract music genres and return as a list
4. Extract scenes and return as a list
5. All words must be found in the sentence.
6. Return a JSON format without any other words.
7. Words must be extracted from the corresponding caption.

The return format should only be like this:
{{
    "instrument": [],
    "emotion": [],
    "music genre": [],
    "scene": []
}}
"""

MODALITY_CHECK_PROMPT = """\
You analyze descriptions from audio.
'final_cap' is a comprehensive summary.
Identify source captions ('audio_caption', 'speech_caption', 'music_caption', 'video_caption') essential for 'final_cap' using provided JSON data: {cap_str}.

Requirements:
1. List contributing caption types.
2. Return as string keys list.
3. Format: ['type1', 'type2']
"""

INTEGRATION_PROMPT = """\
Rigorous Multimodal Information Integration and Purely Audio Description Expert

Core Task
You are an expert in audio information processing. Integrate and analyze the textual descriptions below, cross-referencing and correcting them while strictly controlling cross-modal interference, and generate a description that is purely about the audio content: accurate, detailed, and fluently written in English, with potential ambiguities annotated based solely on auditory perception. It is strictly prohibited to include any visual information, specific speech dialogue content, or ambiguity annotations based on audio-visual inconsistencies in the final output.

Input Information Sources (may contain errors, hallucinations, or be incomplete)
- Audio Tags: human-annotated sound category tags with confidence scores, representing the most prominent human-perceived acoustic features. These tags are highly reliable, especially those with high percentages, but may not cover everything in the audio. The format is TagName(Percentage%), e.g., Speech(100%). If empty, no human-annotated tag information is available.
- Audio Description: a textual description of the audio content (sound events, ambient sounds, music, vocal characteristics). An important basis for audio facts; cross-validate it against the tags and the music description.
- Speech Content: the automatic speech recognition result. Use it only to confirm the presence of human voice, judge general vocal characteristics, and assist in inferring the scenario; its specific textual content must never appear in the final output. If empty, it indicates no distinct human voice, or other non-linguistic vocalizations.
- Music Description: a description of musical elements (features, instruments, rhythm) and other sound scenes. Music-related features here are highly reliable. If empty, it indicates no distinct music. Non-music parts of this description have lower priority.
- Video Description: a textual description of the video frames. Use it only to disambiguate auditorily ambiguous sound sources when it clearly shows a plausible source, and to flag audio-visual inconsistencies internally. Never describe sound sources, locations, or on-screen actions based on video information itself. If empty, no visual auxiliary information exists.

Processing Rules
1. Determine auditory facts with the priority: high-confidence Audio Tags > music part of the Music Description and the Audio Description > Speech Content (presence of voice) > low-confidence Audio Tags > non-music parts of the Music Description.
2. When audio information is ambiguous and the video clearly shows a plausible source, use the video to make the sound identification more precise; when the video cannot corroborate or contradicts the audio, never let it negate auditory facts, and flag the inconsistency internally only.
3. Annotate potential ambiguities arising purely from auditory perception (similar-sounding sources, polysemous sounds, plausible misinterpretations). Never derive ambiguities from visual information or audio-visual mismatch.
4. Assess reliability. If the determined auditory facts are extremely scarce, the sources severely conflict, or confidence is too low to reconstruct auditory facts reliably, output exactly the string {sentinel} and nothing else.
5. Otherwise generate the final pure audio description: only what can be heard and its auditory characteristics (source types, events, ambience, music features, non-content voice features, spatial sense, loudness, timbre, rhythm). Use cautious wording ("sounds like", "appears to be", "potentially") for less certain facts instead of stating uncertainty outright, and omit highly uncertain details. Never mention confidence percentages, visual elements, or specific speech text.

Output Format Requirements
Unless rule 4 triggered the sentinel, respond with exactly one JSON object and no other explanations:
{{
  "{ambiguities_key}": [
    "Ambiguity description based solely on auditory perception.",
    "..."
  ],
  "{caption_key}": "Final audio description focusing solely on audible elements, detailed and fluent English."
}}

Key considerations: output in English; if a modal description is empty, ignore that information source; base every statement on the inputs.

Input Information Sources:
Audio Tags:
{tag_line}

Audio Description:
{audio_caption}

Speech Content:
{speech_transcript}

Music Description:
{music_caption}

Video Description:
{video_caption}
"""


def template_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptSet:
    """The resolved prompt templates for one run."""

    video_caption: str = VIDEO_CAPTION_PROMPT
    audio_caption: str = AUDIO_CAPTION_PROMPT
    asr: str = ASR_PROMPT
    music_caption: str = MUSIC_CAPTION_PROMPT
    integration: str = INTEGRATION_PROMPT
    object_extraction: str = OBJECT_EXTRACTION_PROMPT
    modality_check: str = MODALITY_CHECK_PROMPT

    @classmethod
    def from_paths(cls, overrides: dict[str, str]) -> "PromptSet":
        """Build a PromptSet with selected templates replaced by file contents."""
        known = {f.name for f in fields(cls)}
        values = {}
        for name, path in overrides.items():
            if name not in known:
                raise KeyError(f"unknown prompt template {name!r}")
            values[name] = Path(path).read_text(encoding="utf-8")
        return cls(**values)

    def hash_of(self, name: str) -> str:
        return template_hash(getattr(self, name))


def render_integration_prompt(
    template: str,
    tag_line: str,
    audio_caption: str,
    speech_transcript: str,
    music_caption: str,
    video_caption: str,
) -> str:
    """Fill the five input slots of the integration template.

    Empty cues are rendered as empty strings under their section labels; the
    template instructs the model to ignore empty sources, so the labels must
    stay present either way.
    """
    return template.format(
        sentinel=UNCERTAIN_SENTINEL,
        ambiguities_key=AMBIGUITIES_KEY,
        caption_key=CAPTION_KEY,
        tag_line=tag_line,
        audio_caption=audio_caption,
        speech_transcript=speech_transcript,
        music_caption=music_caption,
        video_caption=video_caption,
    )
