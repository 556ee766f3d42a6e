"""Corpus ingestion, synthesis, and batching.

The interchange format is UTF-8 JSON Lines, one clip per line:
``{"id": str, "melody": [32 ints], "chord": [[12 ints] x 32]}``. Splits are
not stored; each clip is assigned train/val/test 8:1:1 by a stable hash of
its id, so any reload reproduces the same partition.

``synthesize_corpus`` builds a deterministic stand-in corpus from diatonic
modes, a fixed rhythm-pattern bank, and triad progressions, with melodies as
chord-tone-biased random walks. It exists so the full pipeline runs at desk
scale without any external dataset.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .sequences import (
    CHORD_DIM,
    HOLD,
    MELODY_VOCAB,
    REST,
    RHYTHM_BANK,
    RHYTHM_VOCAB,
    SEQ_LEN,
    ChordSeq,
    MelodySeq,
    RhythmSeq,
    SequenceError,
    apply_rhythm,
    extract_rhythm,
)

SPLITS = ("train", "val", "test")


class CorpusError(ValueError):
    """Malformed corpus file or records."""


@dataclass(frozen=True)
class Clip:
    """One 8-beat melody with its chord condition."""

    id: str
    melody: MelodySeq
    chord: ChordSeq


def split_of(clip_id: str) -> str:
    """Stable 8:1:1 split assignment from a hash of the id."""
    h = hashlib.sha1(clip_id.encode("utf-8")).digest()[0] % 10
    return "train" if h < 8 else ("val" if h == 8 else "test")


@dataclass
class Corpus:
    clips: list[Clip] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for c in self.clips:
            if c.id in seen:
                raise CorpusError(f"duplicate clip id {c.id!r}")
            seen.add(c.id)

    def __len__(self) -> int:
        return len(self.clips)

    def split(self, tag: str) -> list[Clip]:
        if tag == "all":
            return list(self.clips)
        if tag not in SPLITS:
            raise CorpusError(f"unknown split {tag!r}")
        return [c for c in self.clips if split_of(c.id) == tag]

    def by_id(self, clip_id: str) -> Clip:
        for c in self.clips:
            if c.id == clip_id:
                return c
        raise CorpusError(f"no clip with id {clip_id!r}")


def _clip_from_record(rec: dict) -> Clip:
    if not isinstance(rec, dict):
        raise CorpusError("record is not an object")
    for key in ("id", "melody", "chord"):
        if key not in rec:
            raise CorpusError(f"missing field {key!r}")
    try:
        melody = MelodySeq(tokens=tuple(rec["melody"]))
    except (SequenceError, TypeError) as e:
        raise CorpusError(f"field 'melody': {e}") from e
    try:
        chord = ChordSeq(frames=tuple(tuple(f) for f in rec["chord"]))
    except (SequenceError, TypeError) as e:
        raise CorpusError(f"field 'chord': {e}") from e
    return Clip(id=str(rec["id"]), melody=melody, chord=chord)


def load_jsonl(path) -> Corpus:
    """Load and validate a JSONL corpus; all line errors are aggregated."""
    clips = []
    errors = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                clips.append(_clip_from_record(rec))
            except (json.JSONDecodeError, CorpusError) as e:
                errors.append(f"line {lineno}: {e}")
    if errors:
        raise CorpusError(
            f"{path}: {len(errors)} invalid line(s)\n" + "\n".join(errors)
        )
    if not clips:
        raise CorpusError(f"{path}: empty corpus")
    return Corpus(clips=clips)


def save_jsonl(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in corpus.clips:
            rec = {
                "id": c.id,
                "melody": list(c.melody.tokens),
                "chord": [list(f) for f in c.chord.frames],
            }
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# Synthetic corpus

_MODES = {
    "ionian": (0, 2, 4, 5, 7, 9, 11),
    "dorian": (0, 2, 3, 5, 7, 9, 10),
    "phrygian": (0, 1, 3, 5, 7, 8, 10),
    "lydian": (0, 2, 4, 6, 7, 9, 11),
    "mixolydian": (0, 2, 4, 5, 7, 9, 10),
    "aeolian": (0, 2, 3, 5, 7, 8, 10),
    "locrian": (0, 1, 3, 5, 6, 8, 10),
}
_MODE_NAMES = tuple(_MODES)

# Four-chord progressions as scale degrees (0-based); triads are stacked
# thirds within the mode, so quality follows the mode automatically.
_PROGRESSIONS = (
    (0, 3, 4, 0),  # I-IV-V-I
    (0, 5, 3, 4),  # I-vi-IV-V
    (0, 4, 5, 3),  # I-V-vi-IV
    (1, 4, 0, 0),  # ii-V-I-I
    (0, 3, 0, 4),  # I-IV-I-V
)

_PITCH_LO, _PITCH_HI = 48, 95


def _triad_pcs(mode: tuple[int, ...], tonic_pc: int, degree: int) -> tuple[int, ...]:
    return tuple(
        (tonic_pc + mode[(degree + k) % 7] + 12 * ((degree + k) // 7)) % 12
        for k in (0, 2, 4)
    )


def _chord_frames(mode, tonic_pc, progression) -> ChordSeq:
    frames = []
    for degree in progression:
        pcs = set(_triad_pcs(mode, tonic_pc, degree))
        frame = tuple(1 if pc in pcs else 0 for pc in range(CHORD_DIM))
        frames.extend([frame] * (SEQ_LEN // len(progression)))
    return ChordSeq(frames=tuple(frames))


def _scale_pitches(mode, tonic_pc) -> list[int]:
    return [
        p
        for p in range(_PITCH_LO, _PITCH_HI + 1)
        if (p - tonic_pc) % 12 in {iv % 12 for iv in mode}
    ]


def _walk_pitches(rng, n, mode, tonic_pc, chord: ChordSeq, positions) -> list[int]:
    """Chord-tone-biased random walk over the scale, one pitch per onset."""
    scale = _scale_pitches(mode, tonic_pc)
    center = min(range(len(scale)), key=lambda i: abs(scale[i] - 67))
    idx = center + int(rng.integers(-3, 4))
    idx = min(max(idx, 0), len(scale) - 1)
    out = []
    for pos in positions:
        chord_pcs = {pc for pc, v in enumerate(chord.frames[pos]) if v}
        lo = max(0, idx - 3)
        hi = min(len(scale) - 1, idx + 3)
        candidates = list(range(lo, hi + 1))
        weights = []
        for c in candidates:
            w = 1.0 / (1.0 + abs(c - idx))
            if scale[c] % 12 in chord_pcs:
                w *= 3.0
            weights.append(w)
        weights = np.array(weights) / np.sum(weights)
        idx = int(rng.choice(candidates, p=weights))
        out.append(scale[idx])
    if len(out) < n:  # melodies with zero onsets never reach here
        out.extend([scale[idx]] * (n - len(out)))
    return out


def synthesize_corpus(seed: int, n_clips: int) -> Corpus:
    """A deterministic synthetic corpus of ``n_clips`` chord-annotated clips.

    Mode and rhythm pattern cycle with the clip index (guaranteeing coverage
    of the whole bank for modest corpus sizes); tonic, progression, and the
    melodic walk are drawn from a generator seeded by ``seed``.
    """
    if n_clips < 1:
        raise CorpusError("n_clips must be >= 1")
    rng = np.random.default_rng(seed)
    clips = []
    for i in range(n_clips):
        mode_name = _MODE_NAMES[i % len(_MODE_NAMES)]
        mode = _MODES[mode_name]
        pattern = RHYTHM_BANK[i % len(RHYTHM_BANK)]
        tonic_pc = int(rng.integers(12))
        progression = _PROGRESSIONS[int(rng.integers(len(_PROGRESSIONS)))]
        chord = _chord_frames(mode, tonic_pc, progression)
        positions = [k for k, t in enumerate(pattern.tokens) if t == 0]
        pitches = _walk_pitches(rng, pattern.onset_count(), mode, tonic_pc,
                                chord, positions)
        melody = apply_rhythm(pitches, pattern)
        clips.append(
            Clip(id=f"synth-{i:05d}-{mode_name}-t{tonic_pc:02d}",
                 melody=melody, chord=chord)
        )
    return Corpus(clips=clips)


# ---------------------------------------------------------------------------
# Batching


@dataclass
class Batch:
    """One-hot encoded model inputs plus the integer targets they came from."""

    x: np.ndarray  # (B, 32, 130)
    c: np.ndarray  # (B, 32, 12)
    r: np.ndarray  # (B, 32, 3)
    melody_tokens: np.ndarray  # (B, 32) int
    rhythm_tokens: np.ndarray  # (B, 32) int
    ids: tuple[str, ...]

    @property
    def size(self) -> int:
        return self.x.shape[0]


def one_hot(tokens: np.ndarray, depth: int) -> np.ndarray:
    out = np.zeros(tokens.shape + (depth,), dtype=np.float64)
    np.put_along_axis(out, tokens[..., None], 1.0, axis=-1)
    return out


def encode_clips(clips: list[Clip]) -> Batch:
    """One-hot encode a list of clips as a single batch (stable order)."""
    mel = np.stack([c.melody.to_array() for c in clips])
    rhy = np.stack([extract_rhythm(c.melody).to_array() for c in clips])
    cho = np.stack([c.chord.to_array() for c in clips])
    return Batch(
        x=one_hot(mel, MELODY_VOCAB),
        c=cho,
        r=one_hot(rhy, RHYTHM_VOCAB),
        melody_tokens=mel,
        rhythm_tokens=rhy,
        ids=tuple(c.id for c in clips),
    )


def batches(clips, batch_size: int, seed: int = 0, shuffle: bool = False,
            epoch: int = 0):
    """Yield Batch objects; order is a pure function of (seed, epoch).

    The final partial batch is kept. ``clips`` may be a Corpus (all clips)
    or any sequence of Clip.
    """
    if batch_size < 1:
        raise CorpusError("batch_size must be >= 1")
    if isinstance(clips, Corpus):
        clips = clips.clips
    clips = list(clips)
    order = np.arange(len(clips))
    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(len(clips))
    for start in range(0, len(clips), batch_size):
        chunk = [clips[j] for j in order[start : start + batch_size]]
        yield encode_clips(chunk)
