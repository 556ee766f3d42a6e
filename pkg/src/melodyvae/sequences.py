"""Token sequences for 8-beat melodies and their symbolic transforms.

A melody is 32 quarter-beat units, each one of 130 tokens: 0..127 are pitch
onsets, 128 is a hold that extends the previous note, 129 is a rest. The
rhythm reduction keeps only onset/hold/rest (3 classes), and harmony is a
per-unit 12-dim pitch-class chromagram. Holds may not open a sequence or
follow a rest: a hold must continue a sounding note.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SEQ_LEN = 32
HOLD = 128
REST = 129
MELODY_VOCAB = 130
R_ONSET, R_HOLD, R_REST = 0, 1, 2
RHYTHM_VOCAB = 3
CHORD_DIM = 12

# Augmented pitches stay inside a folk-melody-like tessitura by default.
DEFAULT_PITCH_RANGE = (48, 95)


class SequenceError(ValueError):
    """A sequence violates its structural invariants."""


def _check_hold_positions(tokens, hold, rest, kind):
    if tokens[0] == hold:
        raise SequenceError(f"{kind}: hold token at position 0")
    for i in range(1, SEQ_LEN):
        if tokens[i] == hold and tokens[i - 1] == rest:
            raise SequenceError(f"{kind}: hold directly after rest at position {i}")


@dataclass(frozen=True)
class MelodySeq:
    """32 melody tokens, each in [0, 129]."""

    tokens: tuple[int, ...]

    def __post_init__(self):
        toks = tuple(int(t) for t in self.tokens)
        object.__setattr__(self, "tokens", toks)
        if len(toks) != SEQ_LEN:
            raise SequenceError(f"melody: length {len(toks)}, expected {SEQ_LEN}")
        for i, t in enumerate(toks):
            if not 0 <= t < MELODY_VOCAB:
                raise SequenceError(f"melody: token {t} out of range at position {i}")
        _check_hold_positions(toks, HOLD, REST, "melody")

    def to_array(self) -> np.ndarray:
        return np.array(self.tokens, dtype=np.int64)

    def onset_positions(self) -> list[int]:
        return [i for i, t in enumerate(self.tokens) if t < HOLD]

    def onset_pitches(self) -> list[int]:
        return [t for t in self.tokens if t < HOLD]


@dataclass(frozen=True)
class RhythmSeq:
    """32 rhythm tokens: 0 = onset, 1 = hold, 2 = rest."""

    tokens: tuple[int, ...]

    def __post_init__(self):
        toks = tuple(int(t) for t in self.tokens)
        object.__setattr__(self, "tokens", toks)
        if len(toks) != SEQ_LEN:
            raise SequenceError(f"rhythm: length {len(toks)}, expected {SEQ_LEN}")
        for i, t in enumerate(toks):
            if t not in (R_ONSET, R_HOLD, R_REST):
                raise SequenceError(f"rhythm: token {t} out of range at position {i}")
        _check_hold_positions(toks, R_HOLD, R_REST, "rhythm")

    def to_array(self) -> np.ndarray:
        return np.array(self.tokens, dtype=np.int64)

    def onset_count(self) -> int:
        return sum(1 for t in self.tokens if t == R_ONSET)


@dataclass(frozen=True)
class ChordSeq:
    """32 chromagram frames of 12 binary pitch-class activations.

    An all-zero frame means "no chord".
    """

    frames: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        frames = tuple(tuple(int(v) for v in f) for f in self.frames)
        object.__setattr__(self, "frames", frames)
        if len(frames) != SEQ_LEN:
            raise SequenceError(f"chord: length {len(frames)}, expected {SEQ_LEN}")
        for i, f in enumerate(frames):
            if len(f) != CHORD_DIM:
                raise SequenceError(f"chord: frame {i} has {len(f)} entries")
            if any(v not in (0, 1) for v in f):
                raise SequenceError(f"chord: non-binary entry in frame {i}")

    @classmethod
    def no_chord(cls) -> "ChordSeq":
        return cls(frames=tuple((0,) * CHORD_DIM for _ in range(SEQ_LEN)))

    @classmethod
    def from_array(cls, arr) -> "ChordSeq":
        return cls(frames=tuple(tuple(int(v) for v in row) for row in arr))

    def to_array(self) -> np.ndarray:
        return np.array(self.frames, dtype=np.float64)


def extract_rhythm(x: MelodySeq) -> RhythmSeq:
    """Reduce a melody to onset/hold/rest per position."""
    mapping = lambda t: R_ONSET if t < HOLD else (R_HOLD if t == HOLD else R_REST)
    return RhythmSeq(tokens=tuple(mapping(t) for t in x.tokens))


def transpose(x: MelodySeq, i: int) -> MelodySeq:
    """Shift every pitch token by ``i`` semitones; holds and rests unchanged."""
    out = []
    for pos, t in enumerate(x.tokens):
        if t < HOLD:
            shifted = t + i
            if not 0 <= shifted <= 127:
                raise SequenceError(
                    f"transpose: pitch {t}{i:+d} out of range at position {pos}"
                )
            out.append(shifted)
        else:
            out.append(t)
    return MelodySeq(tokens=tuple(out))


def can_transpose(x: MelodySeq, i: int) -> bool:
    return all(0 <= t + i <= 127 for t in x.tokens if t < HOLD)


def transpose_chord(c: ChordSeq, i: int) -> ChordSeq:
    """Rotate every frame's active pitch classes by ``i`` mod 12."""
    shift = i % CHORD_DIM
    frames = tuple(f[-shift:] + f[:-shift] if shift else f for f in c.frames)
    return ChordSeq(frames=frames)


def augment_pitch(
    x: MelodySeq,
    rng: np.random.Generator,
    pitch_range: tuple[int, int] = DEFAULT_PITCH_RANGE,
) -> MelodySeq:
    """Replace each onset's pitch independently and uniformly; rhythm is kept.

    Draws come from [0, 127] intersected with ``pitch_range``. A melody with
    no onsets is returned unchanged.
    """
    lo = max(0, pitch_range[0])
    hi = min(127, pitch_range[1])
    out = list(x.tokens)
    changed = False
    for pos, t in enumerate(out):
        if t < HOLD:
            out[pos] = int(rng.integers(lo, hi + 1))
            changed = True
    return MelodySeq(tokens=tuple(out)) if changed else x


def apply_rhythm(pitches: list[int], pattern: RhythmSeq) -> MelodySeq:
    """Cut a pitch sequence by a rhythm pattern (one pitch per onset, in order)."""
    if len(pitches) != pattern.onset_count():
        raise SequenceError(
            f"apply_rhythm: {len(pitches)} pitches vs {pattern.onset_count()} onsets"
        )
    it = iter(pitches)
    tokens = []
    for t in pattern.tokens:
        if t == R_ONSET:
            tokens.append(next(it))
        elif t == R_HOLD:
            tokens.append(HOLD)
        else:
            tokens.append(REST)
    return MelodySeq(tokens=tuple(tokens))


def _random_resplit(n_onsets: int, rng: np.random.Generator) -> RhythmSeq:
    """A fresh valid rhythm with ``n_onsets`` onsets: random positions, then
    each onset sustained for a random part of its gap and rested after."""
    if n_onsets == 0:
        return RhythmSeq(tokens=(R_REST,) * SEQ_LEN)
    positions = np.sort(rng.choice(SEQ_LEN, size=n_onsets, replace=False))
    tokens = [R_REST] * SEQ_LEN
    bounds = list(positions[1:]) + [SEQ_LEN]
    for start, end in zip(positions, bounds):
        tokens[start] = R_ONSET
        dur = int(rng.integers(1, end - start + 1))
        for k in range(start + 1, start + dur):
            tokens[k] = R_HOLD
    return RhythmSeq(tokens=tuple(tokens))


def augment_rhythm(
    x: MelodySeq,
    rng: np.random.Generator,
    bank: tuple[RhythmSeq, ...] | None = None,
    info: dict | None = None,
) -> MelodySeq:
    """Resample the rhythm while keeping the onset-pitch sequence intact.

    Picks a different pattern with the same onset count from ``bank``
    (default: the module rhythm bank); when none matches, falls back to a
    random duration re-split. ``info``, when given, records which path was
    taken under ``"from_bank"``.
    """
    bank = RHYTHM_BANK if bank is None else bank
    pitches = x.onset_pitches()
    current = extract_rhythm(x)
    candidates = [
        p for p in bank if p.onset_count() == len(pitches) and p != current
    ]
    if candidates:
        pattern = candidates[int(rng.integers(len(candidates)))]
        from_bank = True
    else:
        pattern = _random_resplit(len(pitches), rng)
        from_bank = False
    if info is not None:
        info["from_bank"] = from_bank
    return apply_rhythm(pitches, pattern)


def _pattern(spec: str) -> RhythmSeq:
    """Build a rhythm from a 32-char string: x = onset, _ = hold, . = rest."""
    table = {"x": R_ONSET, "_": R_HOLD, ".": R_REST}
    return RhythmSeq(tokens=tuple(table[ch] for ch in spec))


# One phrase of 8 beats = 32 sixteenth-note units. Onset counts span 2..16,
# plus two dense patterns (20 and 32 onsets) so that all-onset targets used
# in rhythm-swap experiments are in-distribution.
RHYTHM_BANK: tuple[RhythmSeq, ...] = tuple(
    _pattern(s)
    for s in [
        "x_______________x_______________",  # 2 whole-ish notes
        "x___________x___x___________x___",  # 4
        "x_______x_______x_______x_______",  # 4 half notes
        "x___x___x___x___x___x___x___x___",  # 8 quarters
        "x_x_x_x_x_______x_x_x_x_x_______",  # 10
        "x___x_x_x___x_x_x___x_x_x___x_x_",  # 12
        "x_x_x_x_x_x_x_x_x_x_x_x_x_x_x_x_",  # 16 eighths
        "x__x__x_x__x__x_x__x__x_x__x__x_",  # 12 swung
        "x_____x_x_____x_x_____x_x_____x_",  # 8 syncopated
        "x___x___x_______x___x___x_______",  # 6
        "x_______x___x___x_______x___x___",  # 6 variant
        "x_x_x___x_x_x___x_x_x___x_x_x___",  # 12 triplets-feel
        "x___x_..x___x_..x___x_..x___x_..",  # 8 with rests
        "x_x.x_x.x_x.x_x.x_x.x_x.x_x.x_x.",  # 16 staccato
        "x______.x______.x______.x______.",  # 4 with rests
        "x_________x_x___x_________x_x___",  # 6 sparse pickup
        "x_..x_..x_..x_..x___x___x_______",  # 7
        "x.x.x.x.x.x.x.x.x.x.x.x.x.x.x.x.",  # 16 detached
        "xxx_x_x_xxx_x_x_xxx_x_x_xxx_x_x_",  # 20
        "xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx",  # 32 all onsets
        "x_......x_......x_......x_......",  # 4 short
        "x.......x.......x.......x.......",  # 4 staccato downbeats
        "x_x_x___x_______x_x_x___x_______",  # 8 call-and-rest
        "x_______________x_______x___x___",  # 4 long-short
        "x___________x___________x_______",  # 3
        "x_______x_______x___x___x___x_x_",  # 7 accelerating
        "x_____________x_x_______________",  # 3 pickup
        "x___x___x___x___x_______________",  # 5
    ]
)


def bank_onset_counts(bank: tuple[RhythmSeq, ...] = RHYTHM_BANK) -> list[int]:
    return sorted({p.onset_count() for p in bank})
