import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from melodyvae import sequences as sq


# --- strategies -------------------------------------------------------------


@st.composite
def melodies(draw, pitch_lo=0, pitch_hi=127):
    """Valid MelodySeq values: token stream respecting hold placement."""
    tokens = []
    sounding = False
    for _ in range(sq.SEQ_LEN):
        choices = ["onset", "rest"] + (["hold"] if sounding else [])
        kind = draw(st.sampled_from(choices))
        if kind == "onset":
            tokens.append(draw(st.integers(pitch_lo, pitch_hi)))
            sounding = True
        elif kind == "hold":
            tokens.append(sq.HOLD)
        else:
            tokens.append(sq.REST)
            sounding = False
    return sq.MelodySeq(tokens=tuple(tokens))


# --- constructors -----------------------------------------------------------


def test_melody_rejects_wrong_length():
    with pytest.raises(sq.SequenceError, match="length 31"):
        sq.MelodySeq(tokens=(60,) * 31)


def test_melody_rejects_out_of_range_token():
    with pytest.raises(sq.SequenceError, match="130"):
        sq.MelodySeq(tokens=(130,) + (60,) * 31)


def test_melody_rejects_hold_at_start():
    with pytest.raises(sq.SequenceError, match="position 0"):
        sq.MelodySeq(tokens=(sq.HOLD,) + (60,) * 31)


def test_melody_rejects_hold_after_rest():
    toks = [60] * 32
    toks[5] = sq.REST
    toks[6] = sq.HOLD
    with pytest.raises(sq.SequenceError, match="position 6"):
        sq.MelodySeq(tokens=tuple(toks))


def test_rhythm_rejects_bad_tokens():
    with pytest.raises(sq.SequenceError):
        sq.RhythmSeq(tokens=(3,) * 32)


def test_chord_rejects_nonbinary_and_short_frames():
    ok = tuple((0,) * 12 for _ in range(32))
    with pytest.raises(sq.SequenceError, match="frame 0"):
        sq.ChordSeq(frames=((2,) + (0,) * 11,) + ok[1:])
    with pytest.raises(sq.SequenceError, match="entries"):
        sq.ChordSeq(frames=((0,) * 11,) + ok[1:])


# --- extract_rhythm ---------------------------------------------------------


def test_extract_rhythm_spec_prefix():
    toks = (60, sq.HOLD, sq.HOLD, sq.REST) + (62,) * 28
    r = sq.extract_rhythm(sq.MelodySeq(tokens=toks))
    assert r.tokens[:4] == (0, 1, 1, 2)


def test_extract_rhythm_all_rest():
    r = sq.extract_rhythm(sq.MelodySeq(tokens=(sq.REST,) * 32))
    assert r.tokens == (2,) * 32


def test_extract_rhythm_exhaustive_token_map():
    # every one of the 130 tokens, placed after an onset so holds are legal
    for tok in range(130):
        toks = (60, tok) + (sq.REST,) * 30
        r = sq.extract_rhythm(sq.MelodySeq(tokens=toks))
        expected = 0 if tok < 128 else (1 if tok == 128 else 2)
        assert r.tokens[1] == expected


@given(melodies(pitch_lo=20, pitch_hi=100), st.integers(-12, 12))
def test_extract_rhythm_invariant_under_transposition(m, i):
    assert sq.extract_rhythm(sq.transpose(m, i)) == sq.extract_rhythm(m)


# --- transpose --------------------------------------------------------------


def test_transpose_zero_is_identity():
    m = sq.MelodySeq(tokens=(60, sq.HOLD, sq.REST) + (72,) * 29)
    assert sq.transpose(m, 0) == m


def test_transpose_two_semitones_prefix():
    m = sq.MelodySeq(tokens=(60, sq.HOLD, sq.REST) + (64,) * 29)
    out = sq.transpose(m, 2)
    assert out.tokens[:3] == (62, sq.HOLD, sq.REST)


def test_transpose_out_of_range_names_position():
    m = sq.MelodySeq(tokens=(120,) * 32)
    with pytest.raises(sq.SequenceError, match="position 0"):
        sq.transpose(m, 10)


@given(melodies(pitch_lo=30, pitch_hi=90), st.integers(-10, 10), st.integers(-10, 10))
def test_transpose_additivity(m, i, j):
    assert sq.transpose(sq.transpose(m, j), i) == sq.transpose(m, i + j)


@given(melodies(pitch_lo=30, pitch_hi=90), st.integers(-12, 12))
def test_transpose_inverse(m, i):
    assert sq.transpose(sq.transpose(m, i), -i) == m


# --- transpose_chord --------------------------------------------------------


def chord_from_sets(active_sets):
    frames = []
    for s in active_sets:
        frames.append(tuple(1 if pc in s else 0 for pc in range(12)))
    return sq.ChordSeq(frames=tuple(frames))


def test_transpose_chord_period_twelve():
    c = chord_from_sets([{0, 4, 7}] * 32)
    assert sq.transpose_chord(c, 12) == c
    assert sq.transpose_chord(c, -24) == c


def test_transpose_chord_c_major_down_one():
    c = chord_from_sets([{0, 4, 7}] * 32)
    out = sq.transpose_chord(c, -1)
    assert set(pc for pc, v in enumerate(out.frames[0]) if v) == {11, 3, 6}


def test_transpose_chord_keeps_no_chord():
    nc = sq.ChordSeq.no_chord()
    assert sq.transpose_chord(nc, 5) == nc


# --- augment_pitch ----------------------------------------------------------


@given(melodies(pitch_lo=48, pitch_hi=95), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50)
def test_augment_pitch_preserves_rhythm(m, seed):
    out = sq.augment_pitch(m, np.random.default_rng(seed))
    assert sq.extract_rhythm(out) == sq.extract_rhythm(m)


def test_augment_pitch_all_rest_unchanged():
    m = sq.MelodySeq(tokens=(sq.REST,) * 32)
    assert sq.augment_pitch(m, np.random.default_rng(0)) is m


def test_augment_pitch_stays_in_range():
    m = sq.MelodySeq(tokens=tuple(range(32)))
    out = sq.augment_pitch(m, np.random.default_rng(5), pitch_range=(60, 62))
    assert all(60 <= t <= 62 for t in out.tokens)


def test_augment_pitch_reproducible():
    m = sq.MelodySeq(tokens=(60, sq.HOLD) * 16)
    a = sq.augment_pitch(m, np.random.default_rng(123))
    b = sq.augment_pitch(m, np.random.default_rng(123))
    assert a == b


# --- augment_rhythm ---------------------------------------------------------


@given(melodies(pitch_lo=48, pitch_hi=95), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50)
def test_augment_rhythm_preserves_onset_pitch_sequence(m, seed):
    out = sq.augment_rhythm(m, np.random.default_rng(seed))
    assert out.onset_pitches() == m.onset_pitches()


def test_augment_rhythm_single_long_note():
    m = sq.MelodySeq(tokens=(72,) + (sq.HOLD,) * 31)
    info = {}
    out = sq.augment_rhythm(m, np.random.default_rng(9), info=info)
    assert out.onset_pitches() == [72]
    # no single-onset pattern in the default bank: re-split fallback
    assert info["from_bank"] is False


def test_augment_rhythm_uses_bank_when_counts_match():
    pattern = sq.RHYTHM_BANK[3]  # 8 onsets
    m = sq.apply_rhythm([60 + k for k in range(pattern.onset_count())], pattern)
    info = {}
    out = sq.augment_rhythm(m, np.random.default_rng(1), info=info)
    assert info["from_bank"] is True
    assert sq.extract_rhythm(out) in sq.RHYTHM_BANK
    assert sq.extract_rhythm(out) != pattern


def test_augment_rhythm_reproducible():
    m = sq.MelodySeq(tokens=(60, sq.HOLD, 64, sq.HOLD) * 8)
    a = sq.augment_rhythm(m, np.random.default_rng(7))
    b = sq.augment_rhythm(m, np.random.default_rng(7))
    assert a == b


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 16))
@settings(max_examples=40)
def test_random_resplit_always_valid(seed, n):
    r = sq._random_resplit(n, np.random.default_rng(seed))
    assert r.onset_count() == n  # RhythmSeq construction validates the rest


# --- bank -------------------------------------------------------------------


def test_bank_size_and_counts():
    assert len(sq.RHYTHM_BANK) >= 16
    counts = sq.bank_onset_counts()
    assert min(counts) == 2
    assert 16 in counts
    assert 32 in counts  # dense all-onset pattern available
    within = [p for p in sq.RHYTHM_BANK if 2 <= p.onset_count() <= 16]
    assert len(within) >= 16
