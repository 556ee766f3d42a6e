import json

import numpy as np
import pytest

from melodyvae import corpus as cp
from melodyvae import sequences as sq


@pytest.fixture(scope="module")
def small_corpus():
    return cp.synthesize_corpus(seed=11, n_clips=40)


# --- jsonl ------------------------------------------------------------------


def test_save_load_roundtrip(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    cp.save_jsonl(small_corpus, path)
    back = cp.load_jsonl(path)
    assert back.clips == small_corpus.clips


def test_load_reports_line_and_field(tmp_path, small_corpus):
    path = tmp_path / "bad.jsonl"
    cp.save_jsonl(small_corpus, path)
    lines = path.read_text().splitlines()
    rec = json.loads(lines[2])
    rec["melody"] = rec["melody"][:31]
    lines[2] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(cp.CorpusError, match=r"line 3.*melody.*length 31"):
        cp.load_jsonl(path)


def test_load_rejects_out_of_range_token(tmp_path, small_corpus):
    path = tmp_path / "bad.jsonl"
    cp.save_jsonl(small_corpus, path)
    lines = path.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["melody"][0] = 130
    lines[0] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(cp.CorpusError, match=r"line 1.*token 130"):
        cp.load_jsonl(path)


def test_load_aggregates_multiple_errors(tmp_path, small_corpus):
    path = tmp_path / "bad.jsonl"
    cp.save_jsonl(small_corpus, path)
    lines = path.read_text().splitlines()
    lines[0] = "not json"
    rec = json.loads(lines[4])
    del rec["chord"]
    lines[4] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(cp.CorpusError, match="2 invalid line"):
        cp.load_jsonl(path)


def test_load_rejects_empty(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(cp.CorpusError, match="empty"):
        cp.load_jsonl(path)


def test_duplicate_ids_rejected(small_corpus):
    clips = list(small_corpus.clips)
    with pytest.raises(cp.CorpusError, match="duplicate"):
        cp.Corpus(clips=clips + [clips[0]])


# --- splits -----------------------------------------------------------------


def test_splits_disjoint_and_cover(small_corpus):
    parts = {tag: {c.id for c in small_corpus.split(tag)} for tag in cp.SPLITS}
    all_ids = {c.id for c in small_corpus.clips}
    assert parts["train"] | parts["val"] | parts["test"] == all_ids
    assert not parts["train"] & parts["val"]
    assert not parts["train"] & parts["test"]
    assert not parts["val"] & parts["test"]


def test_split_stable_under_reload(tmp_path, small_corpus):
    path = tmp_path / "c.jsonl"
    cp.save_jsonl(small_corpus, path)
    back = cp.load_jsonl(path)
    for tag in cp.SPLITS:
        assert [c.id for c in back.split(tag)] == [
            c.id for c in small_corpus.split(tag)
        ]


def test_split_ratio_roughly_8_1_1():
    corpus = cp.synthesize_corpus(seed=3, n_clips=2000)
    n = len(corpus)
    assert 0.7 < len(corpus.split("train")) / n < 0.9
    assert 0.05 < len(corpus.split("val")) / n < 0.15
    assert 0.05 < len(corpus.split("test")) / n < 0.15


def test_unknown_split_rejected(small_corpus):
    with pytest.raises(cp.CorpusError, match="unknown split"):
        small_corpus.split("dev")


# --- synthesis --------------------------------------------------------------


def test_synthesis_deterministic():
    a = cp.synthesize_corpus(seed=7, n_clips=25)
    b = cp.synthesize_corpus(seed=7, n_clips=25)
    assert a.clips == b.clips
    c = cp.synthesize_corpus(seed=8, n_clips=25)
    assert a.clips != c.clips


def test_synthesis_rejects_zero():
    with pytest.raises(cp.CorpusError):
        cp.synthesize_corpus(seed=0, n_clips=0)


def test_generated_clips_valid_and_rhythm_from_bank(small_corpus):
    for clip in small_corpus.clips:
        # constructors validate invariants; rhythm must be a bank pattern
        r = sq.extract_rhythm(clip.melody)
        assert r in sq.RHYTHM_BANK


def test_coverage_of_patterns_and_modes_at_200():
    corpus = cp.synthesize_corpus(seed=1, n_clips=200)
    rhythms = {sq.extract_rhythm(c.melody) for c in corpus.clips}
    assert set(sq.RHYTHM_BANK) <= rhythms
    modes = {c.id.split("-")[2] for c in corpus.clips}
    assert len(modes) == 7


# --- batching ---------------------------------------------------------------


def test_batch_one_hot_rows_sum_to_one(small_corpus):
    batch = next(cp.batches(small_corpus, batch_size=8))
    assert np.array_equal(batch.x.sum(axis=-1), np.ones((8, 32)))
    assert np.array_equal(batch.r.sum(axis=-1), np.ones((8, 32)))


def test_one_hot_argmax_roundtrip(small_corpus):
    batch = next(cp.batches(small_corpus, batch_size=10))
    assert np.array_equal(batch.x.argmax(axis=-1), batch.melody_tokens)
    assert np.array_equal(batch.r.argmax(axis=-1), batch.rhythm_tokens)


def test_rhythm_channel_matches_extract_rhythm(small_corpus):
    batch = next(cp.batches(small_corpus, batch_size=4))
    for row, clip_id in enumerate(batch.ids):
        clip = small_corpus.by_id(clip_id)
        expected = sq.extract_rhythm(clip.melody).to_array()
        assert np.array_equal(batch.rhythm_tokens[row], expected)


def test_partial_final_batch_kept(small_corpus):
    sizes = [b.size for b in cp.batches(small_corpus, batch_size=16)]
    assert sizes == [16, 16, 8]


def test_shuffle_pure_function_of_seed_and_epoch(small_corpus):
    def order(seed, epoch):
        return [
            cid
            for b in cp.batches(small_corpus, 8, seed=seed, shuffle=True, epoch=epoch)
            for cid in b.ids
        ]

    assert order(1, 0) == order(1, 0)
    assert order(1, 0) != order(1, 1)
    assert order(1, 0) != order(2, 0)


def test_batches_rejects_bad_size(small_corpus):
    with pytest.raises(cp.CorpusError):
        list(cp.batches(small_corpus, 0))
