import random

import pytest

from surgact.dataset import (
    ClipRecord,
    ClipTooShort,
    FoldAssignment,
    MalformedRecord,
    Manifest,
    TooFewVideos,
    ViolationCode,
    class_histogram,
    load_folds,
    load_manifest,
    plan_frame_indices,
    save_folds,
    save_manifest,
    split_folds,
    validate_clip,
)
from surgact.taxonomy import ActionClass


def rec(clip_id="c1", video_id="v1", surgery="cholecystectomy",
        action=ActionClass.DISSECTION, start=10.0, end=22.5, fps=25.0,
        co=False):
    return ClipRecord(clip_id=clip_id, video_id=video_id, surgery_type=surgery,
                      action=action, start_s=start, end_s=end, fps_native=fps,
                      co_occurring_retraction=co)


class TestValidateClip:
    def test_valid_clip(self):
        assert validate_clip(rec()) == []

    def test_too_short(self):
        codes = validate_clip(rec(start=0.0, end=1.5))
        assert codes == [ViolationCode.DURATION_OUT_OF_RANGE,
                         ViolationCode.TOO_SHORT_ACTION]

    def test_too_long(self):
        assert validate_clip(rec(start=0.0, end=41.0)) == [
            ViolationCode.DURATION_OUT_OF_RANGE]

    def test_retraction_cannot_co_occur_with_itself(self):
        codes = validate_clip(rec(action=ActionClass.TISSUE_RETRACTION,
                                  start=5.0, end=15.0, co=True))
        assert codes == [ViolationCode.ILLEGAL_CO_OCCURRENCE]

    def test_co_occurring_retraction_with_other_action_ok(self):
        assert validate_clip(rec(action=ActionClass.DISSECTION, co=True)) == []

    def test_malformed_timing(self):
        with pytest.raises(MalformedRecord):
            validate_clip(rec(start=5.0, end=5.0))

    def test_malformed_fps(self):
        with pytest.raises(MalformedRecord):
            validate_clip(rec(fps=0.0))

    def test_boundary_durations_valid(self):
        assert validate_clip(rec(start=0.0, end=2.0)) == []
        assert validate_clip(rec(start=0.0, end=40.0)) == []


class TestFrameIndices:
    def test_33_frame_worked_example(self):
        # the canonical loop-then-stride sequence for a 33-frame clip
        plan = plan_frame_indices(33, "infer")
        expected = list(range(1, 34, 4)) + list(range(4, 29, 4))
        assert plan.indices == expected
        assert plan.indices == [1, 5, 9, 13, 17, 21, 25, 29, 33,
                                4, 8, 12, 16, 20, 24, 28]

    def test_exactly_64_frames(self):
        assert plan_frame_indices(64, "infer").indices == list(range(1, 62, 4))

    def test_80_frames_centered_window(self):
        # window start = (80-64)//2 + 1 = 9
        assert plan_frame_indices(80, "infer").indices == list(range(9, 70, 4))

    def test_too_short(self):
        with pytest.raises(ClipTooShort):
            plan_frame_indices(1, "infer")

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            plan_frame_indices(33, "test")

    def test_train_mode_is_seeded(self):
        a = plan_frame_indices(200, "train", seed=5)
        b = plan_frame_indices(200, "train", seed=5)
        c = plan_frame_indices(200, "train", seed=6)
        assert a.indices == b.indices
        assert a.indices != c.indices  # differs for this particular pair

    def test_train_window_within_bounds(self):
        for seed in range(30):
            plan = plan_frame_indices(70, "train", seed=seed)
            assert len(plan.indices) == 16
            assert 1 <= min(plan.indices) and max(plan.indices) <= 70

    def test_properties_across_lengths(self):
        # 16 indices each in [1, n]; stride-4 modulo looping
        for n in list(range(2, 70)) + [64, 100, 1000]:
            plan = plan_frame_indices(n, "infer")
            assert len(plan.indices) == 16
            assert all(1 <= i <= n for i in plan.indices)
            for a, b in zip(plan.indices, plan.indices[1:]):
                if n < 64:
                    assert (b - a) % n == 4 % n
                else:
                    assert b - a == 4

    def test_loop_reconstruction(self):
        # for n < 64 the looped 64-sequence is [1..n, 1..(64-n)] cycled
        for n in range(2, 64):
            plan = plan_frame_indices(n, "infer")
            looped = [(i % n) + 1 for i in range(64)]
            assert plan.indices == looped[::4]


def make_manifest(n_videos, clips_per_video=3, seed=0):
    rng = random.Random(seed)
    records = []
    actions = list(ActionClass)[:-1]
    for v in range(n_videos):
        for c in range(clips_per_video + rng.randrange(3)):
            records.append(rec(clip_id=f"v{v}_c{c}", video_id=f"v{v}",
                               action=rng.choice(actions)))
    return Manifest(records=records)


class TestSplitFolds:
    def test_ten_videos_ten_folds(self):
        assignment = split_folds(make_manifest(10), k=10, seed=1)
        assert sorted(assignment.fold_of_video.values()) == list(range(10))

    def test_deterministic(self):
        m = make_manifest(25)
        a = split_folds(m, k=10, seed=3)
        b = split_folds(m, k=10, seed=3)
        assert a.fold_of_video == b.fold_of_video

    def test_partition(self):
        m = make_manifest(37)
        assignment = split_folds(m, k=10, seed=2)
        assert set(assignment.fold_of_video) == {f"v{i}" for i in range(37)}
        assert set(assignment.fold_of_video.values()) <= set(range(10))

    def test_oracle_reimplementation(self):
        # independent shuffle + round-robin, compared on per-fold clip counts
        m = make_manifest(100, seed=7)
        assignment = split_folds(m, k=10, seed=7)

        videos = sorted({r.video_id for r in m.records})
        rng = random.Random(7)
        rng.shuffle(videos)
        expected_fold = {v: i % 10 for i, v in enumerate(videos)}
        clip_counts = [0] * 10
        expected_counts = [0] * 10
        for r in m.records:
            clip_counts[assignment.fold_of_video[r.video_id]] += 1
            expected_counts[expected_fold[r.video_id]] += 1
        assert clip_counts == expected_counts
        assert assignment.fold_of_video == expected_fold

    def test_too_few_videos(self):
        with pytest.raises(TooFewVideos):
            split_folds(make_manifest(5), k=10, seed=0)


class TestHistogram:
    def test_empty(self):
        assert class_histogram(Manifest()) == {}

    def test_three_records(self):
        m = Manifest(records=[
            rec(clip_id="a", action=ActionClass.DISSECTION),
            rec(clip_id="b", action=ActionClass.DISSECTION),
            rec(clip_id="c", action=ActionClass.CLIPPING),
        ])
        hist = class_histogram(m)
        assert hist[(ActionClass.DISSECTION, "cholecystectomy")] == 2
        assert hist[(ActionClass.CLIPPING, "cholecystectomy")] == 1

    def test_total_equals_record_count(self):
        m = make_manifest(12, seed=4)
        assert sum(class_histogram(m).values()) == len(m.records)


class TestManifestIO:
    def test_round_trip(self, tmp_path):
        m = make_manifest(6, seed=5)
        path = tmp_path / "m.jsonl"
        save_manifest(m, path)
        loaded = load_manifest(path)
        assert len(loaded.records) == len(m.records)
        assert loaded.records[0] == m.records[0]
        assert loaded.schema_version == m.schema_version

    def test_duplicate_clip_id_rejected(self):
        m = Manifest(records=[rec(clip_id="x"), rec(clip_id="x")])
        with pytest.raises(ValueError, match="duplicate"):
            m.validate()

    def test_video_surgery_conflict_rejected(self):
        m = Manifest(records=[
            rec(clip_id="a", video_id="v", surgery="cholecystectomy"),
            rec(clip_id="b", video_id="v", surgery="nephrectomy"),
        ])
        with pytest.raises(ValueError, match="surgery"):
            m.validate()

    def test_fold_file_round_trip(self, tmp_path):
        assignment = FoldAssignment(fold_of_video={"v0": 0, "v1": 3}, seed=9)
        path = tmp_path / "folds.json"
        save_folds(assignment, path)
        loaded = load_folds(path)
        assert loaded == assignment
