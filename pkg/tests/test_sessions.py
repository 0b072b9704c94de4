"""Sessions: stream append-only behavior, stage switches, growth, the store."""

from __future__ import annotations

import json
import threading

import pytest

from storyspace.agents import CharacterResponse
from storyspace.errors import BusyError, ConfigurationError, ContractError, NotFoundError
from storyspace.sessions import (
    GrowthProfile,
    MemoryStream,
    SessionStore,
    append_round,
    growth_profile,
    space_from_dict,
    space_to_dict,
)

from conftest import build_manifest, make_kb


def response(name="Ana", text="hello", stage=1, round_id=1):
    return CharacterResponse(character=name, text=text, stage=stage,
                             round_id=round_id, context_digest="d" * 8)


def stream_bytes(stream: MemoryStream) -> str:
    return json.dumps(stream.to_dict(), sort_keys=True)


class TestMemoryStream:
    def test_n_appends_have_increasing_seqs(self):
        stream = MemoryStream()
        for i in range(1, 6):
            append_round(stream, f"q{i}", [response(round_id=i)], stage=1)
        assert len(stream) == 5
        assert [e.seq for e in stream.entries] == [1, 2, 3, 4, 5]

    def test_fresh_stream_single_append(self):
        stream = MemoryStream()
        append_round(stream, "q", [response()], stage=1)
        assert len(stream) == 1

    def test_empty_responses_rejected(self):
        with pytest.raises(ContractError):
            MemoryStream().append("q", [], stage=1)

    def test_prior_entries_byte_stable_across_appends(self):
        stream = MemoryStream()
        prefixes = []
        for i in range(1, 8):
            stream.append(f"q{i}", [response(round_id=i)], stage=1)
            prefixes.append(stream_bytes(stream))
        for earlier, later in zip(prefixes, prefixes[1:]):
            earlier_entries = json.loads(earlier)["entries"]
            later_entries = json.loads(later)["entries"]
            assert later_entries[: len(earlier_entries)] == earlier_entries

    def test_interleaved_streams_grow_independently(self):
        a, b = MemoryStream(), MemoryStream()
        a.append("qa1", [response()], stage=1)
        before_b = stream_bytes(b)
        a.append("qa2", [response()], stage=1)
        assert stream_bytes(b) == before_b
        b.append("qb1", [response()], stage=2)
        assert len(a) == 2 and len(b) == 1

    def test_round_trip_serialization(self):
        stream = MemoryStream()
        stream.append("q1", [response(), response(name="Bo")], stage=1)
        stream.mark_switch(1, 3)
        stream.append("q2", [response(stage=3, round_id=2)], stage=3)
        rebuilt = MemoryStream.from_dict(stream.to_dict())
        assert stream_bytes(rebuilt) == stream_bytes(stream)


class TestStore:
    def _store(self, stages=2, clock=None, **kwargs):
        manifest = build_manifest([f"text {i}" for i in range(1, stages + 1)])
        if clock is not None:
            kwargs["clock"] = clock
        return SessionStore(manifest, seed=1, **kwargs)

    def test_open_space_empty_stream(self):
        store = self._store()
        space = store.open(1, ["Ana", "Bo"])
        assert space.stage == 1
        assert len(space.stream) == 0
        assert space.roster == ("Ana", "Bo")

    def test_unknown_stage_and_character(self):
        store = self._store(stages=2)
        with pytest.raises(NotFoundError):
            store.open(6)
        with pytest.raises(NotFoundError):
            store.open(1, ["Ana", "Ghost"])

    def test_roster_minimum_enforced(self):
        store = self._store(min_roster=2)
        with pytest.raises(ConfigurationError):
            store.open(1, ["Ana"])
        solo = self._store(min_roster=1)
        assert solo.open(1, ["Ana"]).roster == ("Ana",)

    def test_two_opens_are_isolated_sessions(self):
        store = self._store()
        s1, s2 = store.open(1), store.open(1)
        assert s1.session_id != s2.session_id
        s1.stream.append("q", [response()], stage=1)
        assert len(store.get(s2.session_id).stream) == 0

    def test_switch_preserves_stream_and_tags(self):
        store = self._store(stages=5)
        space = store.open(1)
        space.stream.append("q1", [response()], stage=space.stage)
        space.stream.append("q2", [response(round_id=2)], stage=space.stage)
        before = [e.stage for e in space.stream.entries]
        store.switch(space.session_id, 5)
        assert space.stage == 5
        assert [e.stage for e in space.stream.entries] == before == [1, 1]
        assert space.stream.markers[-1].from_stage == 1
        assert space.stream.markers[-1].to_stage == 5

    def test_switch_to_current_stage_is_noop_plus_marker(self):
        store = self._store()
        space = store.open(2)
        store.switch(space.session_id, 2)
        assert space.stage == 2
        assert space.stream.markers[-1].from_stage == 2
        assert space.stream.markers[-1].to_stage == 2

    def test_query_after_switch_tags_new_stage(self):
        store = self._store(stages=3)
        space = store.open(1)
        space.stream.append("q1", [response()], stage=space.stage)
        store.switch(space.session_id, 3)
        space.stream.append("q2", [response(stage=3, round_id=2)], stage=space.stage)
        assert [e.stage for e in space.stream.entries] == [1, 3]

    def test_expiry_with_fake_clock(self):
        now = [0.0]
        store = self._store(clock=lambda: now[0], idle_timeout=10.0)
        space = store.open(1)
        now[0] = 5.0
        store.get(space.session_id)  # touch
        now[0] = 14.0
        store.get(space.session_id)  # still alive: idle only 9s
        now[0] = 30.0
        with pytest.raises(NotFoundError, match="expired"):
            store.get(space.session_id)

    def test_busy_mode_rejects_concurrent_round(self):
        store = self._store(queue_mode="busy")
        space = store.open(1)
        entered = threading.Event()
        release = threading.Event()

        def hold():
            with store.lock(space.session_id):
                entered.set()
                release.wait(timeout=5)

        t = threading.Thread(target=hold)
        t.start()
        entered.wait(timeout=5)
        with pytest.raises(BusyError):
            with store.lock(space.session_id):
                pass
        release.set()
        t.join(timeout=5)

    def test_queue_mode_serializes(self):
        store = self._store(queue_mode="queue")
        space = store.open(1)
        order = []

        def worker(tag):
            with store.lock(space.session_id):
                order.append(f"{tag}-in")
                order.append(f"{tag}-out")

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=5)
        # entries and exits never interleave
        assert all(order[i].endswith("-in") == (i % 2 == 0) for i in range(len(order)))
        for i in range(0, len(order), 2):
            assert order[i].split("-")[0] == order[i + 1].split("-")[0]

    def test_space_snapshot_round_trip(self):
        store = self._store()
        space = store.open(2, ["Ana", "Bo"])
        space.stream.append("q", [response(stage=2)], stage=2)
        data = space_to_dict(space)
        rebuilt = space_from_dict(json.loads(json.dumps(data)))
        assert space_to_dict(rebuilt) == data


class TestGrowthProfile:
    def test_single_stage_normalized(self):
        kb, _ = make_kb(["only text"])
        profile = growth_profile(kb)
        assert profile.rates == (1.0,)
        assert profile.cumulative == (1.0,)

    def test_equal_mass_five_stages(self):
        slice_text = "x" * 100
        kb, _ = make_kb([slice_text] * 5, audio=["a" * 40] * 5, vision=["v" * 60] * 5)
        profile = growth_profile(kb)
        for rate in profile.rates:
            assert abs(rate - 0.2) < 1e-9
        assert profile.cumulative[-1] == 1.0
        assert all(b >= a for a, b in zip(profile.cumulative, profile.cumulative[1:]))

    def test_climax_stage_has_max_rate(self):
        # Stage 3 carries three times the novel mass of the others.
        slices = ["x" * 100, "x" * 100, "x" * 300, "x" * 100, "x" * 100]
        kb, _ = make_kb(slices, audio=["a" * 50] * 5, vision=["v" * 50] * 5)
        profile = growth_profile(kb)
        assert max(profile.rates) == profile.rates[2]
        total_mass = sum(len(s) + 100 for s in slices)
        assert abs(profile.rates[2] - (300 + 100) / total_mass) < 1e-12

    def test_rates_sum_to_one(self):
        kb, _ = make_kb(["abc", "defg hij", "klmnopqr stu vwx"])
        profile = growth_profile(kb)
        assert abs(sum(profile.rates) - 1.0) < 1e-9
        assert isinstance(profile, GrowthProfile)
