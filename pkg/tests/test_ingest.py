from __future__ import annotations

import json

import pytest

from taxolex.ingest import IngestConfig, IngestError, events_from_records, ingest, parse_time, segment_sessions


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_minimal_csv_with_custom_columns(tmp_path):
    path = write(tmp_path, "log.csv", "user,action\nu1,click\nu1,hover\nu1,click\n")
    log = ingest(path, IngestConfig(session_col="user", record_col="action"))
    assert len(log.sessions) == 1
    assert log.sessions[0].records == ["click", "hover", "click"]
    assert log.distinct_records == {"click", "hover"}


def test_time_sort_reassigns_ordinals(tmp_path):
    path = write(tmp_path, "log.csv", "session_id,record,t\ns,b,2020-01-01T00:00:02Z\ns,a,2020-01-01T00:00:01Z\ns,c,3\n")
    log = ingest(path, IngestConfig(time_col="t"))
    events = log.sessions[0].events
    assert [e.record for e in events] == ["c", "a", "b"]
    assert [e.ordinal for e in events] == [0, 1, 2]


def test_ties_keep_file_order(tmp_path):
    path = write(tmp_path, "log.csv", "session_id,record,t\ns,x,5\ns,y,5\ns,z,1\n")
    assert ingest(path, IngestConfig(time_col="t")).sessions[0].records == ["z", "x", "y"]


def test_missing_column(tmp_path):
    path = write(tmp_path, "log.csv", "session_id,action\ns,a\n")
    with pytest.raises(IngestError, match="record"):
        ingest(path)


def test_empty_file(tmp_path):
    with pytest.raises(IngestError, match="empty"):
        ingest(write(tmp_path, "log.csv", ""))


def test_bad_timestamp_strict_and_lenient(tmp_path):
    path = write(tmp_path, "log.csv", "session_id,record,t\ns,a,1\ns,b,yesterday\ns,c,3\n")
    with pytest.raises(IngestError) as info:
        ingest(path, IngestConfig(time_col="t"))
    assert info.value.line == 3
    log = ingest(path, IngestConfig(time_col="t", lenient=True))
    assert log.sessions[0].records == ["a", "c"]
    assert [r.line for r in log.rejected] == [3]


def test_json_and_ndjson(tmp_path):
    rows = [{"sid": "a", "ev": "x"}, {"sid": "b", "ev": "y"}, {"sid": "a", "ev": "z"}]
    config = IngestConfig(session_col="sid", record_col="ev")
    j = ingest(write(tmp_path, "log.json", json.dumps(rows)), config)
    n = ingest(write(tmp_path, "log.ndjson", "\n".join(map(json.dumps, rows)) + "\n"), config)
    for log in (j, n):
        assert [s.session_id for s in log.sessions] == ["a", "b"]
        assert log.session("a").records == ["x", "z"]


def test_malformed_ndjson_line(tmp_path):
    path = write(tmp_path, "log.ndjson", '{"session_id": "s", "record": "a"}\n{oops\n')
    with pytest.raises(IngestError) as info:
        ingest(path)
    assert info.value.line == 2
    assert ingest(path, IngestConfig(lenient=True)).n_events == 1


def test_parse_time():
    assert parse_time("1970-01-01T00:00:01Z") == 1000
    assert parse_time("1970-01-01T00:00:01") == 1000
    assert parse_time(42) == 42
    with pytest.raises(ValueError):
        parse_time("noon")


def _study(tmp_path, participants=3, tasks=4):
    lines = ["session_id,participant,task,record"]
    for p in range(participants):
        for t in range(tasks):
            for r in ("a", "b"):
                lines.append(f"p{p},p{p},t{t},{r}")
    return ingest(write(tmp_path, "study.csv", "\n".join(lines) + "\n"),
                  IngestConfig(participant_col="participant", task_col="task"))


def test_segment_by_participant(tmp_path):
    log = _study(tmp_path, participants=2, tasks=1)
    assert len(segment_sessions(log, "participant").sessions) == 2


def test_segment_by_participant_and_task(tmp_path):
    log = _study(tmp_path, participants=3, tasks=4)
    seg = segment_sessions(log, ["participant", "task"])
    assert len(seg.sessions) == 12
    assert seg.sessions[0].session_id == "p0/t0"
    assert all(len(s) == 2 and s.task is not None for s in seg.sessions)


def test_segment_constant_key(tmp_path):
    lines = "session_id,record,study\ns1,a,x\ns2,b,x\n"
    log = ingest(write(tmp_path, "c.csv", lines))
    seg = segment_sessions(log, "study")
    assert len(seg.sessions) == 1
    assert seg.sessions[0].records == ["a", "b"]


def test_segment_unknown_key():
    with pytest.raises(KeyError):
        segment_sessions(events_from_records({"s": ["a"]}), "nope")
