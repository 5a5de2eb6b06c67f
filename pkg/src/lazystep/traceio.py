"""Trace files: whole traces as JSON, live traces as newline-delimited JSON.

A live file starts with a header record, continues with one record per step
and ends with a footer carrying the verdict.  Readers can poll a file that
is still being written and pick up complete lines only.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import IO, Optional, Union

from .errors import TraceFormatError
from .pipeline import Step, Trace

LIVE_FORMAT = "lazystep-live/1"
PathLike = Union[str, os.PathLike]


def _check_trace(d) -> Trace:
    if not isinstance(d, dict):
        raise TraceFormatError("trace must be a JSON object")
    for key in ("source", "verdict", "steps"):
        if key not in d:
            raise TraceFormatError(f"trace lacks {key!r}")
    if not isinstance(d["steps"], list):
        raise TraceFormatError("steps must be a list")
    try:
        trace = Trace.from_json(d)
    except (KeyError, TypeError, ValueError) as e:
        raise TraceFormatError(f"malformed step: {e}") from e
    _check_steps(trace.steps)
    return trace


def _check_steps(steps: list[Step]) -> None:
    for i, s in enumerate(steps):
        if s.index != i:
            raise TraceFormatError(f"step {i} carries index {s.index}")
        for side in (s.before, s.after):
            for a, b in side.spans:
                if not 0 <= a <= b <= len(side.text):
                    raise TraceFormatError(f"span {a}-{b} outside the text of step {i}")


def dumps(trace: Trace) -> str:
    return json.dumps(trace.to_json(), ensure_ascii=False, indent=1)


def loads(text: str) -> Trace:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"not JSON: {e}") from e
    return _check_trace(d)


def write_json(trace: Trace, path: PathLike) -> None:
    Path(path).write_text(dumps(trace) + "\n", encoding="utf-8")


class LiveWriter:
    """Append-only writer; every record is flushed as soon as it is written."""

    def __init__(self, path: PathLike, source: str, meta: Optional[dict] = None):
        self.fh: IO[str] = open(path, "w", encoding="utf-8")
        self._write({"format": LIVE_FORMAT, "source": source, "meta": meta or {}})

    def _write(self, record: dict) -> None:
        self.fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        self.fh.flush()

    def step(self, step: Step) -> None:
        self._write({"step": step.to_json()})

    def finish(self, verdict: str, meta: Optional[dict] = None) -> None:
        self._write({"verdict": verdict, "meta": meta or {}})
        self.fh.close()

    def __enter__(self) -> "LiveWriter":
        return self

    def __exit__(self, *exc) -> None:
        if not self.fh.closed:
            self.fh.close()


def write_ndjson(trace: Trace, path: PathLike) -> None:
    w = LiveWriter(path, trace.source, {})
    for s in trace.steps:
        w.step(s)
    w.finish(trace.verdict, trace.meta)


class LiveReader:
    """Incremental reader for a live file; ``poll`` returns newly completed steps."""

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self.offset = 0
        self.buffer = ""
        self.source: Optional[str] = None
        self.meta: dict = {}
        self.steps: list[Step] = []
        self.verdict: Optional[str] = None

    @property
    def finished(self) -> bool:
        return self.verdict is not None

    def poll(self) -> list[Step]:
        with open(self.path, encoding="utf-8") as fh:
            fh.seek(self.offset)
            chunk = fh.read()
            self.offset = fh.tell()
        self.buffer += chunk
        *lines, self.buffer = self.buffer.split("\n")
        fresh = []
        for line in lines:
            if line.strip():
                fresh += self._record(line)
        return fresh

    def _record(self, line: str) -> list[Step]:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"bad live record: {e}") from e
        if self.source is None:
            if rec.get("format") != LIVE_FORMAT:
                raise TraceFormatError("live trace lacks its header")
            self.source, self.meta = str(rec.get("source", "")), dict(rec.get("meta", {}))
            return []
        if self.finished:
            raise TraceFormatError("record after the final verdict")
        if "step" in rec:
            try:
                step = Step.from_json(rec["step"])
            except (KeyError, TypeError, ValueError) as e:
                raise TraceFormatError(f"malformed step: {e}") from e
            _check_steps(self.steps + [step])
            self.steps.append(step)
            return [step]
        if "verdict" in rec:
            self.verdict = str(rec["verdict"])
            self.meta.update(rec.get("meta", {}))
            return []
        raise TraceFormatError("unknown live record")

    def trace(self) -> Trace:
        return Trace(self.source or "", list(self.steps), self.verdict or "running", dict(self.meta))


def read_ndjson(path: PathLike) -> Trace:
    r = LiveReader(path)
    r.poll()
    if r.source is None:
        raise TraceFormatError("empty live trace")
    return r.trace()


def is_live(path: PathLike) -> bool:
    return str(path).endswith(".ndjson")


def load(path: PathLike) -> Trace:
    try:
        if is_live(path):
            return read_ndjson(path)
        return loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise TraceFormatError(str(e)) from e


def save(trace: Trace, path: PathLike) -> None:
    if is_live(path):
        write_ndjson(trace, path)
    else:
        write_json(trace, path)
