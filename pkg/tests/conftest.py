from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from streammatch.engine import Engine
from streammatch.query import QueryGraph, QueryPlan, build_plan, parse_query
from streammatch.stream import Snapshot, read_events

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass
class WorkedExample:
    labels: dict[int, int]
    query: QueryGraph
    plan: QueryPlan
    sections: dict[str, list[str]]

    def engine(self, matcher: str = "iso", **kw) -> Engine:
        eng = Engine(self.query, matcher, vertex_labels=self.labels, plan=self.plan, **kw)
        eng.declare_vertices(range(10))
        return eng

    def snapshots(self) -> list[Snapshot]:
        lines = self.sections["initial"] + self.sections["t1"] + self.sections["t2"]
        ev = list(read_events(lines))
        init, t1, t2 = ev[:10], ev[10:13], ev[13:]
        # t2's deletes name edges by triplet; resolve them by hand against the initial load
        seq_of = {e.triplet: e.seq for e in init}
        from dataclasses import replace

        t2_del = [replace(e, target=seq_of[e.triplet]) for e in t2 if e.kind.value == "delete"]
        t2_ins = [e for e in t2 if e.kind.value == "insert"]
        return [
            Snapshot(0, init, [], initial=True),
            Snapshot(1, t1, []),
            Snapshot(2, t2_ins, t2_del),
        ]


def load_worked_example() -> WorkedExample:
    sections: dict[str, list[str]] = {}
    cur = None
    for line in (FIXTURES / "worked_example.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            cur = line.strip("[]")
            sections[cur] = []
            continue
        assert cur is not None
        sections[cur].append(line)
    labels = {int(a): int(b) for a, b in (ln.split() for ln in sections["vertices"])}
    query = parse_query("\n".join(sections["query"]))
    return WorkedExample(labels, query, build_plan(query, None, root=0), sections)


@pytest.fixture
def worked() -> WorkedExample:
    return load_worked_example()


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
