"""Executable fixtures: schemas, seed data, rule documents, scenario suite.

Two fixture worlds ship with the gateway:

* ``playground``, the full evaluation scenario: children, a toy-chest and
  a sandbox, governed by six rules (read everything except birthdays; a toy
  in use stays where it is; age-gated toys with the age computed server-side
  and never revealed; anyone may add toys, place children and move them).

* ``demo``, a deliberately small schema (sandbox(name, toy),
  toys(toy, ageLimit), children(name, age, emšo), toychest(id, toy)) used
  by the rewriter golden tests and the signed-request walkthrough.

The clock is pinned so age computations are deterministic; one fixture
child turns exactly six on the pinned day, which exercises the `<=`
boundary of the age rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path

from ..backend import BackendError, SqliteAdapter
from ..ela import ElaDocument, parse_ela
from ..gateway import GatewayConfig, process_request

PINNED_CLOCK = datetime(2012, 7, 15, 12, 0, 0)

PLAYGROUND_TABLES = ("children", "toychest", "sandbox")
DEMO_TABLES = ("children", "toys", "sandbox", "toychest")


def data_text(name: str) -> str:
    return resources.files(__package__).joinpath("data", name).read_text("utf-8")


def data_bytes(name: str) -> bytes:
    return resources.files(__package__).joinpath("data", name).read_bytes()


def data_file(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("data", name)))


def load_playground_ela() -> ElaDocument:
    return parse_ela(data_bytes("playground_ela.xml"))


def load_demo_ela() -> ElaDocument:
    return parse_ela(data_bytes("demo_ela.xml"))


def seed_playground(adapter: SqliteAdapter, force: bool = False) -> None:
    _seed(adapter, "playground_ddl.sql", "playground_seed.sql", PLAYGROUND_TABLES, force)


def seed_demo(adapter: SqliteAdapter, force: bool = False) -> None:
    _seed(adapter, "demo_ddl.sql", "demo_seed.sql", DEMO_TABLES, force)


def _seed(
    adapter: SqliteAdapter, ddl: str, seed: str, tables: tuple[str, ...], force: bool
) -> None:
    existing = set(adapter.list_tables())
    clashes = existing.intersection(tables)
    if clashes and not force:
        raise BackendError(
            f"schema already seeded (found {sorted(clashes)}); use force to re-seed"
        )
    if clashes:
        # reverse declaration order so FK-referencing tables drop first
        drops = "".join(
            f"DROP TABLE IF EXISTS {adapter.default_schema}.{t};" for t in reversed(tables)
        )
        adapter.run_script(drops)
    adapter.run_script(data_text(ddl))
    adapter.run_script(data_text(seed))


def playground_adapter(database: str = ":memory:", clock=None) -> SqliteAdapter:
    """A seeded playground backend with the pinned clock."""
    adapter = SqliteAdapter(database, clock=clock or (lambda: PINNED_CLOCK))
    seed_playground(adapter)
    return adapter


# --- scenario suite -----------------------------------------------------------


@dataclass
class ScenarioStep:
    name: str
    passed: bool
    detail: str


@dataclass
class ScenarioReport:
    steps: list[ScenarioStep] = field(default_factory=list)
    envelopes: list[dict] = field(default_factory=list)
    privacy_violations: list[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return not self.privacy_violations and all(s.passed for s in self.steps)

    def summary(self) -> str:
        lines = [
            f"{'PASS' if s.passed else 'FAIL'}  {s.name}" + ("" if s.passed else f"  ({s.detail})")
            for s in self.steps
        ]
        for violation in self.privacy_violations:
            lines.append(f"FAIL  privacy  ({violation})")
        lines.append("suite: " + ("PASS" if self.all_passed else "FAIL"))
        return "\n".join(lines)


def scenario_steps() -> dict:
    return json.loads(data_text("scenarios/playground_rules.json"))


def scenario_suite(config: GatewayConfig | None = None) -> ScenarioReport:
    """Exercise the six playground rules with allow and deny cases.

    Runs against a fresh seeded in-memory backend unless *config* is given.
    """
    if config is None:
        config = GatewayConfig(ela=load_playground_ela(), adapter=playground_adapter())
    spec = scenario_steps()
    report = ScenarioReport()
    for step in spec["steps"]:
        envelope = process_request(dict(step["request"]), config)
        report.envelopes.append(envelope)
        problem = _check_expectation(step["expect"], envelope)
        report.steps.append(
            ScenarioStep(step["name"], passed=problem is None, detail=problem or "ok")
        )
    forbidden = spec.get("forbidden_response_strings", [])
    for i, envelope in enumerate(report.envelopes):
        text = json.dumps(envelope, ensure_ascii=False)
        for needle in forbidden:
            if needle in text:
                report.privacy_violations.append(
                    f"response {i + 1} leaks protected value {needle!r}"
                )
    return report


def _check_expectation(expect: dict, envelope: dict) -> str | None:
    if envelope["OK"] != expect["ok"]:
        return f"expected OK={expect['ok']}, got {envelope['OK']} ({envelope['Feedback']})"
    if "feedback_prefix" in expect and not envelope["Feedback"].startswith(
        expect["feedback_prefix"]
    ):
        return f"expected feedback starting {expect['feedback_prefix']!r}, got {envelope['Feedback']!r}"
    if "rows" in expect:
        got = len(envelope["Results"][0]["Rows"])
        if got != expect["rows"]:
            return f"expected {expect['rows']} row(s), got {got}"
    if "affected" in expect:
        for i, want in enumerate(expect["affected"], start=1):
            needle = f"statement {i}: {want} row(s) affected"
            if needle not in envelope["Feedback"]:
                return f"expected {needle!r} in feedback {envelope['Feedback']!r}"
    if "value_present" in expect:
        text = json.dumps(envelope["Results"], ensure_ascii=False)
        if expect["value_present"] not in text:
            return f"expected value {expect['value_present']!r} in results"
    if "executed_contains" in expect:
        executed = " ".join(r["ExecutedSQL"] for r in envelope["Results"])
        for needle in expect["executed_contains"]:
            if needle not in executed:
                return f"expected {needle!r} in ExecutedSQL"
    return None
