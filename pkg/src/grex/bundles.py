"""Scenario bundle I/O.

A scenario bundle is a directory:

    domain.strips      grounded domain (required)
    init.state         initial fact set (required)
    hyps.dat           one goal conjunction per line (required)
    obs.dat            one action name per line (required, may be empty)
    priors.dat         one decimal per line, aligned with hyps.dat (optional)
    annotations.json   human ground-truth markers (optional)
    vocab.json         action-name pattern -> phrase template (optional)
    map.txt            board sketch for `grex render` (optional)

domain.strips is line-oriented and order-insensitive across sections:

    # comment
    fact <name>
    action <name> cost <c> pre <f,..> add <f,..> del <f,..>

Every parse/serialize pair here is a round-trip fixpoint.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import strips
from .errors import ParseError
from .strips import Domain, FactSet, GroundAction, State

_PRIOR_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ObservationStep:
    """One fully-observed step: the action taken and the state it produced."""

    index: int  # 1-based time step
    action: GroundAction
    resulting_state: State


@dataclass(frozen=True)
class AnnotationRecord:
    """Human ground truth: annotated observation indices per question, and one
    counterfactual action name per counterfactual goal."""

    why: Mapping[str, tuple[int, ...]]
    why_not: Mapping[str, tuple[int, ...]]
    counterfactual_actions: Mapping[str, str]


class Vocab:
    """Ordered action-name patterns mapped to phrase templates.

    Patterns are regexes with named groups; the first full match wins and its
    groups fill the template's `{slot}`s. Unmatched names fall back to
    "performed <name>".
    """

    def __init__(self, entries: Sequence[tuple[str, str]] = ()):
        self.entries = tuple(entries)
        self._compiled = [(re.compile(p), t) for p, t in self.entries]

    def render(self, action_name: str) -> str:
        for pattern, template in self._compiled:
            m = pattern.fullmatch(action_name)
            if m:
                return template.format(**m.groupdict())
        return f"performed {action_name}"

    def to_json(self) -> str:
        return json.dumps(dict(self.entries), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, path: str | None = None) -> "Vocab":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid vocab JSON: {e.msg}", path, e.lineno, e.colno)
        if not isinstance(raw, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in raw.items()):
            raise ParseError("vocab must be a JSON object of pattern -> template", path)
        for pattern in raw:
            try:
                re.compile(pattern)
            except re.error as e:
                raise ParseError(f"bad vocab pattern {pattern!r}: {e}", path)
        return cls(tuple(raw.items()))


GRID_VOCAB = Vocab((
    (r"move_(?P<dir>up|down|left|right)_(?P<from>\d+)_(?P<to>\d+)",
     "moved {dir} from cell {from} to cell {to}"),
))


@dataclass(frozen=True)
class ScenarioBundle:
    """Everything one goal-recognition scenario needs, replay-validated."""

    name: str
    domain: Domain
    initial: State
    goal_ids: tuple[str, ...]
    hypotheses: tuple[FactSet, ...]
    observations: tuple[ObservationStep, ...] = ()
    priors: tuple[float, ...] | None = None
    annotations: AnnotationRecord | None = None
    vocab: Vocab = Vocab()
    map_text: str | None = None
    path: Path | None = None

    def __post_init__(self):
        if len(self.goal_ids) != len(self.hypotheses):
            raise ValueError("goal_ids and hypotheses length mismatch")
        if self.priors is not None:
            if len(self.priors) != len(self.hypotheses):
                raise ValueError("priors and hypotheses length mismatch")
            if abs(sum(self.priors) - 1.0) > _PRIOR_SUM_TOL:
                raise ValueError(f"priors sum to {sum(self.priors)}, expected 1")
            if any(p < 0 for p in self.priors):
                raise ValueError("priors must be non-negative")

    @property
    def effective_priors(self) -> tuple[float, ...]:
        if self.priors is not None:
            return self.priors
        m = len(self.hypotheses)
        return tuple(1.0 / m for _ in range(m))

    def goal_index(self, goal_id: str) -> int:
        try:
            return self.goal_ids.index(goal_id)
        except ValueError:
            raise KeyError(f"unknown goal id {goal_id!r}; known: {self.goal_ids}") from None

    def hypothesis(self, goal_id: str) -> FactSet:
        return self.hypotheses[self.goal_index(goal_id)]

    def state_before(self, obs_index: int) -> State:
        """State preceding observation `obs_index` (1-based)."""
        if not 1 <= obs_index <= len(self.observations):
            raise IndexError(f"observation index {obs_index} out of range")
        if obs_index == 1:
            return self.initial
        return self.observations[obs_index - 2].resulting_state

    def replace(self, **changes) -> "ScenarioBundle":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# domain.strips


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def _fact_list(chunk: list[str], seen_facts: set[str], lineno: int,
               path: str | None, line_text: str) -> FactSet:
    names = [n for token in chunk for n in token.split(",") if n]
    for name in names:
        if name not in seen_facts:
            col = line_text.find(name) + 1
            raise ParseError(f"undeclared fact {name!r}", path, lineno, col or None)
    return frozenset(names)


def parse_domain(text: str, path: str | None = None) -> Domain:
    facts: set[str] = set()
    fact_lines: list[tuple[int, str]] = []
    action_lines: list[tuple[int, str]] = []
    for lineno, line in _content_lines(text):
        head = line.split(None, 1)[0]
        if head == "fact":
            fact_lines.append((lineno, line))
        elif head == "action":
            action_lines.append((lineno, line))
        else:
            raise ParseError(f"expected 'fact' or 'action', got {head!r}",
                             path, lineno, 1)

    for lineno, line in fact_lines:
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("fact line must be 'fact <name>'", path, lineno)
        name = parts[1]
        if name in facts:
            raise ParseError(f"duplicate declaration of fact {name!r}", path, lineno)
        try:
            strips.make_fact(name)
        except ValueError as e:
            raise ParseError(str(e), path, lineno)
        facts.add(name)

    actions: list[GroundAction] = []
    names: set[str] = set()
    for lineno, line in action_lines:
        parts = line.split()
        if len(parts) < 4 or parts[2] != "cost":
            raise ParseError("action line must be 'action <name> cost <c> "
                             "pre <f,..> add <f,..> del <f,..>'", path, lineno)
        name = parts[1]
        if name in names:
            raise ParseError(f"duplicate declaration of action {name!r}", path, lineno)
        try:
            cost = Fraction(parts[3])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad cost {parts[3]!r}", path, lineno,
                             line.find(parts[3]) + 1)
        rest = parts[4:]
        sections: dict[str, list[str]] = {}
        current: str | None = None
        for token in rest:
            if token in ("pre", "add", "del"):
                if token in sections:
                    raise ParseError(f"repeated section {token!r}", path, lineno)
                sections[token] = []
                current = token
            elif current is None:
                raise ParseError(f"unexpected token {token!r} before 'pre'",
                                 path, lineno, line.find(token) + 1)
            else:
                sections[current].append(token)
        if list(sections) != ["pre", "add", "del"]:
            raise ParseError("action needs 'pre', 'add', 'del' sections in order",
                             path, lineno)
        try:
            action = GroundAction(
                name=name,
                preconditions=_fact_list(sections["pre"], facts, lineno, path, line),
                add_effects=_fact_list(sections["add"], facts, lineno, path, line),
                delete_effects=_fact_list(sections["del"], facts, lineno, path, line),
                cost=cost,
            )
        except ValueError as e:
            raise ParseError(str(e), path, lineno)
        names.add(name)
        actions.append(action)

    return Domain(facts=frozenset(facts), actions=tuple(actions))


def serialize_domain(domain: Domain) -> str:
    lines = []
    for fact in sorted(domain.facts):
        lines.append(f"fact {fact}")
    for a in domain.sorted_actions:
        pre = ",".join(sorted(a.preconditions))
        add = ",".join(sorted(a.add_effects))
        dele = ",".join(sorted(a.delete_effects))
        lines.append(f"action {a.name} cost {a.cost} pre {pre} add {add} del {dele}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# init.state


def parse_state(text: str, domain: Domain, path: str | None = None) -> State:
    names: list[str] = []
    for lineno, line in _content_lines(text):
        for token in line.replace(",", " ").split():
            if token not in domain.facts:
                raise ParseError(f"undeclared fact {token!r}", path, lineno,
                                 line.find(token) + 1)
            names.append(token)
    return State(frozenset(names))


def serialize_state(state: State) -> str:
    return "\n".join(sorted(state.facts)) + "\n"


# ---------------------------------------------------------------------------
# hyps.dat


def parse_hypotheses(text: str, domain: Domain,
                     path: str | None = None) -> tuple[FactSet, ...]:
    hyps: list[FactSet] = []
    lines = text.splitlines()
    if lines and lines[-1] == "":
        lines = lines[:-1]
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if raw.lstrip().startswith("#"):
            continue
        if not line:
            raise ParseError("empty hypothesis line (goal identity is the line "
                             "number; blank lines are not allowed)", path, lineno)
        facts = [t.strip() for t in line.split(",")]
        if any(not t for t in facts):
            raise ParseError("empty fact in hypothesis", path, lineno)
        for t in facts:
            if t not in domain.facts:
                raise ParseError(f"undeclared fact {t!r}", path, lineno,
                                 raw.find(t) + 1)
        hyps.append(frozenset(facts))
    if not hyps:
        raise ParseError("no goal hypotheses", path)
    return tuple(hyps)


def serialize_hypotheses(hypotheses: Sequence[FactSet]) -> str:
    return "\n".join(",".join(sorted(h)) for h in hypotheses) + "\n"


# ---------------------------------------------------------------------------
# obs.dat


def parse_observations(text: str, domain: Domain, initial: State,
                       path: str | None = None) -> tuple[ObservationStep, ...]:
    steps: list[ObservationStep] = []
    state = initial
    index = 0
    for lineno, line in _content_lines(text):
        name = line.strip()
        index += 1
        action = domain.actions_by_name.get(name)
        if action is None:
            raise ParseError(f"unknown action {name!r} at step {index}", path, lineno)
        if not strips.applicable(action, state):
            missing = sorted(action.preconditions - state.facts)
            raise ParseError(f"action {name!r} not applicable at step {index} "
                             f"(missing {missing})", path, lineno)
        state = strips.apply(action, state)
        steps.append(ObservationStep(index=index, action=action, resulting_state=state))
    return tuple(steps)


def serialize_observations(observations: Sequence[ObservationStep]) -> str:
    if not observations:
        return ""
    return "\n".join(o.action.name for o in observations) + "\n"


# ---------------------------------------------------------------------------
# priors.dat


def parse_priors(text: str, count: int, path: str | None = None) -> tuple[float, ...]:
    values: list[float] = []
    for lineno, line in _content_lines(text):
        try:
            v = float(line)
        except ValueError:
            raise ParseError(f"bad prior {line!r}", path, lineno)
        if v < 0:
            raise ParseError(f"negative prior {v}", path, lineno)
        values.append(v)
    if len(values) != count:
        raise ParseError(f"{len(values)} priors for {count} hypotheses", path)
    if abs(sum(values) - 1.0) > _PRIOR_SUM_TOL:
        raise ParseError(f"priors sum to {sum(values)}, expected 1", path)
    return tuple(values)


def serialize_priors(priors: Sequence[float]) -> str:
    return "\n".join(repr(p) for p in priors) + "\n"


# ---------------------------------------------------------------------------
# annotations.json


def parse_annotations(text: str, goal_ids: Sequence[str], n_observations: int,
                      action_names: Iterable[str],
                      path: str | None = None) -> AnnotationRecord:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid annotations JSON: {e.msg}", path, e.lineno, e.colno)
    if not isinstance(raw, dict):
        raise ParseError("annotations must be a JSON object", path)
    known_actions = set(action_names)

    def indices(section: str) -> dict[str, tuple[int, ...]]:
        block = raw.get(section, {})
        if not isinstance(block, dict):
            raise ParseError(f"annotations[{section!r}] must be an object", path)
        out = {}
        for gid, idxs in block.items():
            if gid not in goal_ids:
                raise ParseError(f"unknown goal id {gid!r} in {section}", path)
            if (not isinstance(idxs, list) or not 1 <= len(idxs) <= 2
                    or not all(isinstance(i, int) for i in idxs)):
                raise ParseError(f"{section}[{gid!r}] must list 1-2 observation "
                                 "indices", path)
            for i in idxs:
                if not 1 <= i <= n_observations:
                    raise ParseError(f"{section}[{gid!r}]: index {i} outside "
                                     f"1..{n_observations}", path)
            out[gid] = tuple(idxs)
        return out

    cf = raw.get("counterfactual_actions", {})
    if not isinstance(cf, dict):
        raise ParseError("annotations['counterfactual_actions'] must be an object", path)
    for gid, name in cf.items():
        if gid not in goal_ids:
            raise ParseError(f"unknown goal id {gid!r} in counterfactual_actions", path)
        if not isinstance(name, str) or name not in known_actions:
            raise ParseError(f"counterfactual_actions[{gid!r}]: unknown action "
                             f"{name!r}", path)
    return AnnotationRecord(why=indices("why"), why_not=indices("why_not"),
                            counterfactual_actions=dict(cf))


def serialize_annotations(record: AnnotationRecord) -> str:
    payload = {
        "why": {g: list(v) for g, v in record.why.items()},
        "why_not": {g: list(v) for g, v in record.why_not.items()},
        "counterfactual_actions": dict(record.counterfactual_actions),
    }
    return json.dumps(payload, indent=2) + "\n"


# ---------------------------------------------------------------------------
# bundle directories


def load_bundle(path: str | Path) -> ScenarioBundle:
    path = Path(path)
    if not path.is_dir():
        raise ParseError(f"bundle directory not found: {path}")

    def read(name: str, required: bool = False) -> str | None:
        f = path / name
        if not f.exists():
            if required:
                raise ParseError(f"missing required bundle file {name}", str(path))
            return None
        return f.read_text(encoding="utf-8")

    domain = parse_domain(read("domain.strips", required=True),
                          str(path / "domain.strips"))
    initial = parse_state(read("init.state", required=True),
                          domain, str(path / "init.state"))
    hypotheses = parse_hypotheses(read("hyps.dat", required=True),
                                  domain, str(path / "hyps.dat"))
    goal_ids = tuple(f"g{i}" for i in range(1, len(hypotheses) + 1))
    observations = parse_observations(read("obs.dat", required=True), domain,
                                      initial, str(path / "obs.dat"))

    priors_text = read("priors.dat")
    priors = (parse_priors(priors_text, len(hypotheses), str(path / "priors.dat"))
              if priors_text is not None else None)

    vocab_text = read("vocab.json")
    vocab = (Vocab.from_json(vocab_text, str(path / "vocab.json"))
             if vocab_text is not None else Vocab())

    ann_text = read("annotations.json")
    annotations = None
    if ann_text is not None:
        annotations = parse_annotations(
            ann_text, goal_ids, len(observations),
            domain.actions_by_name, str(path / "annotations.json"))

    return ScenarioBundle(
        name=path.name, domain=domain, initial=initial, goal_ids=goal_ids,
        hypotheses=hypotheses, observations=observations, priors=priors,
        annotations=annotations, vocab=vocab, map_text=read("map.txt"), path=path)


def save_bundle(bundle: ScenarioBundle, path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "domain.strips").write_text(serialize_domain(bundle.domain), "utf-8")
    (path / "init.state").write_text(serialize_state(bundle.initial), "utf-8")
    (path / "hyps.dat").write_text(serialize_hypotheses(bundle.hypotheses), "utf-8")
    (path / "obs.dat").write_text(serialize_observations(bundle.observations), "utf-8")
    if bundle.priors is not None:
        (path / "priors.dat").write_text(serialize_priors(bundle.priors), "utf-8")
    if bundle.vocab.entries:
        (path / "vocab.json").write_text(bundle.vocab.to_json(), "utf-8")
    if bundle.annotations is not None:
        (path / "annotations.json").write_text(
            serialize_annotations(bundle.annotations), "utf-8")
    if bundle.map_text is not None:
        (path / "map.txt").write_text(bundle.map_text, "utf-8")
    return path
