"""Grounded STRIPS world model: facts, actions, states, tasks, plans.

Facts are interned strings (no lifted schemata); states are immutable fact
sets; goal satisfaction is a conjunctive subset test. Action costs are
`fractions.Fraction` so plan-cost comparisons and tie detection stay exact.
All types are value-semantic and hashable, safe to share between workers.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator

from .errors import DomainMismatchError, NotApplicableError

FactSet = frozenset[str]

_RESERVED_TOKENS = {"fact", "action", "cost", "pre", "add", "del"}


def make_fact(name: str) -> str:
    """Validate and intern a fact token."""
    if not name or any(c.isspace() for c in name):
        raise ValueError(f"invalid fact name: {name!r}")
    if name in _RESERVED_TOKENS:
        raise ValueError(f"fact name {name!r} is a reserved keyword")
    return sys.intern(name)


def fact_set(names: Iterable[str]) -> FactSet:
    return frozenset(make_fact(n) for n in names)


@dataclass(frozen=True)
class GroundAction:
    """A grounded action with positive preconditions and add/delete effects."""

    name: str
    preconditions: FactSet
    add_effects: FactSet
    delete_effects: FactSet
    cost: Fraction = Fraction(1)

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"invalid action name: {self.name!r}")
        if self.add_effects & self.delete_effects:
            overlap = sorted(self.add_effects & self.delete_effects)
            raise ValueError(f"action {self.name}: add/delete overlap on {overlap}")
        if not isinstance(self.cost, Fraction):
            object.__setattr__(self, "cost", Fraction(self.cost))
        if self.cost < 0:
            raise ValueError(f"action {self.name}: negative cost {self.cost}")

    def facts(self) -> FactSet:
        return self.preconditions | self.add_effects | self.delete_effects


@dataclass(frozen=True)
class State:
    """An immutable set of true facts."""

    facts: FactSet

    def __contains__(self, fact: str) -> bool:
        return fact in self.facts

    def __iter__(self) -> Iterator[str]:
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def satisfies(self, goal: FactSet) -> bool:
        return goal <= self.facts


def applicable(action: GroundAction, state: State) -> bool:
    """True iff all preconditions hold in `state`."""
    return action.preconditions <= state.facts


def apply(action: GroundAction, state: State) -> State:
    """Apply `action` to `state`; raises NotApplicableError if it cannot fire."""
    if not applicable(action, state):
        missing = sorted(action.preconditions - state.facts)
        raise NotApplicableError(f"action {action.name}: unmet preconditions {missing}")
    return State((state.facts - action.delete_effects) | action.add_effects)


@dataclass(frozen=True)
class Domain:
    """A fact universe plus a finite grounded action set."""

    facts: FactSet
    actions: tuple[GroundAction, ...]

    def __post_init__(self):
        seen: dict[str, GroundAction] = {}
        for act in self.actions:
            if act.name in seen:
                raise ValueError(f"duplicate action name: {act.name}")
            seen[act.name] = act
            unknown = act.facts() - self.facts
            if unknown:
                raise DomainMismatchError(
                    f"action {act.name} references undeclared facts: {sorted(unknown)}")

    @cached_property
    def actions_by_name(self) -> dict[str, GroundAction]:
        return {a.name: a for a in self.actions}

    @cached_property
    def sorted_actions(self) -> tuple[GroundAction, ...]:
        # Fixed iteration order; the planner's tie-breaking relies on it.
        return tuple(sorted(self.actions, key=lambda a: a.name))

    def check_state(self, state: State) -> None:
        unknown = state.facts - self.facts
        if unknown:
            raise DomainMismatchError(f"state contains undeclared facts: {sorted(unknown)}")

    def applicable(self, action: GroundAction, state: State) -> bool:
        """Membership-checked variant of the module-level `applicable`."""
        self.check_state(state)
        if action.facts() - self.facts:
            raise DomainMismatchError(
                f"action {action.name} does not belong to this domain")
        return applicable(action, state)

    def apply(self, action: GroundAction, state: State) -> State:
        if not self.applicable(action, state):
            missing = sorted(action.preconditions - state.facts)
            raise NotApplicableError(f"action {action.name}: unmet preconditions {missing}")
        return apply(action, state)


@dataclass(frozen=True)
class PlanningTask:
    """Domain + initial state + conjunctive goal (goal ⊆ state means done)."""

    domain: Domain
    initial: State
    goal: FactSet

    def __post_init__(self):
        self.domain.check_state(self.initial)
        unknown = self.goal - self.domain.facts
        if unknown:
            raise DomainMismatchError(f"goal contains undeclared facts: {sorted(unknown)}")

    def goal_satisfied(self, state: State) -> bool:
        return state.satisfies(self.goal)


@dataclass(frozen=True)
class Plan:
    """An ordered action sequence with its summed cost."""

    steps: tuple[GroundAction, ...]
    total_cost: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        summed = sum((s.cost for s in self.steps), Fraction(0))
        if self.total_cost != summed:
            raise ValueError(f"plan cost {self.total_cost} != sum of step costs {summed}")

    @classmethod
    def of(cls, steps: Iterable[GroundAction]) -> "Plan":
        steps = tuple(steps)
        return cls(steps, sum((s.cost for s in steps), Fraction(0)))

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PlanValidation:
    """Outcome of validate_plan. `failure_index` is the first offending step
    (0-based), or len(steps) when every step fired but the goal check failed."""

    valid: bool
    failure_index: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.valid


def validate_plan(task: PlanningTask, plan: Plan) -> PlanValidation:
    """Replay `plan` from task.initial; check applicability then the goal."""
    state = task.initial
    for i, step in enumerate(plan.steps):
        if not applicable(step, state):
            return PlanValidation(False, i, f"step {i} ({step.name}) not applicable")
        state = apply(step, state)
    if not task.goal_satisfied(state):
        return PlanValidation(False, len(plan.steps), "goal not satisfied in final state")
    return PlanValidation(True)
