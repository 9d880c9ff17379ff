"""Cost-optimal forward search over planning tasks.

A* with admissible heuristics; with the `blind` heuristic this degenerates to
uniform-cost search. Ties on f are broken lexicographically by the name of the
action that generated the node, then by insertion order, so the returned plan
(and therefore the first action of any counterfactual plan) is deterministic.
An optional seed replaces the lexicographic key with a keyed hash, giving a
different but still deterministic tie order.

Planner instances memoize results per (initial facts, goal) pair; the goal
recognizer re-plans from every observed state, and suffix plans repeat, so the
cache is the main performance lever.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import BudgetExhaustedError, GrexError, UnsolvableError
from .strips import Domain, FactSet, Plan, PlanningTask, State

SOLVED = "solved"
UNSOLVABLE = "unsolvable"
BUDGET_EXHAUSTED = "budget-exhausted"

# A heuristic maps a state to an admissible lower bound on remaining cost.
Heuristic = Callable[[State], Fraction | int]
HeuristicFactory = Callable[[PlanningTask], Heuristic]

_REGISTRY: dict[str, HeuristicFactory] = {}


def register_heuristic(name: str, factory: HeuristicFactory) -> None:
    """Register a heuristic factory under `name` (overwrites silently)."""
    _REGISTRY[name] = factory


def heuristic_ids() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def resolve_heuristic(name: str, task: PlanningTask) -> Heuristic:
    if name == "auto":
        name = auto_heuristic_id(task.domain)
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise GrexError(f"unknown heuristic {name!r}; known: {heuristic_ids()}") from None
    return factory(task)


def auto_heuristic_id(domain: Domain) -> str:
    """Pick the strongest registered heuristic that applies to this domain."""
    for name in ("sokoban-box-distance", "grid-manhattan"):
        probe = _REGISTRY.get(name)
        if probe is not None and _registry_accepts(name, domain):
            return name
    return "goal-count-admissible"


_ACCEPTS: dict[str, Callable[[Domain], bool]] = {}


def _registry_accepts(name: str, domain: Domain) -> bool:
    accepts = _ACCEPTS.get(name)
    return accepts is not None and accepts(domain)


def register_heuristic_probe(name: str, accepts: Callable[[Domain], bool]) -> None:
    """Attach a domain-shape probe used by `auto` heuristic selection."""
    _ACCEPTS[name] = accepts


def _blind(task: PlanningTask) -> Heuristic:
    return lambda state: 0


def _goal_count(task: PlanningTask) -> Heuristic:
    # 0/1 indicator, scaled so it stays admissible when a scenario overrides
    # costs below 1 (identical to the plain indicator on unit-cost domains).
    positive = [a.cost for a in task.domain.actions if a.cost > 0]
    unit = min(positive) if positive else Fraction(0)
    step = min(Fraction(1), unit)
    goal = task.goal

    def h(state: State) -> Fraction:
        return Fraction(0) if goal <= state.facts else step

    return h


register_heuristic("blind", _blind)
register_heuristic("goal-count-admissible", _goal_count)


@dataclass(frozen=True)
class Budget:
    """Per-call search limits. Exhaustion is an outcome, not a crash."""

    max_expansions: int = 1_000_000
    max_seconds: float = 60.0


@dataclass(frozen=True)
class SearchResult:
    plan: Optional[Plan]
    status: str  # SOLVED / UNSOLVABLE / BUDGET_EXHAUSTED
    expanded: int
    elapsed: float

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _tie_key(action_name: str, seed: int | None) -> str:
    if seed is None:
        return action_name
    digest = hashlib.blake2b(f"{seed}:{action_name}".encode(), digest_size=8)
    return digest.hexdigest()


def _search(task: PlanningTask, h: Heuristic, budget: Budget,
            seed: int | None) -> SearchResult:
    start = time.perf_counter()
    initial = task.initial
    if task.goal_satisfied(initial):
        return SearchResult(Plan.of(()), SOLVED, 0, time.perf_counter() - start)

    actions = task.domain.sorted_actions
    counter = itertools.count()
    g_best: dict[FactSet, Fraction] = {initial.facts: Fraction(0)}
    parent: dict[FactSet, tuple[FactSet, int]] = {}  # child -> (parent facts, action idx)
    open_heap: list = [(h(initial) + 0, "", next(counter), Fraction(0), initial.facts)]
    expanded = 0

    while open_heap:
        _, _, _, g, facts = heapq.heappop(open_heap)
        if g > g_best.get(facts, g):
            continue  # stale entry superseded by a cheaper path
        state = State(facts)
        if task.goal_satisfied(state):
            return SearchResult(_extract(task, parent, facts), SOLVED,
                                expanded, time.perf_counter() - start)
        expanded += 1
        if expanded > budget.max_expansions:
            return SearchResult(None, BUDGET_EXHAUSTED, expanded,
                                time.perf_counter() - start)
        if expanded % 256 == 0 and time.perf_counter() - start > budget.max_seconds:
            return SearchResult(None, BUDGET_EXHAUSTED, expanded,
                                time.perf_counter() - start)
        for idx, action in enumerate(actions):
            if not action.preconditions <= facts:
                continue
            succ = (facts - action.delete_effects) | action.add_effects
            g2 = g + action.cost
            old = g_best.get(succ)
            if old is not None and old <= g2:
                continue
            g_best[succ] = g2
            parent[succ] = (facts, idx)
            f = g2 + h(State(succ))
            heapq.heappush(open_heap, (f, _tie_key(action.name, seed),
                                       next(counter), g2, succ))

    return SearchResult(None, UNSOLVABLE, expanded, time.perf_counter() - start)


def _extract(task: PlanningTask, parent: dict, facts: FactSet) -> Plan:
    actions = task.domain.sorted_actions
    steps = []
    while facts in parent:
        facts, idx = parent[facts]
        steps.append(actions[idx])
    steps.reverse()
    return Plan.of(steps)


class Planner:
    """Optimal planner with a per-instance (initial, goal) result cache.

    The cache deliberately ignores the heuristic: admissible heuristics all
    return optimal plans, and the recognizer uses a single heuristic per run.
    Use a fresh Planner when byte-identical plans across heuristics matter.
    Cache access is lock-protected, so instances may be shared by threads.
    """

    def __init__(self, heuristic: str = "auto", budget: Budget | None = None,
                 seed: int | None = None):
        self.heuristic = heuristic
        self.budget = budget or Budget()
        self.seed = seed
        self._cache: dict[tuple[FactSet, FactSet], SearchResult] = {}
        self._lock = threading.Lock()

    def plan(self, task: PlanningTask, heuristic: str | None = None,
             budget: Budget | None = None) -> SearchResult:
        key = (task.initial.facts, task.goal)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        h = resolve_heuristic(heuristic or self.heuristic, task)
        result = _search(task, h, budget or self.budget, self.seed)
        if result.status != BUDGET_EXHAUSTED:
            with self._lock:
                self._cache[key] = result
        return result

    def plan_cost(self, task: PlanningTask, heuristic: str | None = None,
                  budget: Budget | None = None) -> Fraction:
        """Optimal cost from task.initial to task.goal; raises on failure."""
        result = self.plan(task, heuristic, budget)
        if result.status == UNSOLVABLE:
            raise UnsolvableError(f"goal {sorted(task.goal)} unreachable")
        if result.status == BUDGET_EXHAUSTED:
            raise BudgetExhaustedError(
                f"budget exhausted after {result.expanded} expansions")
        assert result.plan is not None
        return result.plan.total_cost

    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)
