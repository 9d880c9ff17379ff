"""ASCII board maps and their compilation into scenario bundles.

Map DSL (hand-writable, one char per cell):

    ; comment
    #########
    #@.$...1#
    #.......#
    #########
    pushlimit 2
    hyp 1

`#` wall, `.` floor, `@` agent, `$` box, digits 1-9 goal markers. Rows may be
ragged; short rows are padded with walls. Cells are numbered row-major
starting at 1, including wall cells, so geometry survives serialization.
Directives follow the grid: `pushlimit N` (sokoban chain-push limit) and
`hyp d1,d2,..` (one hypothesis: box1 at digit d1's cell, box2 at d2's, ..).
Maps with a box are sokoban; without, navigation grids where each digit is
its own agent-position hypothesis.

Compiled sokoban allows pushing a contiguous line of up to `pushlimit` boxes
in one unit-cost action (`pushlimit 1` is classic single-push sokoban).
Cell emptiness is tracked with `clear_<cell>` facts (no box on the cell).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from .bundles import GRID_VOCAB, ScenarioBundle, Vocab
from .errors import ParseError
from .planning import register_heuristic, register_heuristic_probe
from .strips import Domain, FactSet, GroundAction, State

WALL, FLOOR, AGENT, BOX = "#", ".", "@", "$"
_GRID_CHARS = set(WALL + FLOOR + AGENT + BOX + "123456789")

_ARROWS = {"up": "^", "down": "v", "left": "<", "right": ">"}

SOKOBAN_VOCAB = Vocab(GRID_VOCAB.entries + (
    (r"push_1_(?P<dir>up|down|left|right)_b(?P<box>\d+)_(?P<from>\d+)",
     "pushed box {box} {dir}"),
    (r"push_(?P<k>\d+)_(?P<dir>up|down|left|right)_(?P<boxes>b\d+(?:_b\d+)*)_(?P<from>\d+)",
     "pushed {k} boxes {dir}"),
))


@dataclass(frozen=True)
class GridMap:
    """Navigation board: an agent and digit-labeled goal cells."""

    rows: int
    cols: int
    walls: frozenset[int]
    agent: int
    goal_cells: tuple[tuple[int, int], ...]  # (digit label, cell), by label

    def __post_init__(self):
        _check_board(self)
        for label, cell in self.goal_cells:
            if not 1 <= cell <= self.rows * self.cols or cell in self.walls:
                raise ValueError(f"goal {label} on wall or outside board: cell {cell}")


@dataclass(frozen=True)
class SokobanMap:
    """Sokoban board: agent, identified boxes, conjunctive destination goals."""

    rows: int
    cols: int
    walls: frozenset[int]
    agent: int
    boxes: tuple[int, ...]  # box b (1-based) starts at boxes[b-1]
    goal_cells: tuple[tuple[int, int], ...]
    hypotheses: tuple[tuple[int, ...], ...]  # per hypothesis: destination per box
    push_chain_limit: int = 1

    def __post_init__(self):
        _check_board(self)
        if self.push_chain_limit < 1:
            raise ValueError("push-chain-limit must be >= 1")
        n_floor = self.rows * self.cols - len(self.walls)
        if len(self.boxes) >= n_floor:
            raise ValueError("boxes exceed free cells (no room for the agent)")
        for cell in self.boxes:
            if cell in self.walls or not 1 <= cell <= self.rows * self.cols:
                raise ValueError(f"box on wall or outside board: cell {cell}")
        if len(set(self.boxes)) != len(self.boxes) or self.agent in self.boxes:
            raise ValueError("agent and boxes must occupy distinct cells")
        for hyp in self.hypotheses:
            if len(hyp) != len(self.boxes):
                raise ValueError("each hypothesis needs one destination per box")
            for cell in hyp:
                if cell in self.walls or not 1 <= cell <= self.rows * self.cols:
                    raise ValueError(f"destination on wall or outside board: {cell}")


def _check_board(board) -> None:
    if board.rows < 1 or board.cols < 1:
        raise ValueError("board must have positive dimensions")
    if not 1 <= board.agent <= board.rows * board.cols or board.agent in board.walls:
        raise ValueError(f"agent on wall or outside board: cell {board.agent}")


# ---------------------------------------------------------------------------
# geometry helpers (cells are 1-based, row-major)


def _rc(cell: int, cols: int) -> tuple[int, int]:
    return divmod(cell - 1, cols)


def _neighbor(cell: int, direction: str, rows: int, cols: int) -> int | None:
    r, c = _rc(cell, cols)
    if direction == "up":
        r -= 1
    elif direction == "down":
        r += 1
    elif direction == "left":
        c -= 1
    else:
        c += 1
    if not (0 <= r < rows and 0 <= c < cols):
        return None
    return r * cols + c + 1


def _manhattan(a: int, b: int, cols: int) -> int:
    ra, ca = _rc(a, cols)
    rb, cb = _rc(b, cols)
    return abs(ra - rb) + abs(ca - cb)


# ---------------------------------------------------------------------------
# map DSL


def parse_map(text: str, path: str | None = None) -> GridMap | SokobanMap:
    grid_rows: list[tuple[int, str]] = []
    directives: list[tuple[int, str]] = []
    grid_done = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.lstrip().startswith(";"):
            if grid_rows:
                grid_done = True
            continue
        if set(line) <= _GRID_CHARS:
            if grid_done:
                raise ParseError("grid rows must be contiguous", path, lineno)
            grid_rows.append((lineno, line))
        else:
            grid_done = True
            directives.append((lineno, line))
    if not grid_rows:
        raise ParseError("map has no grid rows", path)

    rows = len(grid_rows)
    cols = max(len(r) for _, r in grid_rows)
    walls: set[int] = set()
    agent: int | None = None
    boxes: list[int] = []
    digits: dict[int, int] = {}
    for r, (lineno, row) in enumerate(grid_rows):
        row = row.ljust(cols, WALL)
        for c, ch in enumerate(row):
            cell = r * cols + c + 1
            if ch == WALL:
                walls.add(cell)
            elif ch == AGENT:
                if agent is not None:
                    raise ParseError("more than one agent", path, lineno, c + 1)
                agent = cell
            elif ch == BOX:
                boxes.append(cell)
            elif ch.isdigit():
                label = int(ch)
                if label in digits:
                    raise ParseError(f"duplicate goal digit {label}", path, lineno, c + 1)
                digits[label] = cell
    if agent is None:
        raise ParseError("map has no agent (@)", path)

    push_limit = 1
    hyp_labels: list[tuple[int, ...]] = []
    for lineno, line in directives:
        parts = line.split()
        if parts[0] == "pushlimit":
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise ParseError("pushlimit needs a positive integer", path, lineno)
            push_limit = int(parts[1])
        elif parts[0] == "hyp":
            body = "".join(parts[1:])
            try:
                labels = tuple(int(t) for t in body.split(",") if t)
            except ValueError:
                raise ParseError(f"bad hyp labels {body!r}", path, lineno)
            for lab in labels:
                if lab not in digits:
                    raise ParseError(f"hyp references unknown digit {lab}", path, lineno)
            hyp_labels.append(labels)
        else:
            raise ParseError(f"unknown directive {parts[0]!r}", path, lineno)

    goal_cells = tuple(sorted(digits.items()))
    if not boxes:
        if push_limit != 1 or hyp_labels:
            raise ParseError("pushlimit/hyp directives need a box ($)", path)
        return GridMap(rows, cols, frozenset(walls), agent, goal_cells)

    if not hyp_labels:
        if len(boxes) > 1:
            raise ParseError("maps with several boxes need explicit hyp lines", path)
        hyp_labels = [(label,) for label, _ in goal_cells]
    hypotheses = tuple(tuple(digits[lab] for lab in labels) for labels in hyp_labels)
    return SokobanMap(rows, cols, frozenset(walls), agent, tuple(boxes),
                      goal_cells, hypotheses, push_limit)


def serialize_map(board: GridMap | SokobanMap) -> str:
    cells: dict[int, str] = {c: WALL for c in board.walls}
    cells[board.agent] = AGENT
    for label, cell in board.goal_cells:
        cells[cell] = str(label)
    if isinstance(board, SokobanMap):
        for cell in board.boxes:
            cells[cell] = BOX
    lines = []
    for r in range(board.rows):
        lines.append("".join(cells.get(r * board.cols + c + 1, FLOOR)
                             for c in range(board.cols)))
    if isinstance(board, SokobanMap):
        if board.push_chain_limit != 1:
            lines.append(f"pushlimit {board.push_chain_limit}")
        cell_to_label = {cell: label for label, cell in board.goal_cells}
        for hyp in board.hypotheses:
            lines.append("hyp " + ",".join(str(cell_to_label[c]) for c in hyp))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# compilation


def compile_grid(board: GridMap, name: str = "grid") -> ScenarioBundle:
    """Unit-cost navigation domain: at_cell_<k> facts, move_<dir>_<from>_<to>."""
    floor = [c for c in range(1, board.rows * board.cols + 1) if c not in board.walls]
    facts = frozenset(f"at_cell_{c}" for c in floor)
    actions = []
    for c in floor:
        for direction in ("up", "down", "left", "right"):
            n = _neighbor(c, direction, board.rows, board.cols)
            if n is None or n in board.walls:
                continue
            actions.append(GroundAction(
                name=f"move_{direction}_{c}_{n}",
                preconditions=frozenset({f"at_cell_{c}"}),
                add_effects=frozenset({f"at_cell_{n}"}),
                delete_effects=frozenset({f"at_cell_{c}"}),
                cost=Fraction(1)))
    domain = Domain(facts=facts, actions=tuple(actions))
    hypotheses = tuple(frozenset({f"at_cell_{cell}"}) for _, cell in board.goal_cells)
    return ScenarioBundle(
        name=name, domain=domain, initial=State(frozenset({f"at_cell_{board.agent}"})),
        goal_ids=tuple(f"g{i}" for i in range(1, len(hypotheses) + 1)),
        hypotheses=hypotheses, vocab=GRID_VOCAB, map_text=serialize_map(board))


def compile_sokoban(board: SokobanMap, name: str = "sokoban") -> ScenarioBundle:
    """Sokoban with identified boxes and chain pushes up to the map's limit."""
    rows, cols = board.rows, board.cols
    floor = [c for c in range(1, rows * cols + 1) if c not in board.walls]
    box_ids = range(1, len(board.boxes) + 1)
    facts = set()
    for c in floor:
        facts.add(f"at_cell_{c}")
        facts.add(f"clear_{c}")
        for b in box_ids:
            facts.add(f"box{b}_at_{c}")

    actions = []
    for c in floor:
        for direction in ("up", "down", "left", "right"):
            n = _neighbor(c, direction, rows, cols)
            if n is None or n in board.walls:
                continue
            actions.append(GroundAction(
                name=f"move_{direction}_{c}_{n}",
                preconditions=frozenset({f"at_cell_{c}", f"clear_{n}"}),
                add_effects=frozenset({f"at_cell_{n}"}),
                delete_effects=frozenset({f"at_cell_{c}"}),
                cost=Fraction(1)))
            # chains of k boxes in front of the agent, far cell box-free
            line = [c, n]
            for k in range(1, board.push_chain_limit + 1):
                nxt = _neighbor(line[-1], direction, rows, cols)
                if nxt is None or nxt in board.walls:
                    break
                line.append(nxt)
                for combo in permutations(box_ids, k):
                    pre = {f"at_cell_{c}", f"clear_{line[k + 1]}"}
                    add = {f"at_cell_{line[1]}", f"clear_{line[1]}"}
                    dele = {f"at_cell_{c}", f"clear_{line[k + 1]}"}
                    for j, b in enumerate(combo, start=1):
                        pre.add(f"box{b}_at_{line[j]}")
                        add.add(f"box{b}_at_{line[j + 1]}")
                        dele.add(f"box{b}_at_{line[j]}")
                    tag = "_".join(f"b{b}" for b in combo)
                    actions.append(GroundAction(
                        name=f"push_{k}_{direction}_{tag}_{c}",
                        preconditions=frozenset(pre),
                        add_effects=frozenset(add),
                        delete_effects=frozenset(dele),
                        cost=Fraction(1)))

    domain = Domain(facts=frozenset(facts), actions=tuple(actions))
    init = {f"at_cell_{board.agent}"}
    occupied = set(board.boxes)
    for b, cell in zip(box_ids, board.boxes):
        init.add(f"box{b}_at_{cell}")
    for c in floor:
        if c not in occupied:
            init.add(f"clear_{c}")
    hypotheses = tuple(
        frozenset(f"box{b}_at_{dest}" for b, dest in zip(box_ids, hyp))
        for hyp in board.hypotheses)
    return ScenarioBundle(
        name=name, domain=domain, initial=State(frozenset(init)),
        goal_ids=tuple(f"g{i}" for i in range(1, len(hypotheses) + 1)),
        hypotheses=hypotheses, vocab=SOKOBAN_VOCAB, map_text=serialize_map(board))


# ---------------------------------------------------------------------------
# board distance heuristics

_MOVE_RE = re.compile(r"move_(up|down|left|right)_(\d+)_(\d+)")
_AT_RE = re.compile(r"at_cell_(\d+)")
_BOX_RE = re.compile(r"box(\d+)_at_(\d+)")


def _derive_cols(domain: Domain) -> int | None:
    for a in domain.actions:
        m = _MOVE_RE.fullmatch(a.name)
        if m and m.group(1) == "down":
            return int(m.group(3)) - int(m.group(2))
        if m and m.group(1) == "up":
            return int(m.group(2)) - int(m.group(3))
    # single-row boards have only left/right moves; any width >= max cell works
    cells = [int(m.group(1)) for f in domain.facts
             if (m := _AT_RE.fullmatch(f)) is not None]
    return max(cells) if cells else None


def _is_grid_domain(domain: Domain) -> bool:
    return (all(_AT_RE.fullmatch(f) for f in domain.facts)
            and all(_MOVE_RE.fullmatch(a.name) for a in domain.actions)
            and bool(domain.facts))


def _is_board_domain(domain: Domain) -> bool:
    return any(_BOX_RE.fullmatch(f) for f in domain.facts) and _derive_cols(domain) is not None


def _board_distance(task) -> "callable":
    """Max over goal facts of the Manhattan distance the named piece (agent or
    box) still has to travel. Every action moves each piece at most one cell,
    so this is admissible on the compiled unit-cost boards."""
    cols = _derive_cols(task.domain)
    positive = [a.cost for a in task.domain.actions if a.cost > 0]
    step = min([Fraction(1)] + positive)
    agent_targets = []
    box_targets = []
    for f in task.goal:
        m = _AT_RE.fullmatch(f)
        if m:
            agent_targets.append(int(m.group(1)))
            continue
        m = _BOX_RE.fullmatch(f)
        if m:
            box_targets.append((int(m.group(1)), int(m.group(2))))
    if cols is None or (not agent_targets and not box_targets):
        return lambda state: 0

    def h(state: State) -> Fraction:
        best = 0
        agent_cell = None
        box_cells: dict[int, int] = {}
        for f in state.facts:
            m = _AT_RE.fullmatch(f)
            if m:
                agent_cell = int(m.group(1))
                continue
            m = _BOX_RE.fullmatch(f)
            if m:
                box_cells[int(m.group(1))] = int(m.group(2))
        for target in agent_targets:
            if agent_cell is not None:
                best = max(best, _manhattan(agent_cell, target, cols))
        for b, target in box_targets:
            if b in box_cells:
                best = max(best, _manhattan(box_cells[b], target, cols))
        return step * best

    return h


register_heuristic("grid-manhattan", _board_distance)
register_heuristic("sokoban-box-distance", _board_distance)
register_heuristic_probe("grid-manhattan", _is_grid_domain)
register_heuristic_probe("sokoban-box-distance", _is_board_domain)


# ---------------------------------------------------------------------------
# rendering


def render_board(bundle: ScenarioBundle) -> str:
    """ASCII board with the observed moves drawn as arrows. Needs map.txt."""
    if bundle.map_text is None:
        raise ParseError(f"bundle {bundle.name!r} has no map.txt to render")
    board = parse_map(bundle.map_text)
    rows = [list(line) for line in serialize_map(board).splitlines()
            if set(line) <= _GRID_CHARS and line]

    def put(cell: int, ch: str) -> None:
        r, c = _rc(cell, board.cols)
        if rows[r][c] == FLOOR:
            rows[r][c] = ch

    push_re = re.compile(r"push_(\d+)_(up|down|left|right)_(?:b\d+_?)+_?(\d+)")
    for obs in bundle.observations:
        m = _MOVE_RE.fullmatch(obs.action.name)
        if m:
            put(int(m.group(2)), _ARROWS[m.group(1)])
            continue
        m = push_re.fullmatch(obs.action.name)
        if m:
            put(int(m.group(3)), _ARROWS[m.group(2)].upper()
                if m.group(2) in ("left", "right") else _ARROWS[m.group(2)])
    legend = "@ start   ^v<> observed moves   digits goal cells"
    if isinstance(board, SokobanMap):
        legend += "   $ box"
    return "\n".join("".join(r) for r in rows) + "\n" + legend + "\n"
