"""CNF encoding of "a valid r-coloring of the length-n prefix exists".

Primary variable ``x(i, c) = i * r + c`` (``i`` 0-based position, ``c`` in
``1..r``) means position ``i`` may take color ``c``.  Only at-least-one-color
clauses are emitted; every other clause uses primary variables negatively,
so keeping the least true color per position preserves satisfaction.

For ``k = 1`` each configuration is forbidden directly.  For ``k >= 2`` a
trigger ``t(a, b, c)`` is implied by ``x(a,c) & x(b,c) & x(a+b,c)`` and at
most ``k - 1`` triggers per ``(a, c)`` may hold (sequential counter, or
pairwise for small at-most-one groups).
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional

from .core import Coloring, Enumeration, Prefix, StructuralError, is_valid_coloring
from .solver import Budget, BudgetExceeded, SolverStats, search_valid_coloring

__all__ = [
    "CnfInstance",
    "ModelError",
    "DecodeError",
    "encode",
    "write_dimacs",
    "dimacs_text",
    "parse_dimacs",
    "parse_model",
    "satisfies",
    "decode_model",
    "model_from_coloring",
    "dpll",
    "EquisatResult",
    "check_equisatisfiability",
]


class ModelError(ValueError):
    """The supplied model does not satisfy the instance."""


class DecodeError(ValueError):
    """Some position has no true color."""


@dataclass
class CnfInstance:
    r: int
    k: int
    n: int
    enumeration: Enumeration
    num_vars: int = 0
    clauses: list = field(default_factory=list)
    var_map: dict = field(default_factory=dict)       # (i, c) -> var
    trigger_map: dict = field(default_factory=dict)   # (a, b, c) -> var, positions
    counter_map: dict = field(default_factory=dict)   # (a, c) -> [aux vars]
    counter_kind: dict = field(default_factory=dict)  # (a, c) -> "sequential" | "pairwise"

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def x(self, i: int, c: int) -> int:
        return self.var_map[(i, c)]


def _clause(lits: Iterable[int]) -> Optional[tuple]:
    """Sorted clause without duplicates; None if it is a tautology."""
    s = set(lits)
    if any(-l in s for l in s):
        return None
    return tuple(sorted(s, key=lambda l: (abs(l), l)))


def _at_most(inst: CnfInstance, lits: list, bound: int, key) -> None:
    m = len(lits)
    if m <= bound:
        return
    if bound == 0:
        inst.clauses.extend((-l,) for l in lits)
        inst.counter_kind[key] = "unit"
        return
    if bound == 1 and m * (m - 1) // 2 <= 3 * m - 4:
        for p in range(m):
            for q in range(p + 1, m):
                inst.clauses.append((-lits[p], -lits[q]))
        inst.counter_kind[key] = "pairwise"
        return
    # sequential counter: s[p][j] <=> at least j+1 of lits[0..p] are true (upward direction)
    s = [[inst.new_var() for _ in range(bound)] for _ in range(m - 1)]
    inst.counter_map[key] = [v for row in s for v in row]
    inst.counter_kind[key] = "sequential"
    cl = inst.clauses
    cl.append((-lits[0], s[0][0]))
    for j in range(1, bound):
        cl.append((-s[0][j],))
    for p in range(1, m - 1):
        cl.append((-lits[p], s[p][0]))
        cl.append((-s[p - 1][0], s[p][0]))
        for j in range(1, bound):
            cl.append((-lits[p], -s[p - 1][j - 1], s[p][j]))
            cl.append((-s[p - 1][j], s[p][j]))
        cl.append((-lits[p], -s[p - 1][bound - 1]))
    cl.append((-lits[m - 1], -s[m - 2][bound - 1]))


def encode(r: int, k: int, n: int, enumeration: Optional[Enumeration] = None) -> CnfInstance:
    if r < 1 or k < 1 or n < 0:
        raise StructuralError("r, k must be positive and n nonnegative")
    enumeration = enumeration or Enumeration.natural()
    prefix = enumeration.prefix(n)
    inst = CnfInstance(r, k, n, enumeration)
    for i in range(n):
        for c in range(1, r + 1):
            inst.var_map[(i, c)] = inst.new_var()
    for i in range(n):
        inst.clauses.append(tuple(inst.x(i, c) for c in range(1, r + 1)))
    if k == 1:
        seen = set()
        for c in range(1, r + 1):
            for a, b, s in prefix.triples:
                cl = _clause((-inst.x(a, c), -inst.x(b, c), -inst.x(s, c)))
                if cl is not None and cl not in seen:
                    seen.add(cl)
                    inst.clauses.append(cl)
        return inst
    for a, row in enumerate(prefix.partners):
        for c in range(1, r + 1):
            triggers = []
            for b, s in row:
                t = inst.new_var()
                inst.trigger_map[(a, b, c)] = t
                triggers.append(t)
                inst.clauses.append(_clause((-inst.x(a, c), -inst.x(b, c), -inst.x(s, c))) + (t,))
            _at_most(inst, triggers, k - 1, (a, c))
    return inst


# -- DIMACS ------------------------------------------------------------------

def dimacs_text(inst: CnfInstance) -> str:
    out = io.BytesIO()
    write_dimacs(inst, out)
    return out.getvalue().decode("ascii")


def write_dimacs(inst: CnfInstance, sink: BinaryIO) -> None:
    """Write DIMACS CNF; positions in comment lines are 1-based."""
    lines = [f"c schur2d r={inst.r} k={inst.k} n={inst.n} enumeration={inst.enumeration.key()}"]
    lines += [f"c map {i + 1} {c} {v}" for (i, c), v in inst.var_map.items()]
    lines += [f"c trig {a + 1} {b + 1} {c} {v}" for (a, b, c), v in inst.trigger_map.items()]
    lines.append(f"p cnf {inst.num_vars} {len(inst.clauses)}")
    lines += [" ".join(map(str, cl)) + " 0" for cl in inst.clauses]
    sink.write(("\n".join(lines) + "\n").encode("ascii"))


def parse_dimacs(text: str):
    """Return ``(num_vars, clauses, comments)``; clauses may span lines."""
    num_vars = n_clauses = None
    clauses, comments, current = [], [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line)
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad header {line!r}")
            num_vars, n_clauses = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars is None:
        raise ValueError("missing 'p cnf' header")
    if n_clauses != len(clauses):
        raise ValueError(f"header announces {n_clauses} clauses, found {len(clauses)}")
    return num_vars, clauses, comments


def parse_model(text: str) -> dict:
    """Signed integers, optionally on ``v`` lines; ``s``/``c`` lines are ignored."""
    model = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line[0] in "cs":
            continue
        if line[0] == "v":
            line = line[1:]
        for tok in re.split(r"\s+", line.strip()):
            if not tok:
                continue
            lit = int(tok)
            if lit == 0:
                continue
            if model.get(abs(lit), lit > 0) != (lit > 0):
                raise ModelError(f"variable {abs(lit)} assigned both ways")
            model[abs(lit)] = lit > 0
    return model


def satisfies(clauses: Iterable, model: dict) -> Optional[tuple]:
    """First clause falsified by ``model`` (or left undecided), else None."""
    for cl in clauses:
        if not any(model.get(abs(l)) == (l > 0) for l in cl):
            return cl
    return None


def decode_model(inst: CnfInstance, model: dict) -> Coloring:
    missing = [v for v in range(1, inst.num_vars + 1) if v not in model]
    if missing:
        raise ModelError(f"model leaves {len(missing)} variables unassigned, e.g. {missing[0]}")
    bad = satisfies(inst.clauses, model)
    if bad is not None:
        raise ModelError(f"model falsifies clause {bad}")
    colors = []
    for i in range(inst.n):
        for c in range(1, inst.r + 1):
            if model[inst.x(i, c)]:
                colors.append(c)
                break
        else:
            raise DecodeError(f"position {i + 1} has no true color")
    return Coloring(inst.r, tuple(colors))


def model_from_coloring(inst: CnfInstance, coloring: Coloring) -> dict:
    """Extend a coloring to a full assignment (triggers and counters at their least values)."""
    col = coloring.colors
    model = {v: col[i] == c for (i, c), v in inst.var_map.items()}
    prefix = inst.enumeration.prefix(inst.n)
    for (a, b, c), t in inst.trigger_map.items():
        s = prefix.position[prefix.group.add(prefix.elements[a], prefix.elements[b])]
        model[t] = col[a] == col[b] == col[s] == c
    bound = inst.k - 1
    for (a, c), aux in inst.counter_map.items():
        trig = [model[inst.trigger_map[(a, b, c)]] for b, _ in prefix.partners[a]]
        running = 0
        for p in range(len(trig) - 1):
            running += trig[p]
            for j in range(bound):
                model[aux[p * bound + j]] = running >= j + 1
    for v in range(1, inst.num_vars + 1):
        model.setdefault(v, False)
    return model


# -- a small complete DPLL for tiny instances --------------------------------

def dpll(num_vars: int, clauses: list, max_nodes: Optional[int] = 200_000,
         order: Optional[list] = None) -> Optional[dict]:
    """Exhaustive DPLL with unit propagation; returns a model or None.

    Meant for instances with at most a few hundred variables.  Raises
    BudgetExceeded after ``max_nodes`` decisions.
    """
    watch = {}
    for idx, cl in enumerate(clauses):
        if not cl:
            return None
        for l in cl:
            watch.setdefault(l, []).append(idx)
    order = list(order or []) + [v for v in range(1, num_vars + 1) if v not in set(order or [])]
    assign = {}
    stats = SolverStats()

    def value(l):
        v = assign.get(abs(l))
        return None if v is None else v == (l > 0)

    def propagate(trail, lit):
        queue = [lit]
        while queue:
            l = queue.pop()
            cur = value(l)
            if cur is False:
                return False
            if cur is True:
                continue
            assign[abs(l)] = l > 0
            trail.append(abs(l))
            for idx in watch.get(-l, ()):
                unknown, sat = [], False
                for q in clauses[idx]:
                    vq = value(q)
                    if vq is True:
                        sat = True
                        break
                    if vq is None:
                        unknown.append(q)
                if sat:
                    continue
                if not unknown:
                    return False
                if len(unknown) == 1:
                    queue.append(unknown[0])
        return True

    def undo(trail):
        for v in trail:
            del assign[v]

    def solve():
        stats.nodes += 1
        if max_nodes is not None and stats.nodes > max_nodes:
            raise BudgetExceeded(f"DPLL node budget {max_nodes} exhausted", stats)
        var = next((v for v in order if v not in assign), None)
        if var is None:
            return satisfies(clauses, assign) is None
        for lit in (var, -var):
            trail = []
            if propagate(trail, lit) and solve():
                return True
            undo(trail)
        return False

    root = []
    for cl in clauses:
        if len(cl) == 1 and not propagate(root, cl[0]):
            return None
    if not solve():
        return None
    return {v: assign.get(v, False) for v in range(1, num_vars + 1)}


@dataclass
class EquisatResult:
    native_sat: bool
    cnf_sat: bool
    method: str  # "internal" | "external-model" | "external-unsat (unverified)"
    coloring: Optional[Coloring] = None

    @property
    def agree(self) -> bool:
        return self.native_sat == self.cnf_sat

    def __bool__(self):
        return self.agree


def check_equisatisfiability(r: int, k: int, n: int, enumeration: Optional[Enumeration] = None,
                             model: Optional[dict] = None, external_unsat: bool = False,
                             budget: Budget = Budget(), dpll_nodes: Optional[int] = 200_000) -> EquisatResult:
    """Compare native search with the satisfiability of the encoding.

    Satisfiability comes from an externally supplied model, an external UNSAT
    claim (recorded as unverified), or the internal DPLL.
    """
    enumeration = enumeration or Enumeration.natural()
    native = search_valid_coloring(r, k, n, enumeration, budget)
    inst = encode(r, k, n, enumeration)
    prefix = enumeration.prefix(n)
    if model is not None:
        coloring = decode_model(inst, model)
        if not is_valid_coloring(prefix, coloring, k):
            raise DecodeError("decoded coloring admits a witness")
        return EquisatResult(native is not None, True, "external-model", coloring)
    if external_unsat:
        return EquisatResult(native is not None, False, "external-unsat (unverified)")
    primaries = sorted(inst.var_map.values())
    found = dpll(inst.num_vars, inst.clauses, dpll_nodes, order=primaries)
    coloring = None
    if found is not None:
        coloring = decode_model(inst, found)
        if not is_valid_coloring(prefix, coloring, k):
            raise DecodeError("decoded coloring admits a witness")
    return EquisatResult(native is not None, found is not None, "internal", coloring)
