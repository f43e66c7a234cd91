"""Exact computation of two-dimensional Schur numbers by backtracking.

Positions are colored in enumeration order.  For every position ``i`` and
color ``c`` the search keeps a trigger counter: the number of ``b`` in the
prefix such that ``x_i``, ``b`` and ``x_i + b`` are all colored ``c``.  A
``k``-witness exists exactly when some counter reaches ``k``.  Colors are
introduced in order of first occurrence, which picks one representative per
color-permutation orbit.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

from .core import Coloring, Enumeration, Prefix, StructuralError, is_valid_coloring

__all__ = [
    "BudgetExceeded",
    "Budget",
    "SolverStats",
    "SchurNumberResult",
    "SearchState",
    "search_valid_coloring",
    "count_valid_colorings",
    "compute_schur_number",
    "parallel_compute",
    "split_depth",
]


@dataclass
class SolverStats:
    nodes: int = 0
    backtracks: int = 0
    wall_time: float = 0.0
    workers: int = 1

    def merge(self, other: "SolverStats") -> None:
        self.nodes += other.nodes
        self.backtracks += other.backtracks

    def as_dict(self) -> dict:
        return {"nodes": self.nodes, "backtracks": self.backtracks,
                "wall_time": round(self.wall_time, 6), "workers": self.workers}


@dataclass(frozen=True)
class Budget:
    """Optional limits; ``None`` means unlimited.

    ``max_seconds`` bounds a whole call (a scan over ``n`` included);
    ``max_nodes`` bounds each single decision search.
    """

    max_nodes: Optional[int] = None
    max_seconds: Optional[float] = None
    until: Optional[float] = None  # absolute time.monotonic() deadline once started

    def started(self) -> "Budget":
        if self.until is not None or self.max_seconds is None:
            return self
        return replace(self, until=time.monotonic() + self.max_seconds)

    def deadline(self) -> Optional[float]:
        return self.started().until


class BudgetExceeded(RuntimeError):
    """The search stopped before it could decide the question.

    This is never a proof of absence.  ``stats`` covers the work done;
    ``certificate`` is the longest valid coloring found so far, if any.
    """

    def __init__(self, message: str, stats: SolverStats, certificate: Optional[Coloring] = None):
        super().__init__(message)
        self.stats = stats
        self.certificate = certificate


@dataclass
class SchurNumberResult:
    r: int
    k: int
    status: str  # "exact" | "lower_bound" | "vacuous"
    value: int
    certificate: Optional[Coloring]
    stats: SolverStats = field(default_factory=SolverStats)
    enumeration: Enumeration = field(default_factory=Enumeration.natural)

    @property
    def is_exact(self) -> bool:
        return self.status == "exact"

    def summary(self) -> str:
        if self.status == "exact":
            return f"S({self.r},{self.k}) = {self.value} (exact)"
        if self.status == "lower_bound":
            return f"S({self.r},{self.k}) >= {self.value + 1} (lower bound)"
        return f"S({self.r},{self.k}): vacuous (finite enumeration exhausted at {self.value})"


class SearchState:
    """Partial coloring of a prefix plus incrementally maintained counters.

    ``push`` colors the next position; it either returns True and keeps the
    new state, or returns False and leaves the state untouched.
    """

    def __init__(self, prefix: Prefix, r: int, k: int):
        if r < 1 or k < 1:
            raise StructuralError("r and k must be positive")
        self.prefix, self.r, self.k = prefix, r, k
        n = prefix.n
        closing = [[] for _ in range(n)]
        for t in prefix.triples:
            closing[max(t)].append(t)
        # a configuration is decided exactly when its last element is colored
        self.closing = [tuple(c) for c in closing]
        self.colors = [0] * n
        self.counters = [[0] * (r + 1) for _ in range(n)]
        self.max_color = 0
        self.depth = 0
        self._trail = []  # per depth: (bumped owners, previous max_color)

    def push(self, c: int) -> bool:
        m = self.depth
        if m >= self.prefix.n:
            raise StructuralError("prefix already fully colored")
        if not 1 <= c <= self.r:
            raise StructuralError(f"color {c} outside 1..{self.r}")
        col, cnt, lim = self.colors, self.counters, self.k
        col[m] = c
        bumped = []
        for i, j, s in self.closing[m]:
            if col[i] == c and col[j] == c and col[s] == c:
                row = cnt[i]
                row[c] += 1
                bumped.append(i)
                if row[c] >= lim:
                    for b in bumped:
                        cnt[b][c] -= 1
                    col[m] = 0
                    return False
        self._trail.append((bumped, self.max_color))
        if c > self.max_color:
            self.max_color = c
        self.depth = m + 1
        return True

    def pop(self) -> int:
        m = self.depth - 1
        bumped, prev_max = self._trail.pop()
        c = self.colors[m]
        for b in bumped:
            self.counters[b][c] -= 1
        self.colors[m] = 0
        self.max_color = prev_max
        self.depth = m
        return c

    def recount(self) -> list:
        """Counters recomputed from scratch over the colored positions."""
        out = [[0] * (self.r + 1) for _ in range(self.prefix.n)]
        col = self.colors
        for i, j, s in self.prefix.triples:
            c = col[i]
            if c and col[j] == c and col[s] == c:
                out[i][c] += 1
        return out

    def coloring(self) -> Coloring:
        return Coloring(self.r, tuple(self.colors[: self.depth]))


class _Search:
    """Depth-first search over one subtree; shared by solve and count."""

    def __init__(self, state: SearchState, budget: Budget, symmetry: bool = True):
        self.state = state
        self.symmetry = symmetry
        self.stats = SolverStats()
        self.max_nodes = budget.max_nodes
        self.deadline = budget.deadline()

    def _tick(self):
        st = self.stats
        st.nodes += 1
        if self.max_nodes is not None and st.nodes > self.max_nodes:
            raise BudgetExceeded(f"node budget {self.max_nodes} exhausted", st)
        if self.deadline is not None and st.nodes & 1023 == 0 and time.monotonic() > self.deadline:
            raise BudgetExceeded("time budget exhausted", st)

    def _choices(self):
        st = self.state
        top = min(st.max_color + 1, st.r) if self.symmetry else st.r
        return range(1, top + 1)

    def solve(self) -> bool:
        state = self.state
        if state.depth == state.prefix.n:
            return True
        self._tick()
        for c in self._choices():
            if state.push(c):
                if self.solve():
                    return True
                state.pop()
            self.stats.backtracks += 1
        return False

    def count(self) -> int:
        """Number of valid completions, each canonical one weighted by its orbit size."""
        state = self.state
        if state.depth == state.prefix.n:
            if not self.symmetry:
                return 1
            return math.perm(state.r, state.max_color)
        self._tick()
        total = 0
        for c in self._choices():
            if state.push(c):
                total += self.count()
                state.pop()
        return total


def _state_for(r, k, n, enumeration, start=()) -> SearchState:
    state = SearchState(_prefix(enumeration, n), r, k)
    for c in start:
        if not state.push(c):
            raise StructuralError(f"start assignment {start} is not valid")
    return state


@lru_cache(maxsize=64)
def _prefix(enumeration: Enumeration, n: int) -> Prefix:
    return enumeration.prefix(n)


def search_valid_coloring(r: int, k: int, n: int, enumeration: Optional[Enumeration] = None,
                          budget: Budget = Budget(), stats: Optional[SolverStats] = None,
                          symmetry: bool = True) -> Optional[Coloring]:
    """A valid coloring of the length-``n`` prefix, or None if provably none exists.

    Raises BudgetExceeded when the budget runs out before a decision.
    """
    enumeration = enumeration or Enumeration.natural()
    if n < 0:
        raise StructuralError("n must be nonnegative")
    t0 = time.monotonic()
    search = _Search(_state_for(r, k, n, enumeration), budget, symmetry)
    try:
        found = search.solve()
    finally:
        search.stats.wall_time = time.monotonic() - t0
        if stats is not None:
            stats.merge(search.stats)
            stats.wall_time += search.stats.wall_time
    if not found:
        return None
    coloring = search.state.coloring()
    assert is_valid_coloring(search.state.prefix, coloring, k)
    return coloring


def count_valid_colorings(r: int, k: int, n: int, enumeration: Optional[Enumeration] = None,
                          symmetry: bool = True, budget: Budget = Budget()) -> int:
    """Number of functions ``prefix -> {1..r}`` with no ``k``-witness.

    With ``symmetry`` only first-occurrence-canonical colorings are visited and
    each stands for ``r!/(r-u)!`` colorings, ``u`` its number of colors.
    """
    enumeration = enumeration or Enumeration.natural()
    search = _Search(_state_for(r, k, n, enumeration), budget, symmetry)
    return search.count()


def _finite_length(enumeration: Enumeration, max_n: int) -> int:
    if enumeration.is_finite:
        return min(max_n, len(enumeration.elements))
    return max_n


def compute_schur_number(r: int, k: int, max_n: int, enumeration: Optional[Enumeration] = None,
                         budget: Budget = Budget(), start_n: int = 1) -> SchurNumberResult:
    """Scan ``n = start_n, start_n + 1, ...`` for the first length with no valid coloring.

    ``start_n`` > 1 is only sound when the caller knows valid colorings exist
    below it; the certificate at ``start_n - 1`` is then searched first.
    """
    enumeration = enumeration or Enumeration.natural()
    if max_n < 1:
        raise StructuralError("max_n must be positive")
    t0 = time.monotonic()
    budget = budget.started()
    stats = SolverStats()
    last = n = max(start_n, 1) - 1
    best = search_valid_coloring(r, k, last, enumeration, budget, stats)
    if best is None:
        raise StructuralError(f"start_n={start_n} is above the Schur number")
    limit = _finite_length(enumeration, max_n)
    status = None
    try:
        for n in range(last + 1, limit + 1):
            found = search_valid_coloring(r, k, n, enumeration, budget, stats)
            if found is None:
                status = "exact"
                break
            best = found
    except BudgetExceeded as exc:
        exc.stats = stats
        exc.certificate = best
        stats.wall_time = time.monotonic() - t0
        raise
    stats.wall_time = time.monotonic() - t0
    if status == "exact":
        return SchurNumberResult(r, k, "exact", n, best, stats, enumeration)
    if limit < max_n:
        return SchurNumberResult(r, k, "vacuous", limit, best, stats, enumeration)
    return SchurNumberResult(r, k, "lower_bound", limit, best, stats, enumeration)


# -- parallel driver ---------------------------------------------------------

def split_depth(r: int, workers: int, n: int) -> int:
    """Smallest ``s`` with ``r**s >= 8 * workers``, capped at ``n``."""
    s = 0
    while r ** s < 8 * workers and s < n:
        s += 1
    return s


def _roots(r, k, n, enumeration, depth):
    """Canonical valid colorings of the first ``depth`` positions, in lexicographic order."""
    state = _state_for(r, k, n, enumeration)
    out = []

    def walk():
        if state.depth == depth:
            out.append(tuple(state.colors[:depth]))
            return
        for c in range(1, min(state.max_color + 1, r) + 1):
            if state.push(c):
                walk()
                state.pop()

    walk()
    return out


def _solve_subtree(args):
    r, k, n, enumeration, root, budget = args
    search = _Search(_state_for(r, k, n, enumeration, root), budget)
    try:
        found = search.solve()
    except BudgetExceeded as exc:
        return "budget", None, exc.stats
    return ("sat" if found else "unsat"), (tuple(search.state.colors) if found else None), search.stats


def _parallel_search(pool, workers, r, k, n, enumeration, budget, stats) -> Optional[Coloring]:
    depth = split_depth(r, workers, n)
    roots = _roots(r, k, n, enumeration, depth)
    stats.nodes += len(roots)
    futures = [pool.submit(_solve_subtree, (r, k, n, enumeration, root, budget)) for root in roots]
    answer = None
    exhausted = False
    # results are consumed in subtree order so the certificate does not depend on scheduling
    for fut in futures:
        if answer is not None:
            fut.cancel()
            continue
        verdict, colors, sub = fut.result()
        stats.merge(sub)
        if verdict == "sat":
            answer = Coloring(r, colors)
        elif verdict == "budget":
            exhausted = True
    if answer is not None:
        return answer
    if exhausted:
        raise BudgetExceeded("budget exhausted in a subtree", stats)
    return None


def parallel_compute(r: int, k: int, max_n: int, enumeration: Optional[Enumeration] = None,
                     workers: int = 1, budget: Budget = Budget()) -> SchurNumberResult:
    """Same answer as :func:`compute_schur_number`, work split over subtrees."""
    if workers < 1:
        raise StructuralError("workers must be positive")
    if workers == 1:
        return compute_schur_number(r, k, max_n, enumeration, budget)
    enumeration = enumeration or Enumeration.natural()
    t0 = time.monotonic()
    budget = budget.started()
    stats = SolverStats(workers=workers)
    best = Coloring(r, ())
    limit = _finite_length(enumeration, max_n)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        try:
            for n in range(1, limit + 1):
                found = _parallel_search(pool, workers, r, k, n, enumeration, budget, stats)
                if found is None:
                    stats.wall_time = time.monotonic() - t0
                    return SchurNumberResult(r, k, "exact", n, best, stats, enumeration)
                best = found
        except BudgetExceeded as exc:
            stats.wall_time = time.monotonic() - t0
            raise BudgetExceeded(str(exc), stats, best) from None
    stats.wall_time = time.monotonic() - t0
    status = "vacuous" if limit < max_n else "lower_bound"
    return SchurNumberResult(r, k, status, limit, best, stats, enumeration)
