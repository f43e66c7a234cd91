"""Finite block families with separated sums.

A block family is a list of finite sets ``B_1, ..., B_d`` of positive
integers such that ``(B_i + B_j) & B_m`` is empty unless ``i == j == m``,
and every ``j``-coloring of ``B_j`` has a monochromatic configuration with
``|B| = j``.  Block ``j + 1`` is a prefix of the zero residue class modulo
``x_q + 1`` taken beyond index ``2q``, where ``q`` is the largest index
already used.

Sets here are residue-class tails of the naturals, so intersections are
again residue-class tails (by the Chinese remainder theorem).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .core import Coloring, Enumeration
from .solver import Budget, BudgetExceeded, compute_schur_number, search_valid_coloring

__all__ = [
    "SchurSetHandle",
    "SchurNumberProvider",
    "Block",
    "BlockFamily",
    "construct_block_family",
    "verify_disjoint_sums",
    "verify_forcing",
    "forcing_counterexample",
    "verify_sum_partner_locality",
    "diagonal_pseudo_intersection",
    "almost_containment_report",
    "DEFAULT_SURROGATES",
]

# Unproven upper guesses for levels the desk solver cannot settle; families
# built with them are flagged ``surrogate``.
DEFAULT_SURROGATES = {(3, 3): 128, (4, 4): 512}


def _crt(r1, m1, r2, m2):
    """Solve x = r1 (mod m1), x = r2 (mod m2); None if inconsistent."""
    g = math.gcd(m1, m2)
    if (r2 - r1) % g:
        return None
    lcm = m1 // g * m2
    t = ((r2 - r1) // g * pow(m1 // g, -1, m2 // g)) % (m2 // g) if m2 // g > 1 else 0
    return (r1 + m1 * t) % lcm, lcm


@dataclass(frozen=True)
class SchurSetHandle:
    """``{x > above : x = residue (mod modulus)}`` with a provenance label."""

    modulus: int = 1
    residue: int = 0
    above: int = 0
    descriptor: str = "natural"

    @classmethod
    def naturals(cls) -> "SchurSetHandle":
        return cls()

    @classmethod
    def residue_tail(cls, modulus: int, residue: int = 0, above: int = 0) -> "SchurSetHandle":
        return cls(modulus, residue % modulus, above, f"residue {residue} mod {modulus} above {above}")

    def __contains__(self, x: int) -> bool:
        return x > self.above and x % self.modulus == self.residue

    def intersect(self, other: "SchurSetHandle") -> Optional["SchurSetHandle"]:
        sol = _crt(self.residue, self.modulus, other.residue, other.modulus)
        if sol is None:
            return None
        res, mod = sol
        return SchurSetHandle(mod, res, max(self.above, other.above),
                              f"({self.descriptor}) & ({other.descriptor})")

    def tail(self, above: int) -> "SchurSetHandle":
        return SchurSetHandle(self.modulus, self.residue, max(self.above, above),
                              f"({self.descriptor}) above {above}")

    def is_subset_of(self, other: "SchurSetHandle") -> bool:
        first = self.element(1)
        return self.modulus % other.modulus == 0 and first in other

    def enumeration(self) -> Enumeration:
        if (self.modulus, self.residue, self.above) == (1, 0, 0):
            return Enumeration.natural()
        return Enumeration.residue_tail(self.modulus, self.residue, self.above)

    def element(self, i: int) -> int:
        """The ``i``-th element in increasing order, 1-based."""
        return self.enumeration().element(i)

    def index_of(self, x: int) -> int:
        if x not in self:
            raise ValueError(f"{x} is not in {self.descriptor}")
        return (x - self.element(1)) // self.modulus + 1


def _shape(enumeration: Enumeration) -> Enumeration:
    """Additively isomorphic representative: ``{tM, (t+1)M, ...}`` becomes ``{t, t+1, ...}``."""
    if enumeration.source != "residue" or enumeration.residue != 0:
        return enumeration
    t = enumeration.element(1) // enumeration.modulus
    return Enumeration.natural() if t == 1 else Enumeration.residue_tail(1, 0, t - 1)


class SchurNumberProvider:
    """Supplies S(r, k) for an enumeration: exact when the solver finishes in budget, else a surrogate.

    ``surrogates`` maps ``(r, k)`` or ``(r, k, enumeration_key)`` to an
    upper guess.  A surrogate smaller than a later exact value is an error.
    """

    def __init__(self, surrogates: Optional[dict] = None, budget: Budget = Budget(max_seconds=30),
                 max_n: int = 4096):
        self.surrogates = dict(surrogates or {})
        self.budget = budget
        self.max_n = max_n
        self.exact = {}

    def _surrogate(self, r, k, key):
        return self.surrogates.get((r, k, key), self.surrogates.get((r, k)))

    def __call__(self, r: int, k: int, enumeration: Enumeration):
        """Return ``(value, is_surrogate)``."""
        shape = _shape(enumeration)
        key = (r, k, shape.key())
        surrogate = self._surrogate(r, k, shape.key())
        if key not in self.exact:
            try:
                res = compute_schur_number(r, k, self.max_n, shape, self.budget)
            except BudgetExceeded:
                if surrogate is None:
                    raise
                return surrogate, True
            if not res.is_exact:
                if surrogate is None:
                    raise BudgetExceeded(f"S({r},{k}) exceeds max_n={self.max_n}", res.stats,
                                         res.certificate)
                return surrogate, True
            self.exact[key] = res.value
        value = self.exact[key]
        if surrogate is not None and surrogate < value:
            raise ValueError(f"surrogate {surrogate} for S({r},{k}) is below the exact value {value}")
        return value, False


@dataclass
class Block:
    elements: tuple
    modulus: int
    residue: int
    prefix_length: int
    surrogate: bool
    source: SchurSetHandle

    def as_dict(self) -> dict:
        return {"modulus": self.modulus, "residue": self.residue, "prefixLength": self.prefix_length,
                "surrogate": self.surrogate, "elements": list(self.elements)}


@dataclass
class BlockFamily:
    blocks: list = field(default_factory=list)
    requested_depth: int = 0
    failure: Optional[str] = None

    @property
    def depth(self) -> int:
        return len(self.blocks)

    @property
    def complete(self) -> bool:
        return self.depth == self.requested_depth

    @property
    def union(self) -> frozenset:
        return frozenset(x for b in self.blocks for x in b.elements)

    def sets(self) -> list:
        return [frozenset(b.elements) for b in self.blocks]

    def as_document(self) -> dict:
        doc = {"depth": self.depth, "requestedDepth": self.requested_depth,
               "blocks": [b.as_dict() for b in self.blocks]}
        if self.failure:
            doc["failure"] = self.failure
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "BlockFamily":
        blocks = [Block(tuple(b["elements"]), int(b["modulus"]), int(b["residue"]),
                        int(b["prefixLength"]), bool(b["surrogate"]),
                        SchurSetHandle.residue_tail(int(b["modulus"]), int(b["residue"])))
                  for b in doc["blocks"]]
        return cls(blocks, int(doc.get("requestedDepth", len(blocks))), doc.get("failure"))


def construct_block_family(depth: int, base: SchurSetHandle = SchurSetHandle.naturals(),
                           provider: Optional[SchurNumberProvider] = None) -> BlockFamily:
    """Build ``B_1, ..., B_depth`` over ``base``, always taking the zero residue class.

    A provider failure stops the construction; the partial family records
    the reason in ``failure``.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    provider = provider or SchurNumberProvider(DEFAULT_SURROGATES)
    family = BlockFamily(requested_depth=depth)
    source, modulus = base, 1
    q = 0
    for level in range(1, depth + 1):
        if level > 1:
            x_q = base.element(q)
            modulus = x_q + 1
            source = base.tail(base.element(2 * q)).intersect(SchurSetHandle.residue_tail(modulus, 0))
            if source is None:
                family.failure = f"level {level}: empty zero class modulo {modulus}"
                return family
        enum = source.enumeration()
        try:
            p, surrogate = provider(level, level, enum)
        except BudgetExceeded as exc:
            family.failure = f"level {level}: {exc}"
            return family
        elements = enum.take(p)
        family.blocks.append(Block(elements, modulus, 0, p, surrogate, source))
        q = max(q, base.index_of(elements[-1]))
    return family


def _sumset(a, b) -> set:
    return {x + y for x in a for y in b}


@dataclass
class DisjointSumsReport:
    entries: list  # (i, j, m, sorted intersection), 1-based block indices

    @property
    def passed(self) -> bool:
        return all(bool(hit) == (i == j == m) for i, j, m, hit in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if bool(e[3]) != (e[0] == e[1] == e[2])]

    def __bool__(self):
        return self.passed


def verify_disjoint_sums(family: BlockFamily) -> DisjointSumsReport:
    sets = family.sets()
    entries = []
    for i, bi in enumerate(sets):
        for j, bj in enumerate(sets):
            s = _sumset(bi, bj)
            for m, bm in enumerate(sets):
                entries.append((i + 1, j + 1, m + 1, sorted(s & bm)))
    return DisjointSumsReport(entries)


def forcing_counterexample(family: BlockFamily, j: int, budget: Budget = Budget()) -> Optional[Coloring]:
    """A ``j``-coloring of ``B_j`` with no ``j``-witness, or None if there is none."""
    if not 1 <= j <= family.depth:
        raise ValueError(f"block index {j} outside 1..{family.depth}")
    elements = sorted(family.blocks[j - 1].elements)
    return search_valid_coloring(j, j, len(elements), Enumeration.explicit(elements), budget)


def verify_forcing(family: BlockFamily, j: int, budget: Budget = Budget()) -> bool:
    """Every ``j``-coloring of ``B_j`` has a monochromatic configuration with ``|B| = j``."""
    return forcing_counterexample(family, j, budget) is None


def verify_sum_partner_locality(family: BlockFamily) -> bool:
    """For ``a`` in ``B_n`` and ``b`` in the union with ``a + b`` in the union, ``b`` lies in ``B_n``."""
    union = family.union
    for block in family.sets():
        for a in block:
            for b in union:
                if a + b in union and b not in block:
                    return False
    return True


def diagonal_pseudo_intersection(chain: list, provider: Optional[SchurNumberProvider] = None):
    """Blocks ``B_n`` = first S(n, n) elements of ``V_n`` for a decreasing chain; returns ``(family, W)``."""
    if not chain:
        raise ValueError("chain must be nonempty")
    for outer, inner in zip(chain, chain[1:]):
        if not inner.is_subset_of(outer):
            raise ValueError(f"chain is not decreasing: {inner.descriptor} not in {outer.descriptor}")
    provider = provider or SchurNumberProvider(DEFAULT_SURROGATES)
    family = BlockFamily(requested_depth=len(chain))
    for n, v in enumerate(chain, start=1):
        enum = v.enumeration()
        p, surrogate = provider(n, n, enum)
        family.blocks.append(Block(enum.take(p), v.modulus, v.residue, p, surrogate, v))
    return family, family.union


def almost_containment_report(family: BlockFamily, chain: list) -> list:
    """Per ``n``: ``(n, W - V_n, ok)`` with ``ok`` meaning ``W - V_n`` lies in earlier blocks."""
    union = family.union
    out = []
    for n, v in enumerate(chain, start=1):
        outside = sorted(x for x in union if x not in v)
        earlier = set().union(*family.sets()[: n - 1])
        out.append((n, outside, set(outside) <= earlier))
    return out
