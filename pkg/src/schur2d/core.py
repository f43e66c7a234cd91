"""Group arithmetic, enumerations, colorings and Schur configurations.

A *configuration* over a prefix ``X`` of an enumeration is a pair ``(a, B)``
with ``a`` in ``X``, ``B`` a ``k``-element subset of ``X`` and ``a + B``
contained in ``X``.  A coloring of ``X`` is *valid* for ``k`` when no
configuration is monochromatic.  ``a`` may itself belong to ``B``.

Positions are 0-based internally; files and printed output use the elements
themselves.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence, Union

import numpy as np

LOG = logging.getLogger(__name__)

GroupElement = Union[int, tuple]

__all__ = [
    "StructuralError",
    "ResourceLimitError",
    "AmbientGroup",
    "INTEGERS",
    "add",
    "Enumeration",
    "Prefix",
    "Coloring",
    "SchurConfiguration",
    "SchurWitness",
    "enumerate_configurations",
    "find_witness",
    "verify_witness",
    "is_valid_coloring",
    "oracle_count_valid",
    "combine_colorings",
    "coloring_to_document",
    "coloring_from_document",
]

ORACLE_GUARD = 10**8


class StructuralError(ValueError):
    """Inputs that do not fit together (wrong group, wrong length, ...)."""


class ResourceLimitError(RuntimeError):
    """A brute-force guard was exceeded."""


@dataclass(frozen=True)
class AmbientGroup:
    """Either the integers (``moduli is None``) or a product of cyclic groups."""

    moduli: Optional[tuple] = None

    def __post_init__(self):
        if self.moduli is not None:
            if not self.moduli or any(int(m) < 1 for m in self.moduli):
                raise StructuralError(f"bad moduli {self.moduli!r}")
            object.__setattr__(self, "moduli", tuple(int(m) for m in self.moduli))

    @classmethod
    def cyclic(cls, *moduli: int) -> "AmbientGroup":
        return cls(tuple(moduli))

    @property
    def is_integers(self) -> bool:
        return self.moduli is None

    @property
    def identity(self) -> GroupElement:
        return 0 if self.moduli is None else (0,) * len(self.moduli)

    def check(self, g) -> GroupElement:
        """Return ``g`` normalised to this group, or raise StructuralError."""
        if self.moduli is None:
            if isinstance(g, (bool, tuple, list)) or not isinstance(g, (int, np.integer)):
                raise StructuralError(f"{g!r} is not an integer")
            return int(g)
        if not isinstance(g, (tuple, list)) or len(g) != len(self.moduli):
            raise StructuralError(f"{g!r} is not an element of Z/{self.moduli}")
        g = tuple(int(x) for x in g)
        if any(not 0 <= x < m for x, m in zip(g, self.moduli)):
            raise StructuralError(f"residues of {g!r} out of range {self.moduli}")
        return g

    def add(self, g, h) -> GroupElement:
        g, h = self.check(g), self.check(h)
        if self.moduli is None:
            return g + h
        return tuple((x + y) % m for x, y, m in zip(g, h, self.moduli))

    def describe(self) -> str:
        if self.moduli is None:
            return "Z"
        return "x".join(f"Z{m}" for m in self.moduli)


INTEGERS = AmbientGroup()


def add(g, h, group: AmbientGroup = INTEGERS) -> GroupElement:
    """Group sum of ``g`` and ``h``."""
    return group.add(g, h)


@dataclass(frozen=True)
class Enumeration:
    """An injective sequence of group elements.

    ``source`` is one of ``"natural"`` (1, 2, 3, ...), ``"explicit"`` (the
    finite tuple ``elements``) or ``"residue"`` (the increasing integers
    ``x > above`` with ``x % modulus == residue``).
    """

    source: str = "natural"
    elements: tuple = ()
    group: AmbientGroup = INTEGERS
    modulus: int = 1
    residue: int = 0
    above: int = 0

    def __post_init__(self):
        if self.source not in ("natural", "explicit", "residue"):
            raise StructuralError(f"unknown enumeration source {self.source!r}")
        if self.source != "explicit" and not self.group.is_integers:
            raise StructuralError("only explicit enumerations are allowed in cyclic groups")
        if self.source == "explicit":
            elems = tuple(self.group.check(e) for e in self.elements)
            if len(set(elems)) != len(elems):
                raise StructuralError("enumeration is not injective")
            object.__setattr__(self, "elements", elems)
        if self.source == "residue" and (self.modulus < 1 or not 0 <= self.residue < self.modulus):
            raise StructuralError(f"bad residue class {self.residue} mod {self.modulus}")

    @classmethod
    def natural(cls) -> "Enumeration":
        return cls()

    @classmethod
    def explicit(cls, elements: Sequence, group: AmbientGroup = INTEGERS) -> "Enumeration":
        return cls(source="explicit", elements=tuple(elements), group=group)

    @classmethod
    def residue_tail(cls, modulus: int, residue: int = 0, above: int = 0) -> "Enumeration":
        return cls(source="residue", modulus=modulus, residue=residue, above=above)

    @property
    def is_finite(self) -> bool:
        return self.source == "explicit"

    def element(self, i: int) -> GroupElement:
        """The ``i``-th element, 1-based as in ``x_1, x_2, ...``."""
        if i < 1:
            raise IndexError(i)
        if self.source == "natural":
            return i
        if self.source == "explicit":
            return self.elements[i - 1]
        first = self.above + 1 + (self.residue - self.above - 1) % self.modulus
        return first + (i - 1) * self.modulus

    def take(self, n: int) -> tuple:
        if self.source == "explicit":
            if n > len(self.elements):
                raise StructuralError(f"enumeration has only {len(self.elements)} elements")
            return self.elements[:n]
        return tuple(self.element(i) for i in range(1, n + 1))

    def prefix(self, n: int) -> "Prefix":
        return Prefix(self, n)

    def describe(self):
        """JSON-friendly descriptor: ``"natural"``, a list, or a residue dict."""
        if self.source == "natural":
            return "natural"
        if self.source == "explicit":
            return [list(e) if isinstance(e, tuple) else e for e in self.elements]
        return {"modulus": self.modulus, "residue": self.residue, "above": self.above}

    @classmethod
    def from_descriptor(cls, desc, moduli=None) -> "Enumeration":
        group = INTEGERS if moduli is None else AmbientGroup(tuple(moduli))
        if desc == "natural":
            return cls.natural()
        if isinstance(desc, list):
            return cls.explicit([tuple(e) if isinstance(e, list) else e for e in desc], group)
        if isinstance(desc, dict):
            return cls.residue_tail(int(desc["modulus"]), int(desc["residue"]), int(desc.get("above", 0)))
        raise StructuralError(f"bad enumeration descriptor {desc!r}")

    def key(self) -> str:
        """Short stable text key (used by the results database)."""
        if self.source == "natural":
            return "natural"
        if self.source == "residue":
            return f"residue:{self.residue}mod{self.modulus}>{self.above}"
        return "explicit:" + ",".join(map(str, self.elements))


@dataclass(frozen=True)
class Prefix:
    """The first ``n`` elements of an enumeration."""

    enumeration: Enumeration
    n: int
    elements: tuple = field(init=False)

    def __post_init__(self):
        if self.n < 0:
            raise StructuralError("prefix length must be nonnegative")
        object.__setattr__(self, "elements", self.enumeration.take(self.n))
        if self.group.identity in self.position:
            LOG.info("prefix contains the group identity; configurations through it are trivial")

    @property
    def group(self) -> AmbientGroup:
        return self.enumeration.group

    @cached_property
    def position(self) -> dict:
        return {e: i for i, e in enumerate(self.elements)}

    @cached_property
    def element_set(self) -> frozenset:
        return frozenset(self.elements)

    @cached_property
    def partners(self) -> tuple:
        """``partners[i]`` lists ``(j, s)`` with ``x_i + x_j = x_s``, ordered by ``j``."""
        add_, pos = self.group.add, self.position
        out = []
        for a in self.elements:
            row = []
            for j, b in enumerate(self.elements):
                s = pos.get(add_(a, b))
                if s is not None:
                    row.append((j, s))
            out.append(tuple(row))
        return tuple(out)

    @cached_property
    def triples(self) -> tuple:
        """All ``(i, j, s)`` with ``x_i + x_j = x_s`` inside the prefix."""
        return tuple((i, j, s) for i, row in enumerate(self.partners) for j, s in row)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class Coloring:
    """Colors ``1..r`` for the positions of a prefix, in enumeration order."""

    r: int
    colors: tuple

    def __post_init__(self):
        colors = tuple(int(c) for c in self.colors)
        if self.r < 1:
            raise StructuralError("r must be positive")
        bad = [c for c in colors if not 1 <= c <= self.r]
        if bad:
            raise StructuralError(f"colors {bad} outside 1..{self.r}")
        object.__setattr__(self, "colors", colors)

    def __len__(self):
        return len(self.colors)

    def restrict(self, m: int) -> "Coloring":
        return Coloring(self.r, self.colors[:m])

    def permute(self, perm: Sequence[int]) -> "Coloring":
        """Apply ``c -> perm[c - 1]``."""
        return Coloring(self.r, tuple(perm[c - 1] for c in self.colors))

    def classes(self, prefix: Prefix) -> list:
        return [[e for e, c in zip(prefix.elements, self.colors) if c == col]
                for col in range(1, self.r + 1)]


@dataclass(frozen=True)
class SchurConfiguration:
    a: GroupElement
    b: tuple
    sums: tuple

    @property
    def k(self) -> int:
        return len(self.b)

    def elements(self) -> set:
        return {self.a, *self.b, *self.sums}


@dataclass(frozen=True)
class SchurWitness:
    configuration: SchurConfiguration
    color: int

    def __str__(self):
        cfg = self.configuration
        b = ", ".join(map(str, cfg.b))
        s = ", ".join(map(str, cfg.sums))
        return f"a={cfg.a} B={{{b}}} a+B={{{s}}} color={self.color}"


def _config(prefix: Prefix, i: int, js: Sequence[int]) -> SchurConfiguration:
    el = prefix.elements
    a = el[i]
    return SchurConfiguration(a, tuple(el[j] for j in js),
                              tuple(prefix.group.add(a, el[j]) for j in js))


def enumerate_configurations(prefix: Prefix, k: int) -> Iterator[SchurConfiguration]:
    """Yield every configuration with ``|B| = k``, ``a`` by position then ``B`` lexicographically."""
    if k < 1:
        raise StructuralError("k must be positive")
    for i, row in enumerate(prefix.partners):
        for js in itertools.combinations([j for j, _ in row], k):
            yield _config(prefix, i, js)


def _check_lengths(prefix: Prefix, coloring: Coloring):
    if len(coloring) != prefix.n:
        raise StructuralError(f"coloring has {len(coloring)} colors for a prefix of length {prefix.n}")


def find_witness(prefix: Prefix, coloring: Coloring, k: int) -> Optional[SchurWitness]:
    """First monochromatic configuration in enumeration order, or None."""
    _check_lengths(prefix, coloring)
    if k < 1:
        raise StructuralError("k must be positive")
    col = coloring.colors
    for i, row in enumerate(prefix.partners):
        c = col[i]
        # the lexicographically least monochromatic k-subset is the first k hits
        hits = [j for j, s in row if col[j] == c and col[s] == c]
        if len(hits) >= k:
            return SchurWitness(_config(prefix, i, hits[:k]), c)
    return None


def verify_witness(prefix: Prefix, coloring: Coloring, witness: SchurWitness,
                   k: Optional[int] = None) -> bool:
    """Check a claimed witness from scratch; never trusts the stored sums."""
    _check_lengths(prefix, coloring)
    cfg = witness.configuration
    pos, group = prefix.position, prefix.group
    try:
        a = group.check(cfg.a)
        b = [group.check(x) for x in cfg.b]
        sums = [group.add(a, x) for x in b]
    except StructuralError:
        return False
    if len(set(b)) != len(b) or (k is not None and len(b) != k) or not b:
        return False
    if tuple(sums) != tuple(group.check(s) for s in cfg.sums):
        return False
    members = [a, *b, *sums]
    if any(x not in pos for x in members):
        return False
    return all(coloring.colors[pos[x]] == witness.color for x in members)


def is_valid_coloring(prefix: Prefix, coloring: Coloring, k: int) -> bool:
    return find_witness(prefix, coloring, k) is None


def oracle_count_valid(prefix: Prefix, r: int, k: int, chunk: int = 1 << 18) -> int:
    """Count all ``r**n`` functions on the prefix admitting no ``k``-witness.

    Pure enumeration with no pruning and no symmetry reduction; sum triples
    are rebuilt here from the group operation so this stays independent of
    :attr:`Prefix.partners`.
    """
    n = prefix.n
    if r ** n > ORACLE_GUARD:
        raise ResourceLimitError(f"{r}^{n} colorings exceed the oracle guard {ORACLE_GUARD}")
    el = prefix.elements
    index = {e: i for i, e in enumerate(el)}
    by_a = [[] for _ in range(n)]
    for i, a in enumerate(el):
        for j, b in enumerate(el):
            s = prefix.group.add(a, b)
            if s in index:
                by_a[i].append((j, index[s]))
    total = r ** n
    digits = r ** np.arange(n, dtype=np.int64)
    valid = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        cols = (codes[:, None] // digits[None, :]) % r
        ok = np.ones(len(codes), dtype=bool)
        for i, pairs in enumerate(by_a):
            if len(pairs) < k:
                continue
            ci = cols[:, i]
            count = np.zeros(len(codes), dtype=np.int64)
            for j, s in pairs:
                count += (cols[:, j] == ci) & (cols[:, s] == ci)
            ok &= count < k
        valid += int(ok.sum())
    return valid


def combine_colorings(in_first: Sequence[bool], first: Coloring, second: Coloring) -> Coloring:
    """Glue a coloring of one part with a shifted coloring of the other.

    ``in_first[i]`` says which part position ``i`` belongs to; ``first``
    colors the first part in order and ``second`` the rest, shifted by
    ``first.r``.  A monochromatic configuration of the result lies in a
    single part.
    """
    it1, it2 = iter(first.colors), iter(second.colors)
    colors = tuple(next(it1) if f else next(it2) + first.r for f in in_first)
    if len(colors) != len(first) + len(second):
        raise StructuralError("part sizes do not match the colorings")
    return Coloring(first.r + second.r, colors)


def coloring_to_document(prefix: Prefix, coloring: Coloring, k: int) -> dict:
    doc = {"n": prefix.n, "r": coloring.r, "k": k,
           "enumeration": prefix.enumeration.describe(), "colors": list(coloring.colors)}
    if not prefix.group.is_integers:
        doc["moduli"] = list(prefix.group.moduli)
    return doc


def coloring_from_document(doc: dict):
    """Return ``(prefix, coloring, k)`` from a coloring document."""
    try:
        n, r, k = int(doc["n"]), int(doc["r"]), int(doc["k"])
        enum = Enumeration.from_descriptor(doc["enumeration"], doc.get("moduli"))
        colors = doc["colors"]
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"malformed coloring document: {exc}") from exc
    prefix = enum.prefix(n)
    coloring = Coloring(r, tuple(colors))
    _check_lengths(prefix, coloring)
    return prefix, coloring, k
