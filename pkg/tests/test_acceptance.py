"""Acceptance criteria, one test each; every test prints a [PASS]/[FAIL] line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also repeated in the terminal summary.  The S(4,1) stretch goal only runs
with ``--run-stretch``.
"""

import json
import re
import time
from importlib import resources

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from schur2d.blocks import (
    DEFAULT_SURROGATES,
    SchurNumberProvider,
    SchurSetHandle,
    almost_containment_report,
    construct_block_family,
    diagonal_pseudo_intersection,
    verify_disjoint_sums,
    verify_forcing,
    verify_sum_partner_locality,
)
from schur2d.cli import run
from schur2d.cnf import check_equisatisfiability, decode_model, dpll, encode, model_from_coloring, satisfies
from schur2d.core import Coloring, Enumeration, coloring_from_document, find_witness, is_valid_coloring, \
    oracle_count_valid, verify_witness
from schur2d.solver import Budget, BudgetExceeded, SearchState, compute_schur_number, count_valid_colorings, \
    parallel_compute

NAT = Enumeration.natural()
PROPERTY = settings(max_examples=1000, deadline=None, derandomize=True,
                    suppress_health_check=[HealthCheck.too_slow])


# -- exact small values ------------------------------------------------------------

def test_single_color_values(criterion):
    start = time.perf_counter()
    got = {k: compute_schur_number(1, k, 64, NAT) for k in range(1, 11)}
    elapsed = time.perf_counter() - start
    # one coloring per n: the oracle count is 1 below the value and 0 at it
    oracle = all(oracle_count_valid(NAT.prefix(k), 1, k) == 1 and oracle_count_valid(NAT.prefix(k + 1), 1, k) == 0
                 for k in range(1, 11))
    ok = all(r.is_exact and r.value == k + 1 for k, r in got.items()) and oracle and elapsed < 1.0
    criterion("S(1,k) = k+1 for k = 1..10", ok, f"{elapsed:.3f}s")
    assert ok


@pytest.mark.parametrize("r,expected", [(2, 5), (3, 14)])
def test_classical_schur_values(criterion, r, expected):
    start = time.perf_counter()
    res = compute_schur_number(r, 1, 64, NAT)
    elapsed = time.perf_counter() - start
    ok = res.is_exact and res.value == expected and elapsed < 30
    ok = ok and is_valid_coloring(NAT.prefix(expected - 1), res.certificate, 1)
    for n in range(1, 13):
        oracle = oracle_count_valid(NAT.prefix(n), r, 1)
        ok = ok and count_valid_colorings(r, 1, n, NAT) == oracle and (oracle > 0) == (n < expected)
    below = check_equisatisfiability(r, 1, expected - 1)
    at = check_equisatisfiability(r, 1, expected)
    ok = ok and below.agree and below.cnf_sat and below.coloring is not None
    ok = ok and is_valid_coloring(NAT.prefix(expected - 1), below.coloring, 1)
    ok = ok and at.agree and not at.native_sat
    criterion(f"S({r},1) = {expected}", ok, f"{res.summary()}, {elapsed:.2f}s, oracle n<=12, CNF at {expected - 1}/{expected}")
    assert ok


@pytest.mark.stretch
def test_stretch_four_colors(criterion):
    start = time.perf_counter()
    try:
        res = parallel_compute(4, 1, 64, NAT, 4, Budget(max_seconds=3600))
    except BudgetExceeded as exc:
        n = len(exc.certificate) if exc.certificate else 0
        criterion("stretch: S(4,1) = 45", False, f"budget exhausted, lower bound S(4,1) >= {n + 1}")
        pytest.xfail("stretch goal ran out of budget")
    elapsed = time.perf_counter() - start
    ok = res.is_exact and res.value == 45
    criterion("stretch: S(4,1) = 45", ok, f"{res.summary()}, {elapsed:.0f}s")
    assert ok


def test_stored_five_color_certificate(criterion):
    start = time.perf_counter()
    doc = json.loads(resources.files("schur2d").joinpath("data/schur5_prefix60.json").read_text())
    prefix, coloring, k = coloring_from_document(doc)
    ok = prefix.n == 60 and coloring.r == 5 and k == 1 and is_valid_coloring(prefix, coloring, 1)
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 1.0
    criterion("stored 5-coloring of 1..60 (S(5,1) >= 61)", ok, f"{elapsed:.3f}s")
    assert ok


def test_two_colors_k_two(criterion):
    start = time.perf_counter()
    # escalate the oracle until no valid coloring is left
    counts, n = {}, 0
    while True:
        n += 1
        counts[n] = oracle_count_valid(NAT.prefix(n), 2, 2)
        if counts[n] == 0:
            break
    oracle_value = n
    res = compute_schur_number(2, 2, 64, NAT)
    per_n = all(count_valid_colorings(2, 2, m, NAT) == c for m, c in counts.items())
    elapsed = time.perf_counter() - start
    ok = res.is_exact and res.value == oracle_value and per_n and elapsed < 300
    criterion("S(2,2) equals the oracle value", ok,
              f"oracle {oracle_value}, solver {res.value}, counts {list(counts.values())}, {elapsed:.2f}s")
    assert ok


# -- property suites -----------------------------------------------------------------

@st.composite
def colorings(draw, max_n=10, max_r=3, max_k=3):
    r = draw(st.integers(1, max_r))
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_k))
    colors = tuple(draw(st.lists(st.integers(1, r), min_size=n, max_size=n)))
    return r, k, Coloring(r, colors)


def _property(criterion, name, check):
    cases = []

    @PROPERTY
    @given(colorings())
    def inner(case):
        cases.append(1)
        check(*case)

    try:
        inner()
    except Exception as exc:
        criterion(name, False, f"{len(cases)} cases, {type(exc).__name__}: {exc}")
        raise
    ok = len(cases) >= 1000
    criterion(name, ok, f"{len(cases)} cases")
    assert ok


def test_property_restriction_monotone(criterion):
    def check(r, k, col):
        n = len(col)
        valid = is_valid_coloring(NAT.prefix(n), col, k)
        for m in range(1, n + 1):
            sub = is_valid_coloring(NAT.prefix(m), col.restrict(m), k)
            assert sub or not valid
    _property(criterion, "property: restriction monotonicity", check)


def test_property_permutation_invariant(criterion):
    def check(r, k, col):
        p = NAT.prefix(len(col))
        perm = tuple(range(r, 0, -1))
        assert is_valid_coloring(p, col, k) == is_valid_coloring(p, col.permute(perm), k)
    _property(criterion, "property: color-permutation invariance", check)


def test_property_witness_sound(criterion):
    def check(r, k, col):
        p = NAT.prefix(len(col))
        w = find_witness(p, col, k)
        if w is not None:
            assert verify_witness(p, col, w, k)
            assert len(set(w.configuration.b)) == k
            assert {col.colors[p.position[x]] for x in w.configuration.elements()} == {w.color}
    _property(criterion, "property: witness soundness", check)


def test_property_k_containment(criterion):
    def check(r, k, col):
        p = NAT.prefix(len(col))
        if is_valid_coloring(p, col, k):
            assert all(is_valid_coloring(p, col, kk) for kk in range(k, k + 4))
    _property(criterion, "property: k-containment", check)


def test_property_cnf_round_trip(criterion):
    def check(r, k, col):
        n = len(col)
        inst = encode(r, k, n, NAT)
        valid = is_valid_coloring(NAT.prefix(n), col, k)
        model = model_from_coloring(inst, col)
        assert (satisfies(inst.clauses, model) is None) == valid
        if valid:
            assert decode_model(inst, model) == col
        units = [(v,) if col.colors[i] == c else (-v,) for (i, c), v in inst.var_map.items()]
        assert (dpll(inst.num_vars, inst.clauses + units) is not None) == valid
    _property(criterion, "property: CNF soundness and completeness (n <= 10)", check)


def test_property_counter_replay(criterion):
    def check(r, k, col):
        n = len(col)
        state = SearchState(NAT.prefix(n), r, k)
        accepted = True
        for c in col.colors:
            if not state.push(c):
                accepted = False
                break
            assert state.counters == state.recount()
        assert accepted == is_valid_coloring(NAT.prefix(n), col, k)
        while state.depth:
            state.pop()
            assert state.counters == state.recount()
    _property(criterion, "property: counter exactness replay", check)


# -- table, blocks, determinism ------------------------------------------------------

def test_table_monotone(criterion, capsys):
    code = run(["table", "--r-max", "3", "--k-max", "2"])
    rows = capsys.readouterr().out.splitlines()[1:4]
    table = {}
    for line in rows:
        r, *cells = line.split()
        for k, cell in enumerate(cells, start=1):
            if re.fullmatch(r"\d+", cell):
                table[(int(r), k)] = int(cell)
    ok = code == 0 and len(table) == 6
    for (r, k), v in table.items():
        ok = ok and v <= table.get((r + 1, k), v) and v <= table.get((r, k + 1), v)
    criterion("table r<=3, k<=2 is monotone", ok, str(dict(sorted(table.items()))))
    assert ok


def test_block_family_depth_four(criterion):
    start = time.perf_counter()
    provider = SchurNumberProvider(DEFAULT_SURROGATES, Budget(max_seconds=20))
    family = construct_block_family(4, SchurSetHandle.naturals(), provider)
    report = verify_disjoint_sums(family)
    locality = verify_sum_partner_locality(family)
    forced = {j: verify_forcing(family, j) for j in (1, 2)}
    try:
        forced[3] = verify_forcing(family, 3, Budget(max_seconds=480))
        third = "UNSAT" if forced[3] else "SAT (not forcing)"
    except BudgetExceeded as exc:
        forced[3] = False
        third = f"undecided, budget exhausted after {exc.stats.nodes} nodes"
    elapsed = time.perf_counter() - start
    ok = family.complete and report.passed and locality and all(forced.values()) and elapsed < 600
    surrogate = [j for j, b in enumerate(family.blocks, start=1) if b.surrogate]
    criterion("block family depth 4", ok,
              f"disjoint sums {report.passed}, locality {locality}, forcing j=1 {forced[1]}, "
              f"j=2 {forced[2]}, j=3 {third}; surrogate levels {surrogate}; {elapsed:.0f}s")
    assert ok


def test_diagonal_pseudo_intersection(criterion):
    start = time.perf_counter()
    chain = [SchurSetHandle.naturals(), SchurSetHandle.residue_tail(3, 0, 5), SchurSetHandle.residue_tail(6, 0, 5)]
    family, w = diagonal_pseudo_intersection(chain, SchurNumberProvider(DEFAULT_SURROGATES, Budget(max_seconds=5)))
    report = almost_containment_report(family, chain)
    ok = all(good for _, _, good in report) and len(report) == 3
    # exhaustive restatement: every element of W outside V_n sits in an earlier block
    for n, v in enumerate(chain, start=1):
        earlier = set().union(*(b.elements for b in family.blocks[: n - 1]))
        ok = ok and all(x in earlier for x in w if x not in v)
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60
    criterion("diagonal pseudo-intersection of a 3-chain", ok,
              f"|W| = {len(w)}, outside V_n: {[len(o) for _, o, _ in report]}, {elapsed:.2f}s")
    assert ok


def test_parallel_determinism(criterion):
    outcomes = {}
    for r, k in [(2, 1), (3, 1), (2, 2)]:
        outcomes[(r, k)] = {w: (lambda res: (res.status, res.value))(parallel_compute(r, k, 64, NAT, w))
                            for w in (1, 2, 4, 8)}
    ok = all(len(set(by_w.values())) == 1 for by_w in outcomes.values())
    criterion("parallel determinism for 1, 2, 4, 8 workers", ok,
              ", ".join(f"S{rk}: {next(iter(v.values()))[1]}" for rk, v in outcomes.items()))
    assert ok
