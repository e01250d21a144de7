import random

import pytest

from shtrim.reassoc import (
    Leaf, Split, aux_count, covers, fold, interface_vars, optimal_plan, plan_cost, plan_envs,
    transform_program,
)
from shtrim.selftest import corpus_dir
from shtrim.solver import analyze
from shtrim.syntax import Struct, Var, normalize_clause, parse_clause, parse_program, program_to_str, term_to_str


@pytest.fixture(scope="module")
def qplan():
    prog = parse_program((corpus_dir() / "qplan.pl").read_text())
    return prog.predicates[("qplan", 4)][0]


def names_of(clause, mask):
    return {clause.names[i] for i in range(mask.bit_length()) if mask >> i & 1}


def test_interfaces(qplan):
    assert names_of(qplan, interface_vars(qplan, 1, 3)) == {"P0", "X0", "Vg", "N"}
    assert names_of(qplan, interface_vars(qplan, 4, 6)) == {"P0", "Vg", "P2"}
    assert interface_vars(qplan, 1, 9) == qplan.head_mask & qplan.body_mask


FLAT = Split((Leaf(1, 3), Leaf(4, 6), Leaf(7, 9)))
FIG2 = Split((
    Split((
        Split((
            Split((Leaf(1, 2), Leaf(3, 3))),
            Split((Leaf(4, 4), Leaf(5, 6))),
        )),
        Leaf(7, 7),
    )),
    Leaf(8, 9),
))


def test_flat_partition(qplan):
    clauses = fold(qplan, FLAT, "qplan_aux")
    assert [c.head.name for c in clauses] == ["qplan", "qplan_aux1", "qplan_aux2", "qplan_aux3"]
    assert [len(c.head.args) for c in clauses[1:]] == [4, 3, 5]
    assert [c.env_mask.bit_count() for c in clauses[1:]] == [5, 6, 6]
    assert plan_envs(qplan, FLAT)[1:] == [5, 6, 6]


def test_figure_plan(qplan):
    assert covers(FIG2, 9) and aux_count(FIG2) == 7
    clauses = fold(qplan, FIG2, "qplan_aux")
    assert len(clauses) == 8
    assert max(c.env_mask.bit_count() for c in clauses) == 6
    assert plan_cost(qplan, FIG2) == 6
    assert {c.head.name for c in clauses} >= {"qplan_aux1111", "qplan_aux1121", "qplan_aux2"}


def test_qplan_optimum(qplan):
    res = optimal_plan(qplan)
    assert res.optimal
    assert res.cost == 6 and qplan.env_mask.bit_count() == 12
    assert res.aux <= aux_count(FIG2)
    assert max(plan_envs(qplan, res.plan)) == 6


def test_single_literal_body():
    c = parse_clause("p(X,Y) :- q(X,Z,Y).")
    res = optimal_plan(c)
    assert res.plan == Leaf(1, 1)
    assert res.cost == 3
    assert fold(c, res.plan, "p_aux") == [c]


def test_facts_are_untouched():
    prog = parse_program("p(a). q(X,Y) :- r(X,Y).")
    assert program_to_str(transform_program(prog).program) == program_to_str(prog)


def test_app_is_unchanged():
    prog = parse_program((corpus_dir() / "app.pl").read_text())
    t = transform_program(prog)
    assert program_to_str(t.program) == program_to_str(prog)
    assert t.reports[0].aux == 0


def test_bad_plan_is_rejected(qplan):
    with pytest.raises(ValueError):
        fold(qplan, Split((Leaf(1, 3), Leaf(5, 9))), "x")


def test_aux_names_avoid_clashes():
    prog = parse_program("p(X) :- a(X,Y), b(Y,Z), c(Z,W), d(W,X).\np_aux1(z).")
    t = transform_program(prog)
    heads = [c.head.key for c in t.program.clauses()]
    assert heads.count(("p_aux1", 1)) == 1
    assert ("p_aux1_", 2) in heads
    assert t.origin == {("p_aux1_", 2): ("p", 1)}


def test_transformed_qplan_keeps_success():
    prog = parse_program((corpus_dir() / "qplan.pl").read_text())
    folded = parse_program(program_to_str(transform_program(prog).program))
    for d in ("share", "share-clique"):
        assert analyze(prog, d).succ_text() == analyze(folded, d).succ_text()


def test_over_budget_falls_back(qplan):
    res = optimal_plan(qplan, budget=3)
    assert not res.optimal
    assert covers(res.plan, 9)
    assert res.cost <= qplan.env_mask.bit_count()


def test_sum_objective_is_selectable(qplan):
    res = optimal_plan(qplan, objective="sum")
    assert res.objective == "sum" and covers(res.plan, 9)


# ---------------------------------------------------------------------------
# brute force over every partition tree of short bodies

def compositions(s, e):
    """All ways to cut s..e into two or more consecutive runs."""
    if s > e:
        return
    for cut in range(s, e):
        yield [(s, cut), (cut + 1, e)]
        for rest in compositions(cut + 1, e):
            if len(rest) >= 2:
                yield [(s, cut)] + rest


def trees(s, e):
    yield Leaf(s, e)
    for parts in compositions(s, e):
        options = [list(trees(a, b)) for a, b in parts]

        def combine(i):
            if i == len(options):
                yield ()
                return
            for head in options[i]:
                for tail in combine(i + 1):
                    yield (head,) + tail

        for kids in combine(0):
            yield Split(kids)


def brute_force(clause):
    best = None
    for plan in trees(1, len(clause.body)):
        emitted = fold(clause, plan, "aux")
        cost = max(c.env_mask.bit_count() for c in emitted)
        key = (cost, len(emitted) - 1)
        if best is None or key < best:
            best = key
    return best


def random_clause(rng, n):
    pool = [Var(i, f"V{i}") for i in range(rng.randint(2, 7))]
    head = Struct("h", tuple(rng.sample(pool, rng.randint(0, min(3, len(pool))))))
    body = []
    for k in range(n):
        body.append(Struct(f"b{k}", tuple(rng.choice(pool) for _ in range(rng.randint(1, 3)))))
    return normalize_clause(head, body)


@pytest.mark.parametrize("seed", range(60))
def test_optimum_matches_brute_force(seed):
    rng = random.Random(seed)
    clause = random_clause(rng, rng.randint(1, 4))
    res = optimal_plan(clause)
    assert (res.cost, res.aux) == brute_force(clause), term_to_str(clause.head)
    emitted = fold(clause, res.plan, "aux")
    assert max(c.env_mask.bit_count() for c in emitted) == res.cost


def test_tree_enumeration_counts():
    # single run, and the three shapes over two literals: leaf, split, nothing else
    assert len(list(trees(1, 1))) == 1
    assert len(list(trees(1, 2))) == 2
    assert all(covers(t, 4) for t in trees(1, 4))
