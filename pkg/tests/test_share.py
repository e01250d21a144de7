import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shtrim import share as S
from shtrim.share import BOTTOM, Sharing
from shtrim.syntax import Atom, Struct, Var, apply_subst, iter_vars, parse_term, unify_solved_form


def sub_terms(src: str):
    """Parse several terms sharing one variable numbering."""
    return parse_term(f"u({src})").args


# ---------------------------------------------------------------------------
# examples

def test_bottom_is_not_empty_sharing(names):
    n = names("X")
    assert not S.is_bottom(S.empty())
    assert S.is_bottom(S.bottom())
    assert S.lub(BOTTOM, n.sh("[[X]]")) == n.sh("[[X]]")
    assert S.lub(n.sh("[[X]]"), BOTTOM) == n.sh("[[X]]")
    assert S.project(1, BOTTOM) is BOTTOM


def test_project_examples(names):
    n = names("A B C D E")
    call = n.sh("[[A],[B,C],[A,C,D]]")
    assert S.project(n.mask("A B E"), call) == n.sh("[[A],[B]]", "A B E")
    assert S.project(call.domain, call) == call
    m = names("L0 L1 H L2")
    a = m.sh("[[L0,L2,H,L1],[L0,L2,L1],[L0,L1],[L2]]")
    assert S.project(m.mask("L1 H L2"), a) == m.sh("[[L2,H,L1],[L2,L1],[L1],[L2]]", "L1 H L2")


def test_augment_examples(names):
    n = names("X Y T1 T2")
    assert S.augment(n.mask("T1 T2"), n.sh("[[X],[Y]]", "X Y")) == n.sh("[[X],[Y],[T1],[T2]]")
    a = n.sh("[[X],[X,Y]]", "X Y")
    assert S.augment(0, a) == a
    m = names("L0 L2 H L1")
    got = S.augment(m.mask("L1"), m.sh("[[L0],[L0,L2],[L0,L2,H],[L2]]", "L0 L2 H"))
    assert got == m.sh("[[L0],[L0,L2],[L0,L2,H],[L1],[L2]]")


def test_augment_rejects_overlap(names):
    n = names("X Y")
    with pytest.raises(ValueError):
        S.augment(n.mask("X"), n.sh("[[X]]"))


def test_star_closure_examples(names):
    n = names("A B C D Y T2")
    star = lambda t: S.star_closure(n.sh(t).groups)  # noqa: E731
    assert star("[[A]]") == n.sh("[[A]]").groups
    assert star("[[Y],[T2]]") == n.sh("[[Y],[T2],[Y,T2]]").groups
    assert star("[[A],[B,C],[A,C,D]]") == n.sh("[[A],[B,C],[A,C,D],[A,B,C],[A,B,C,D]]").groups


def test_star_closure_is_union_closure():
    for fam in itertools.combinations([1, 2, 4, 3, 6, 12, 9], 3):
        out = S.star_closure(fam)
        assert set(fam) <= out
        assert all(a | b in out for a in out for b in out)
        # every member is a union of generators
        assert all(any(not g & ~m for g in fam) for m in out)


def test_section2_unification():
    """[X|T1] = [Z,Y|T2] with Z ground, from {{X},{Y},{T1},{T2}}.

    The standard amgu yields {T1,T2} as well: with T1 = [Y|U] and T2 = U
    the two tails share U while Y does not.
    """
    lhs, rhs = sub_terms("[X|T1],[Z,Y|T2]")
    nm = {0: "X", 1: "T1", 2: "Z", 3: "Y", 4: "T2"}
    a = Sharing(0b11111, frozenset({1, 2, 8, 16}))
    got = S.abstract_unify_literal(lhs, rhs, a)
    assert S.to_text(got, nm) == "[[T1,Y],[T1,Y,T2],[T1,T2]]"
    # the stated value misses {T1,T2}, so the concrete state above escapes it
    stated = Sharing(0b11111, frozenset({0b1010, 0b11010, 0b11000}))
    assert not S.leq(got, stated)


def test_amgu_grounding(names):
    n = names("X Y")
    assert S.amgu(Var(0), Atom("a"), n.sh("[[X],[Y]]")) == n.sh("[[Y]]")
    assert S.amgu_reference(Var(0), Atom("a"), n.sh("[[X,Y],[Y]]")) == n.sh("[[Y]]")


def test_amgu_appendix_step(names):
    n = names("L0 L2 H L1")
    goal_vars = n.mask("L1 H L2")
    call = n.sh("[[L0,L2,H,L1],[L0,L2,L1],[L0,L1],[L2]]")
    proj = S.project(goal_vars, call)
    t = Struct(".", (Var(2, "H"), Var(3, "L1")))
    got = S.amgu(Var(1, "L2"), t, proj)
    assert got == n.sh("[[L2,H,L1],[L2,L1]]", "L2 H L1")
    assert S.extend(call, goal_vars, got) == n.sh("[[L0,H,L1,L2],[L0,L1,L2]]")


def test_unify_literal_identities(names):
    n = names("X Y")
    a = n.sh("[[X],[X,Y]]")
    assert S.abstract_unify_literal(Atom("a"), Atom("b"), a) is BOTTOM
    assert S.abstract_unify_literal(Var(0), Var(0), a) == a
    assert S.abstract_unify_literal(Var(0), Var(1), BOTTOM) is BOTTOM


def test_call_to_entry_examples():
    goal, head = sub_terms("p(A,f(B),E),p(f(X),f(Y),Z)")
    nm = {0: "A", 1: "B", 2: "E", 3: "X", 4: "Y", 5: "Z"}
    proj = Sharing(0b111, frozenset({1, 2}))
    entry = S.call_to_entry(proj, goal, head)
    assert S.to_text(entry, nm) == "[[X],[Y]]"
    assert entry.domain == 0b111000
    assert S.call_to_entry(proj, goal, Struct("q", (Atom("a"), Atom("b"), Atom("c")))) is BOTTOM


def test_call_to_entry_appendix():
    goal, head = sub_terms("app(T,L0,L1),app([Hr|Tr],L0r,L2r)")
    nm = {0: "T", 1: "L0", 2: "L1", 3: "Hr", 4: "Tr", 5: "L0r", 6: "L2r"}
    proj = Sharing(0b111, frozenset({2, 4}))
    assert S.to_text(S.call_to_entry(proj, goal, head), nm) == "[[L0r],[L2r]]"


def test_exit_to_prime_examples():
    goal, head = sub_terms("p(A,f(B),E),p(f(X),f(Y),Z)")
    nm = {0: "A", 1: "B", 2: "E", 3: "X", 4: "Y", 5: "Z"}
    beta = Sharing(0b111000, frozenset({1 << 4}))
    assert S.to_text(S.exit_to_prime(beta, head, goal), nm) == "[[B]]"
    proj = Sharing(0b111, frozenset({1, 2}))
    assert S.to_text(S.exit_to_prime(beta, head, goal, proj), nm) == "[[B]]"
    assert S.exit_to_prime(BOTTOM, head, goal) is BOTTOM


def test_extend_examples(names):
    n = names("A B C D E")
    call = n.sh("[[A],[B,C],[A,C,D]]")
    assert S.extend(call, n.mask("A B E"), n.sh("[[B]]", "A B E")) == n.sh("[[B,C]]")
    call = n.sh("[[A,B],[C],[D,E]]")
    prime = n.sh("[[A,B],[A,B,C],[A,B,C,D],[A,B,D],[C,D]]", "A B C D")
    want = n.sh("[[A,B],[A,B,C],[A,B,C,D,E],[A,B,D,E],[C,D,E]]")
    assert S.extend(call, n.mask("A B C D"), prime) == want
    assert S.extend(call, n.mask("A B C D"), BOTTOM) is BOTTOM


def test_extend_identity_counterexample(names):
    n = names("A C D")
    call = n.sh("[[A,C],[A,D]]")
    got = S.extend(call, n.mask("A"), S.project(n.mask("A"), call))
    assert got == n.sh("[[A,C],[A,D],[A,C,D]]")


def test_lub_examples(names):
    n = names("L0 L1 X Y")
    a = n.sh("[[L0,L1]]", "L0 L1")
    assert S.lub(a, a) == a
    assert S.lub(n.sh("[[X]]", "X Y"), n.sh("[[Y]]", "X Y")) == n.sh("[[X],[Y]]", "X Y")


def test_topmost_examples(names):
    n = names("X T1 T2 Y Z")
    assert len(S.topmost(n.mask("X T1 T2 Y Z")).groups) == 31
    assert S.topmost(0) == S.empty()
    assert S.topmost(n.mask("X")) == n.sh("[[X]]", "X")


def test_topmost_keeps_known_ground_with_precise_flag(names):
    n = names("X Y")
    proj = n.sh("[[Y]]")
    assert S.topmost(proj.domain, proj) == n.sh("[[X],[Y],[X,Y]]")
    assert S.topmost(proj.domain, proj, precise=True) == n.sh("[[Y]]")


def test_leq_examples(names):
    n = names("X Y")
    assert S.leq(BOTTOM, n.sh("[[X]]"))
    assert S.leq(n.sh("[[X]]"), n.sh("[[X],[X,Y]]"))
    assert not S.leq(n.sh("[[X,Y]]"), n.sh("[[X]]"))


def test_ground_and_ground_vars(names):
    n = names("X Y Z")
    a = n.sh("[[X],[X,Y],[Z]]")
    assert S.ground(n.mask("Y"), a) == n.sh("[[X],[Z]]")
    assert S.ground_vars(S.ground(n.mask("X Z"), a)) == n.mask("X Y Z")


def test_text_round_trip(names):
    n = names("A B C")
    a = n.sh("[[A],[B,C]]")
    assert n.txt(a) == "[[A],[B,C]]"
    assert S.parse_sharing("bottom", n.index) is BOTTOM


def test_remap_and_shift():
    a = Sharing(0b11, frozenset({1, 3}))
    assert S.remap(a, {0: 2, 1: 0}) == Sharing(0b101, frozenset({4, 5}))
    assert S.shift(a, 2) == Sharing(0b1100, frozenset({4, 12}))


# ---------------------------------------------------------------------------
# properties over small domains

NV = 3


def abstractions(nvars=NV):
    dom = (1 << nvars) - 1
    return st.frozensets(st.integers(1, dom)).map(lambda gs: Sharing(dom, gs))


def small_terms(nvars=NV):
    leaf = st.one_of(st.integers(0, nvars - 1).map(Var), st.just(Atom("a")))
    return st.recursive(
        leaf,
        lambda k: st.one_of(st.lists(k, min_size=1, max_size=2).map(lambda xs: Struct("f", tuple(xs))),
                            st.tuples(k, k).map(lambda p: Struct(".", p))),
        max_leaves=4,
    )


@settings(max_examples=300, deadline=None)
@given(abstractions(), abstractions(), abstractions())
def test_lub_is_a_join(a, b, c):
    j = S.lub(a, b)
    assert S.leq(a, j) and S.leq(b, j)
    assert S.lub(a, b) == S.lub(b, a)
    assert S.lub(S.lub(a, b), c) == S.lub(a, S.lub(b, c))
    assert S.lub(a, a) == a
    if S.leq(a, c) and S.leq(b, c):
        assert S.leq(j, c)


@settings(max_examples=300, deadline=None)
@given(abstractions(), abstractions(), st.integers(0, NV - 1), small_terms())
def test_amgu_is_monotone(a, b, x, t):
    hi = S.lub(a, b)
    assert S.leq(S.amgu(Var(x), t, a), S.amgu(Var(x), t, hi))


@settings(max_examples=300, deadline=None)
@given(abstractions(), abstractions(), st.integers(1, (1 << NV) - 1))
def test_project_and_extend_are_monotone(a, b, vs):
    hi = S.lub(a, b)
    assert S.leq(S.project(vs, a), S.project(vs, hi))
    p = S.project(vs, a)
    assert S.leq(S.extend(a, vs, p), S.extend(hi, vs, p))


@settings(max_examples=300, deadline=None)
@given(abstractions(), st.integers(1, (1 << NV) - 1))
def test_extend_with_own_projection_only_adds(call, vs):
    got = S.extend(call, vs, S.project(vs, call))
    assert S.leq(call, got)
    rel = {g for g in call.groups if g & vs}
    if S.star_closure(rel) == frozenset(rel):
        assert got == call


@settings(max_examples=300, deadline=None)
@given(abstractions(), st.integers(0, NV - 1), small_terms())
def test_amgu_matches_reference(a, x, t):
    assert S.amgu(Var(x), t, a) == S.amgu_reference(Var(x), t, a)


# concrete soundness: abstract the result of a real unification

RUNTIME = 10  # indices of run-time variables start here


def concrete_terms():
    leaf = st.one_of(st.integers(RUNTIME, RUNTIME + 3).map(Var), st.just(Atom("a")))
    return st.recursive(
        leaf,
        lambda k: st.one_of(st.tuples(k, k).map(lambda p: Struct("g", p)), k.map(lambda x: Struct("f", (x,)))),
        max_leaves=3,
    )


def alpha(theta: dict[int, object], nvars: int) -> Sharing:
    """Sharing abstraction of a concrete substitution over program vars 0..nvars-1."""
    occ: dict[int, int] = {}
    for x in range(nvars):
        for v in set(iter_vars(theta[x])):
            occ[v.index] = occ.get(v.index, 0) | 1 << x
    return Sharing((1 << nvars) - 1, frozenset(occ.values()))


@settings(max_examples=500, deadline=None)
@given(st.lists(concrete_terms(), min_size=NV, max_size=NV), st.integers(0, NV - 1), small_terms())
def test_amgu_is_sound_for_concrete_unification(bindings, x, t):
    theta = dict(enumerate(bindings))
    sub = {Var(i): theta[i] for i in range(NV)}
    sigma = unify_solved_form(theta[x], apply_subst(sub, t))
    abstract = S.amgu(Var(x), t, alpha(theta, NV))
    if sigma is None:
        return
    s = dict(sigma)
    after = {i: apply_subst(s, theta[i]) for i in range(NV)}
    assert S.leq(alpha(after, NV), abstract)
