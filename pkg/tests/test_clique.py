from hypothesis import given, settings
from hypothesis import strategies as st

from shtrim import clique as C
from shtrim import share as S
from shtrim.clique import CliqueSharing
from shtrim.share import BOTTOM, Sharing
from shtrim.syntax import Atom, Struct, Var


def test_compress_pair_clique(names):
    n = names("X Y Z")
    c = C.compress(n.sh("[[X],[X,Y],[Y],[Z]]"))
    assert c.cliques == frozenset({n.mask("X Y")})
    assert c.groups == frozenset({n.mask("Z")})
    assert C.decompress(c) == n.sh("[[X],[X,Y],[Y],[Z]]")


def test_compress_without_powerset(names):
    n = names("X Y")
    c = C.compress(n.sh("[[X],[Y]]"))
    assert c.cliques == frozenset() and c.groups == n.sh("[[X],[Y]]").groups


def test_compress_full_powerset(names):
    n = names("A B C")
    c = C.compress(S.topmost(n.mask("A B C")))
    assert c == CliqueSharing(7, frozenset({7}), frozenset())


def test_decompress_examples(names):
    n = names("X Y Z")
    c = n.cl("(cliques=[[X,Y]], sharing=[[Z]])")
    assert C.decompress(c) == n.sh("[[X],[Y],[X,Y],[Z]]")
    assert C.decompress(CliqueSharing(3, frozenset(), frozenset({1, 3}))) == Sharing(3, frozenset({1, 3}))
    assert len(C.decompress(CliqueSharing(7, frozenset({7}), frozenset())).groups) == 7


def test_topmost_is_one_clique(names):
    n = names("X T1 T2 Y Z")
    t = C.topmost_c(n.mask("X T1 T2 Y Z"))
    assert t.cliques == frozenset({31}) and not t.groups
    assert C.decompress(t) == S.topmost(31)


def test_project_example(names):
    n = names("X Y Z")
    c = n.cl("(cliques=[[X,Y]], sharing=[[Z]])")
    got = C.project_c(n.mask("X Z"), c)
    assert got.cliques == frozenset()
    assert got.groups == frozenset({n.mask("X"), n.mask("Z")})


def test_bottom_handling(names):
    n = names("X Y")
    c = C.compress(n.sh("[[X],[X,Y]]"))
    assert C.lub_c(BOTTOM, c) == c and C.lub_c(c, BOTTOM) == c
    assert C.compress(BOTTOM) is BOTTOM and C.decompress(BOTTOM) is BOTTOM
    assert C.leq_c(BOTTOM, c) and not C.leq_c(c, BOTTOM)


def test_normalize_drops_redundancy():
    c = C.normalize(0b111, [0b011, 0b111, 0b100], [0b001, 0b110])
    assert c.cliques == frozenset({0b111}) and not c.groups
    assert C.is_normal(c)


def test_text_round_trip(names):
    n = names("A B C")
    c = n.cl("(cliques=[[A,B]], sharing=[[C]])")
    assert C.to_text(c, n.names) == "(cliques=[[A,B]], sharing=[[C]])"


def test_clique_size_counts_represented_sets():
    c = CliqueSharing(0b111, frozenset({0b011}), frozenset({0b100}))
    assert c.size == 2


def test_amgu_on_a_clique(names):
    n = names("X Y Z")
    c = C.topmost_c(n.mask("X Y Z"))
    got = C.amgu_c(Var(0), Struct("f", (Var(1),)), c)
    assert C.decompress(got) == S.amgu(Var(0), Struct("f", (Var(1),)), S.topmost(7))
    grounded = C.amgu_c(Var(0), Atom("a"), c)
    assert grounded.cliques == frozenset({n.mask("Y Z")}) and not grounded.groups
    assert C.decompress(grounded).groups == S.topmost(n.mask("Y Z")).groups


# ---------------------------------------------------------------------------
# commutation with the plain domain, random abstractions up to five variables

NV = 5
DOM = (1 << NV) - 1


def abstractions():
    # mix of powerset blocks and loose groups so compression has work to do
    blocks = st.lists(st.integers(1, DOM), max_size=2).map(
        lambda bs: {s for b in bs for s in S.subsets(b)})
    loose = st.frozensets(st.integers(1, DOM), max_size=6)
    return st.tuples(blocks, loose).map(lambda p: Sharing(DOM, frozenset(p[0] | p[1])))


def terms():
    leaf = st.one_of(st.integers(0, NV - 1).map(Var), st.just(Atom("a")))
    return st.recursive(leaf, lambda k: st.tuples(k, k).map(lambda p: Struct("g", p)), max_leaves=3)


@settings(max_examples=300, deadline=None)
@given(abstractions())
def test_round_trip(a):
    c = C.compress(a)
    assert C.is_normal(c)
    assert C.decompress(c) == a
    assert c.size <= len(a.groups)


@settings(max_examples=300, deadline=None)
@given(abstractions(), abstractions(), st.integers(0, DOM))
def test_lattice_ops_commute(a, b, vs):
    ca, cb = C.compress(a), C.compress(b)
    assert C.decompress(C.lub_c(ca, cb)) == S.lub(a, b)
    assert C.leq_c(ca, cb) == S.leq(a, b)
    assert C.equal_c(ca, cb) == (a == b)
    assert C.decompress(C.project_c(vs, ca)) == S.project(vs, a)
    assert C.decompress(C.ground_c(vs, ca)) == S.ground(vs, a)


@settings(max_examples=300, deadline=None)
@given(abstractions(), st.integers(0, NV - 1), terms())
def test_amgu_commutes(a, x, t):
    assert C.decompress(C.amgu_c(Var(x), t, C.compress(a))) == S.amgu(Var(x), t, a)


@settings(max_examples=300, deadline=None)
@given(abstractions(), st.integers(1, DOM), abstractions())
def test_extend_commutes(call, vs, other):
    for prime in (S.project(vs, call), S.project(vs, other), S.topmost(vs)):
        got = C.extend_c(C.compress(call), vs, C.compress(prime))
        assert C.decompress(got) == S.extend(call, vs, prime)


@settings(max_examples=100, deadline=None)
@given(abstractions())
def test_remap_and_shift_commute(a):
    m = {i: (i + 2) % NV for i in range(NV)}
    assert C.decompress(C.remap_c(C.compress(a), m)) == S.remap(a, m)
    assert C.decompress(C.shift_c(C.compress(a), 3)) == S.shift(a, 3)
