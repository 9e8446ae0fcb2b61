import random

import pytest

from calx.errors import FormatError, ReplayMismatch, SideConditionFailed, UnknownNode
from calx.gcl import collect_unknowns
from calx.oracle import FiniteDomain
from calx.solver import Checker
from calx.tactics import parse_tactic
from calx.tree import DerivationTree, deserialize, serialize


def fresh_checker():
    return Checker(domain=FiniteDomain(lo=0, hi=3))


def seed_tree(ck):
    return DerivationTree.create(
        parse_tactic("init4{pre=true, post=true, vars=[x:Int]}"), ck
    )


class TestExtendNavigate:
    def test_linear_growth_at_active_leaf(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        n1, _ = tree.extend(tree.active_leaf, parse_tactic("splitComposition{assertion=true}"), ck)
        n2, _ = tree.extend(tree.active_leaf, parse_tactic("guessProgram{program=skip, at=0}"), ck)
        assert tree.active_path() == [0, n1, n2]

    def test_extending_an_interior_node_branches(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        a, _ = tree.extend(0, parse_tactic("splitComposition{assertion=true}"), ck)
        b, _ = tree.extend(0, parse_tactic("guessProgram{program=skip}"), ck)
        assert tree.nodes[0].children == [a, b]
        assert tree.active_leaf == b
        tree.check_invariants()

    def test_failed_tactic_leaves_tree_unchanged(self):
        ck = fresh_checker()
        tree = DerivationTree.create(
            parse_tactic("init4{pre=true, post=x = 1, vars=[x:Int]}"), ck
        )
        before = serialize(tree, ck)
        with pytest.raises(SideConditionFailed):
            tree.extend(0, parse_tactic("guessProgram{program=skip}"), ck)
        assert serialize(tree, ck) == before
        assert len(tree.nodes) == 1

    def test_navigate_exact_and_noop(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        a, _ = tree.extend(0, parse_tactic("splitComposition{assertion=true}"), ck)
        assert tree.navigate(tree.active_leaf) == a  # no-op
        assert tree.navigate(0) == 0  # backtracking ends the path at the target
        assert tree.active_path() == [0]

    def test_rightmost_descent_rule(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        a, _ = tree.extend(0, parse_tactic("splitComposition{assertion=true}"), ck)
        b, _ = tree.extend(a, parse_tactic("guessProgram{program=skip, at=0}"), ck)
        c, _ = tree.extend(a, parse_tactic("guessProgram{program=skip, at=1}"), ck)
        d, _ = tree.extend(c, parse_tactic("guessProgram{program=skip, at=0}"), ck)
        # descending from the shared ancestor follows rightmost children
        assert tree.navigate(a, descend=True) == d
        # idempotent
        assert tree.navigate(a, descend=True) == d
        assert tree.navigate(b, descend=True) == b

    def test_unknown_node(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        with pytest.raises(UnknownNode):
            tree.navigate(99)

    def test_active_path_view_shape(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        a, _ = tree.extend(0, parse_tactic("splitComposition{assertion=true}"), ck)
        view = tree.active_path_view()
        assert [v["id"] for v in view] == [0, a]
        assert view[0]["tactic"] == "init4"
        assert view[1]["siblings"] == [a]


class TestFuzz:
    def test_random_extend_navigate_preserves_invariants(self):
        rng = random.Random(99)
        ck = fresh_checker()
        tree = seed_tree(ck)
        sizes = [len(tree.nodes)]
        for _ in range(200):
            node_id = rng.choice(sorted(tree.nodes))
            state = tree.nodes[node_id].state
            unknowns = collect_unknowns(state.program)
            op = rng.random()
            if op < 0.5 and unknowns:
                path_text_ = ".".join(str(s) for s in unknowns[rng.randrange(len(unknowns))][0]) or "·"
                tree.extend(
                    node_id,
                    parse_tactic(f"splitComposition{{assertion=true, at={path_text_}}}"),
                    ck,
                )
            elif op < 0.75 and unknowns:
                path_text_ = ".".join(str(s) for s in unknowns[0][0]) or "·"
                tree.extend(
                    node_id,
                    parse_tactic(f"guessProgram{{program=skip, at={path_text_}}}"),
                    ck,
                )
            else:
                tree.navigate(node_id, descend=rng.random() < 0.5)
            tree.check_invariants()
            sizes.append(len(tree.nodes))
        # append-only: the tree never shrinks
        assert all(a <= b for a, b in zip(sizes, sizes[1:]))
        assert len(tree.nodes) > 50

    def test_fuzzed_tree_replays_byte_identically(self):
        rng = random.Random(7)
        ck = fresh_checker()
        tree = seed_tree(ck)
        for _ in range(60):
            node_id = rng.choice(sorted(tree.nodes))
            unknowns = collect_unknowns(tree.nodes[node_id].state.program)
            if unknowns and rng.random() < 0.7:
                p = ".".join(str(s) for s in unknowns[0][0]) or "·"
                tree.extend(node_id, parse_tactic(f"splitComposition{{assertion=true, at={p}}}"), ck)
            else:
                tree.navigate(node_id)
        doc = serialize(tree, ck)
        ck2 = fresh_checker()
        tree2 = deserialize(doc, ck2)
        assert serialize(tree2, ck2) == doc


class TestDocument:
    def test_header_required(self):
        with pytest.raises(FormatError):
            deserialize("something else\n", fresh_checker())

    def test_empty_document(self):
        with pytest.raises(FormatError):
            deserialize("calx-derivation 1\nend\n", fresh_checker())

    def test_active_marker_required(self):
        text = "calx-derivation 1\nnode 0 -\n  init4{pre=true, post=true, vars=[x:Int]}\nend\n"
        with pytest.raises(FormatError):
            deserialize(text, fresh_checker())

    def test_tampered_command_fails_replay(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        tree.extend(0, parse_tactic("guessProgram{program=skip}"), ck)
        doc = serialize(tree, ck)
        bad = doc.replace("post=true", "post=x = 1")
        with pytest.raises(ReplayMismatch):
            deserialize(bad, fresh_checker())

    def test_verdicts_recorded_per_tree(self):
        ck = fresh_checker()
        tree = seed_tree(ck)
        tree.extend(0, parse_tactic("guessProgram{program=skip}"), ck)
        # a check unrelated to the derivation must not leak into the document
        from calx.formula import parse_formula, INT

        ck.check((), parse_formula("x = x", {"x": INT}))
        doc = serialize(tree, ck)
        recorded = [l for l in doc.splitlines() if l.startswith("verdict ")]
        assert len(recorded) == len(tree.nodes[1].digests)


def test_active_path_view_length_is_depth_plus_one():
    ck = fresh_checker()
    tree = seed_tree(ck)
    rng = random.Random(3)
    for _ in range(30):
        node_id = rng.choice(sorted(tree.nodes))
        unknowns = collect_unknowns(tree.nodes[node_id].state.program)
        if unknowns:
            at = ".".join(map(str, unknowns[0][0])) or "·"
            tree.extend(node_id, parse_tactic(f"splitComposition{{assertion=true, at={at}}}"), ck)
        view = tree.active_path_view()
        depth = 0
        cur = tree.nodes[tree.active_leaf]
        while cur.parent is not None:
            depth += 1
            cur = tree.nodes[cur.parent]
        assert len(view) == depth + 1
