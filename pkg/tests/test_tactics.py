import random

import pytest

from calx.errors import (
    ConstNotPresent,
    Inapplicable,
    NameClash,
    NoSuchObligation,
    NotAConjunction,
    ParamValidation,
    ParseError,
    SideConditionFailed,
    UnboundMetaVar,
    UnknownTactic,
)
from calx.formula import ArraySort, BOOL, INT, parse_formula, pretty_print
from calx.gcl import collect_unknowns
from calx.oracle import FiniteDomain, holds
from calx.render import render_state_text
from calx.solver import Checker
from calx.tactics import (
    apply_tactic,
    Declarations,
    DerivationState,
    Frame,
    parse_tactic,
    POSITIVE,
    REGISTRY,
    registry_metadata,
    TacticInvocation,
)
from calx.wp import generate_obligations


def fresh_checker():
    return Checker(domain=FiniteDomain(lo=0, hi=4))


def start(pre="true", post="p ∧ n = N", vars="[N:Int, n:Int, p:Bool, q:Bool]"):
    ck = fresh_checker()
    state, _ = apply_tactic(
        None, parse_tactic(f"init4{{pre={pre}, post={post}, vars={vars}}}"), ck
    )
    return state, ck


def run(state, ck, text):
    return apply_tactic(state, parse_tactic(text), ck)


class TestDispatch:
    def test_unknown_tactic(self):
        state, ck = start()
        with pytest.raises(UnknownTactic):
            apply_tactic(state, TacticInvocation("zapAll", ()), ck)

    def test_mode_gate(self):
        state, ck = start()
        with pytest.raises(Inapplicable):
            run(state, ck, "simplifyAuto{}")  # formula tactic in program mode

    def test_missing_and_unexpected_params(self):
        state, ck = start()
        with pytest.raises(ParamValidation):
            run(state, ck, "replaceConstantByVariable{const=N}")
        with pytest.raises(ParamValidation):
            run(state, ck, "splitComposition{assertion=true, extra=1}")

    def test_init4_only_at_the_root(self):
        state, ck = start()
        with pytest.raises(Inapplicable):
            run(state, ck, "init4{pre=true, post=true, vars=[x:Int]}")

    def test_purity_input_state_unchanged(self):
        state, ck = start()
        before = render_state_text(state, "full")
        run(state, ck, "splitComposition{assertion=p}")
        assert render_state_text(state, "full") == before


class TestReplaceConstant:
    def test_rewrites_post_and_adds_bounds(self):
        state, ck = start(post="(\\forall i : 0 \\le i < N : a[i] = 0)",
                          vars="[N:Int, a:Array(Int)]")
        new, _ = run(state, ck, r"replaceConstantByVariable{const=N, fresh=k, bounds=0 \le k \le N}")
        text = pretty_print(new.program.post)
        assert text == "(∀i: 0 ≤ i < k: a[i] = 0) ∧ 0 ≤ k ≤ N ∧ k = N"
        assert "k" in new.decls

    def test_const_not_present(self):
        state, ck = start(post="p", vars="[N:Int, p:Bool]")
        with pytest.raises(ConstNotPresent):
            run(state, ck, r"replaceConstantByVariable{const=N, fresh=k, bounds=true}")

    def test_name_clash(self):
        state, ck = start(post="n = N")
        with pytest.raises(NameClash):
            run(state, ck, r"replaceConstantByVariable{const=N, fresh=n, bounds=true}")


class TestTakeConjuncts:
    def test_not_a_conjunction(self):
        state, ck = start(post="p", vars="[p:Bool]")
        with pytest.raises(NotAConjunction):
            run(state, ck, "takeConjunctsAsInvariants{which=[0]}")

    def test_all_conjuncts_selected_rejected(self):
        state, ck = start()
        with pytest.raises(ParamValidation):
            run(state, ck, "takeConjunctsAsInvariants{which=[0,1]}")

    def test_loop_shape_and_init_spec(self):
        state, ck = start()
        new, _ = run(state, ck, "takeConjunctsAsInvariants{which=[0]}")
        unks = collect_unknowns(new.program)
        assert [tag for _, tag, _, _ in unks] == ["Init0", "S0"]
        init = unks[0]
        assert init[2] == state.program.pre  # pre → invariants
        assert pretty_print(init[3]) == "p"
        from calx.gcl import While

        loop = new.program.at((1,)).body
        assert isinstance(loop, While)
        assert pretty_print(loop.guard) == "n ≠ N"
        obls = {o.label for o in generate_obligations(new.program)}
        assert "While.initiation" in obls and "While.exit" in obls


class TestIntroAssignment:
    def test_ground_valid_assignment_closes(self):
        state, ck = start(pre="n = 0", post="n = 1", vars="[n:Int]")
        new, report = run(state, ck, "introAssignment{targets=[n], exprs=[n+1]}")
        assert collect_unknowns(new.program) == []
        assert all(o.status == "valid" for o in report.obligations)

    def test_self_assignment_is_skip_equivalent(self):
        state, ck = start(pre="p", post="p", vars="[p:Bool]")
        new, report = run(state, ck, "introAssignment{targets=[p], exprs=[p]}")
        assert all(o.status == "valid" for o in report.obligations)

    def test_invalid_ground_assignment_rejected(self):
        state, ck = start(pre="n = 0", post="n = 1", vars="[n:Int]")
        with pytest.raises(SideConditionFailed):
            run(state, ck, "introAssignment{targets=[n], exprs=[n]}")

    def test_metavariable_obligation_left_open(self):
        state, ck = start(pre="true", post="p ∧ q", vars="[p:Bool, q:Bool]")
        new, report = run(state, ck, "introAssignment{targets=[p, q], exprs=[p', true]}")
        assert new.pending_metavars == (("p'", BOOL),)
        by_status = {o.status for o in report.obligations}
        assert by_status == {"open", "valid"}

    def test_arity_mismatch(self):
        state, ck = start()
        with pytest.raises(ParamValidation):
            run(state, ck, "introAssignment{targets=[n], exprs=[1, 2]}")


class TestStrengthenInvariant:
    def test_adds_declaration_and_conjunct(self):
        state, ck = start()
        new, _ = run(state, ck, "strengthenInvariant{name=s, sort=Bool, invariant=s ≡ p}")
        assert "s" in new.decls
        assert pretty_print(new.program.post).endswith("(s  ≡  p)")

    def test_strengthen_with_true_changes_no_statuses(self):
        state, ck = start()
        before = {
            o.label: ck.check_obligation(o).status
            for o in generate_obligations(state.program)
        }
        new, _ = run(state, ck, "strengthenInvariant{name=z, sort=Bool, invariant=true}")
        after = {
            o.label: ck.check_obligation(o).status
            for o in generate_obligations(new.program)
        }
        assert before == {k: v for k, v in after.items() if k in before}

    def test_name_clash(self):
        state, ck = start()
        with pytest.raises(NameClash):
            run(state, ck, "strengthenInvariant{name=p, sort=Bool, invariant=true}")

    def test_while_target_redirects_to_spec_node(self, s2_session):
        ck = fresh_checker()
        state = s2_session.tree.node(2).state  # has a While at path 1
        with pytest.raises(Inapplicable) as exc:
            apply_tactic(
                state,
                parse_tactic("strengthenInvariant{name=z, sort=Bool, invariant=true, at=1}"),
                ck,
            )
        assert "backtrack" in str(exc.value)


class TestGuessProgram:
    def test_skip_accepted_when_pre_equals_post(self):
        state, ck = start(pre="p", post="p", vars="[p:Bool]")
        new, _ = run(state, ck, "guessProgram{program=skip}")
        assert collect_unknowns(new.program) == []

    def test_rejected_guess_reports_counterexample(self, s2_session):
        # r := r cannot refresh the prefix invariant: the oracle must
        # produce a state falsifying the induced obligation
        ck = Checker(domain=FiniteDomain(lo=0, hi=5))
        state = s2_session.tree.node(11).state
        with pytest.raises(SideConditionFailed) as exc:
            apply_tactic(
                state, parse_tactic("guessProgram{program=r := r, at=1.body.0}"), ck
            )
        verdict = exc.value.verdict
        assert verdict.is_invalid and verdict.model is not None
        node = state.program.at((1, "body", 0))
        from calx.wp import wp
        from calx.gcl import Assignment
        from calx.formula import Var

        cand = Assignment((Var("r", BOOL),), (parse_formula("r", {"r": BOOL}),))
        goal = wp(cand, node.post)
        assert not holds([node.pre], goal, verdict.model, ck.domain)

    def test_composite_guess_rejected(self):
        state, ck = start()
        with pytest.raises(ParamValidation):
            run(state, ck, "guessProgram{program=while p do skip od}")


class TestFormulaMode:
    def make_formula_state(self, initial_text, env=None, assumptions=()):
        env = env or {"p": BOOL, "q": BOOL, "n": INT, "r'": BOOL}
        decls = Declarations(tuple(env.items()))
        frame = Frame(
            assumptions=tuple(parse_formula(a, env) for a in assumptions),
            initial=parse_formula(initial_text, env),
        )
        from calx.gcl import mk_specification
        from calx.formula import TRUE

        program = mk_specification(TRUE, TRUE)
        return (
            DerivationState(
                program=program, decls=decls, frames=(frame,), obligation_label="test"
            ),
            fresh_checker(),
        )

    def test_focus_on_consequent_releases_antecedent(self):
        state, ck = self.make_formula_state(r"p \Rightarrow (q \wedge p)")
        new, _ = run(state, ck, "focus{path=1}")
        inner = new.frames[-1]
        assert [pretty_print(a) for a in inner.assumptions] == ["p"]
        assert inner.polarity == POSITIVE
        assert pretty_print(inner.current) == "q ∧ p"

    def test_focus_on_antecedent_flips_polarity(self):
        state, ck = self.make_formula_state(r"p \Rightarrow q")
        new, _ = run(state, ck, "focus{path=0}")
        assert new.frames[-1].polarity == "negative"

    def test_focus_inside_equivalence_is_rewrite_only(self):
        state, ck = self.make_formula_state(r"p \equiv q")
        new, _ = run(state, ck, "focus{path=0}")
        assert new.frames[-1].polarity == "equivalence"
        with pytest.raises(Inapplicable):
            run(new, ck, "guessFormula{next=q ∧ p, rel=⇐}")

    def test_focus_under_quantifier_releases_range(self):
        state, ck = self.make_formula_state(
            r"(\forall i : 0 \le i < n : f[i])", env={"n": INT, "f": ArraySort(BOOL)}
        )
        new, _ = run(state, ck, "focus{path=1}")
        inner = new.frames[-1]
        assert inner.bound_vars == (("i", INT),)
        assert [pretty_print(a) for a in inner.assumptions] == ["0 ≤ i", "i < n"]

    def test_direction_gate_by_polarity(self):
        state, ck = self.make_formula_state("p ∨ q")
        with pytest.raises(Inapplicable):
            run(state, ck, "guessFormula{next=p, rel=⇒}")  # weakening in a + frame
        new, _ = run(state, ck, "guessFormula{next=p, rel=⇐}")  # strengthening ok
        assert pretty_print(new.frames[-1].current) == "p"

    def test_invalid_step_rejected_with_model(self):
        state, ck = self.make_formula_state("p ∨ q")
        with pytest.raises(SideConditionFailed) as exc:
            run(state, ck, "guessFormula{next=p ∧ q, rel=≡}")
        assert exc.value.verdict.is_invalid

    def test_unfocus_substitutes_back(self):
        state, ck = self.make_formula_state(r"p \Rightarrow (q \wedge p)")
        s1, _ = run(state, ck, "focus{path=1}")
        s2, _ = run(s1, ck, "guessFormula{next=p ∧ q, rel=≡}")
        s3, _ = run(s2, ck, "unfocus{}")
        assert len(s3.frames) == 1
        assert pretty_print(s3.frames[0].current) == "p ⇒ p ∧ q"
        assert s3.frames[0].steps[-1].relation == "≡"

    def test_unfocus_strengthening_lifts(self):
        state, ck = self.make_formula_state(r"p \Rightarrow (q \vee p)")
        s1, _ = run(state, ck, "focus{path=1}")
        s2, _ = run(s1, ck, "guessFormula{next=q, rel=⇐}")
        s3, _ = run(s2, ck, "unfocus{}")
        assert s3.frames[0].steps[-1].relation == "⇐"
        assert pretty_print(s3.frames[0].current) == "p ⇒ q"

    def test_unfocus_without_inner_frame(self):
        state, ck = self.make_formula_state("p")
        with pytest.raises(Inapplicable):
            run(state, ck, "unfocus{}")

    def test_shadowing_focus_refused(self):
        state, ck = self.make_formula_state(
            r"(\forall i : 0 \le i < n : a[i] = i)",
            env={"n": INT, "i": INT, "a": ArraySort(INT)},
        )
        with pytest.raises(Inapplicable):
            run(state, ck, "focus{path=1}")


class TestStepInOut:
    def test_step_into_requires_metavariables(self):
        state, ck = start(pre="n = 0", post="n = 1", vars="[n:Int]")
        state, _ = run(state, ck, "introAssignment{targets=[n], exprs=[n+1]}")
        with pytest.raises(Inapplicable):
            run(state, ck, "stepInto{label=Assignment.correctness}")

    def test_step_into_unknown_label(self):
        state, ck = start()
        with pytest.raises(NoSuchObligation):
            run(state, ck, "stepInto{label=nope}")

    def test_unbound_metavariable_rejected(self):
        state, ck = start(pre="true", post="p ∧ q", vars="[p:Bool, q:Bool]")
        state, _ = run(state, ck, "introAssignment{targets=[p, q], exprs=[p', q']}")
        state, _ = run(state, ck, "stepInto{label=Assignment.correctness[0]}")
        with pytest.raises(UnboundMetaVar):
            run(state, ck, "stepOut{p'=true}")

    def test_step_out_round_trip_no_metavariables_left(self):
        state, ck = start(pre="true", post="p ∧ q", vars="[p:Bool, q:Bool]")
        state, _ = run(state, ck, "introAssignment{targets=[p, q], exprs=[p', q']}")
        state, _ = run(state, ck, "stepInto{label=Assignment.correctness[0]}")
        new, report = run(state, ck, "stepOut{p'=true, q'=true}")
        assert new.mode == "program"
        assert new.pending_metavars == ()
        assert all(o.status == "valid" for o in report.obligations)

    def test_step_out_requires_closing_validity(self):
        state, ck = start(pre="true", post="p ∧ q", vars="[p:Bool, q:Bool]")
        state, _ = run(state, ck, "introAssignment{targets=[p, q], exprs=[p', q']}")
        state, _ = run(state, ck, "stepInto{label=Assignment.correctness[0]}")
        with pytest.raises(SideConditionFailed):
            run(state, ck, "stepOut{p'=false, q'=true}")

    def test_binding_must_be_program_expressible(self):
        state, ck = start(pre="true", post="p ∧ q", vars="[p:Bool, q:Bool]")
        state, _ = run(state, ck, "introAssignment{targets=[p, q], exprs=[p', q']}")
        state, _ = run(state, ck, "stepInto{label=Assignment.correctness[0]}")
        with pytest.raises(ParamValidation):
            run(state, ck, "stepOut{p'=q', q'=true}")


class TestCommandText:
    def test_documented_surface(self):
        inv = parse_tactic("introAssignment{targets=[r,n], exprs=[r', n+1]}", validate=False)
        assert inv.name == "introAssignment"
        assert inv.get("targets") == "[r,n]"
        assert inv.get("exprs") == "[r', n+1]"
        assert parse_tactic("simplifyAuto{}").params == ()

    def test_whitespace_insensitive(self):
        a = parse_tactic("  simplifyAuto  {  }  ")
        assert a.name == "simplifyAuto"
        b = parse_tactic("focus{ path = 1.0 }")
        assert b.get("path") == "1.0"

    def test_render_parse_round_trip_randomized(self):
        rng = random.Random(123)
        formulas = ["0 \\le n", "p ∧ (q ∨ p)", "(∀i: 0 ≤ i < n: f[i])", "n+1"]
        idents = ["n", "m", "acc", "r'"]
        for _ in range(200):
            name = rng.choice(sorted(REGISTRY))
            td = REGISTRY[name]
            params = []
            for p in td.params:
                if rng.random() < 0.2 and not p.required:
                    continue
                value = {
                    "formula": rng.choice(formulas),
                    "exprs": "[" + ", ".join(rng.sample(formulas, 2)) + "]",
                    "targets": "[" + ", ".join(rng.sample(idents[:3], 2)) + "]",
                    "idents": "[n, m]",
                    "indices": "[0,1]",
                    "ident": rng.choice(idents[:3]),
                    "sort": "Bool",
                    "path": "1.body.0",
                    "label": "While.invariant-preservation[P0]",
                    "decls": "[n:Int, f:Array(Bool)]",
                    "relation": rng.choice(["≡", "⇒", "⇐"]),
                    "program": "x := x+1",
                }[p.kind]
                params.append((p.name, value))
            if td.variadic:
                params.append(("r'", rng.choice(formulas)))
            inv = TacticInvocation(name, tuple(params))
            assert parse_tactic(inv.render(), validate=False) == inv

    def test_grammar_errors(self):
        with pytest.raises(ParseError):
            parse_tactic("noBraces")
        with pytest.raises(ParseError):
            parse_tactic("f{unclosed")
        with pytest.raises(ParseError):
            parse_tactic("f{a=1} trailing")
        with pytest.raises(UnknownTactic):
            parse_tactic("zap{}")
        with pytest.raises(ParamValidation):
            parse_tactic("focus{}")

    def test_registry_metadata_for_dynamic_forms(self):
        meta = registry_metadata()
        names = {m["name"] for m in meta}
        assert {
            "init4",
            "replaceConstantByVariable",
            "takeConjunctsAsInvariants",
            "introAssignment",
            "simplifyAuto",
            "stepInto",
            "stepOut",
            "focus",
            "guessProgram",
            "guessFormula",
        } <= names
        init4 = next(m for m in meta if m["name"] == "init4")
        assert [p["name"] for p in init4["params"]] == ["pre", "post", "vars"]
        assert all("kind" in p for m in meta for p in m["params"])
