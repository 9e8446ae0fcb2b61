import pytest

from calx.errors import Abort, BudgetExceeded, EvaluationUndefined, FuelExhausted
from calx.formula import (
    ArraySort,
    BOOL,
    INT,
    parse_formula,
    TRUE,
    Var,
)
from calx.gcl import (
    AnnotatedProgram,
    Assignment,
    If,
    Skip,
    UnkProg,
    While,
)
from calx.oracle import (
    brute_force,
    compile_expr,
    enumerate_states,
    evaluate,
    FiniteDomain,
    format_model,
    interpret,
    interpret_all,
)

ENV = {"x": INT, "y": INT, "p": BOOL, "f": ArraySort(BOOL), "r'": BOOL}
DOM = FiniteDomain(lo=0, hi=3)


def fml(text):
    return parse_formula(text, ENV)


class TestEvaluate:
    def test_floored_division(self):
        assert evaluate(fml("-(7) div 2"), {}, DOM) == -4
        assert evaluate(fml("-(7) mod 2"), {}, DOM) == 1
        assert evaluate(fml("7 div 2"), {}, DOM) == 3

    def test_division_by_zero_undefined(self):
        with pytest.raises(EvaluationUndefined):
            evaluate(fml("x div y"), {"x": 1, "y": 0}, DOM)

    def test_out_of_window_read_undefined(self):
        with pytest.raises(EvaluationUndefined):
            evaluate(fml("f[x]"), {"f": (True,) * 4, "x": 9}, DOM)

    def test_quantifier_folds(self):
        state = {"f": (True, True, False, True)}
        assert evaluate(fml(r"(\count i : 0 \le i < 4 : f[i])"), state, DOM) == 3
        assert evaluate(fml(r"(\sum i : 0 \le i < 4 : i)"), state, DOM) == 6
        assert evaluate(fml(r"(MAX i : f[i] : i)"), state, DOM) == 3
        assert evaluate(fml(r"(MIN i : f[i] : i)"), state, DOM) == 0

    def test_min_over_empty_range_undefined(self):
        with pytest.raises(EvaluationUndefined):
            evaluate(fml(r"(MIN i : false : i)"), {}, DOM)

    def test_compiled_agrees_with_interpretive(self):
        import random

        from gen import random_expr

        rng = random.Random(9)
        env = {"n": INT, "p": BOOL, "f": ArraySort(BOOL)}
        for _ in range(150):
            e = random_expr(rng, rng.choice([BOOL, INT]), rng.randrange(0, 5), env, div_mod=True)
            fn = compile_expr(e, DOM)
            for state in enumerate_states(sorted(env.items()), DOM):
                try:
                    a = evaluate(e, state, DOM)
                except EvaluationUndefined:
                    with pytest.raises(EvaluationUndefined):
                        fn(state)
                    continue
                assert fn(state) == a


class TestBruteForce:
    def test_valid_is_domain_limited(self):
        v = brute_force([], fml("x < x+1"), DOM)
        assert v.is_valid and v.domain_limited

    def test_first_model_in_lexicographic_order(self):
        v = brute_force([], fml("x < y"), DOM)
        assert v.is_invalid
        assert v.model == {"x": 0, "y": 0}

    def test_hypotheses_restrict_the_check(self):
        assert brute_force([fml("x > 0")], fml("x ≥ 1"), DOM).is_valid
        v = brute_force([fml("x ≥ 0")], fml("x ≥ 1"), DOM)
        assert v.is_invalid and v.model == {"x": 0}

    def test_metavariables_enumerate_as_rigid_unknowns(self):
        assert brute_force([], fml(r"r' \equiv r'"), DOM).is_valid
        v = brute_force([], fml(r"r' \equiv true"), DOM)
        assert v.is_invalid and v.model == {"r'": False}

    def test_budget(self):
        tiny = FiniteDomain(lo=0, hi=3, max_states=2)
        with pytest.raises(BudgetExceeded):
            brute_force([], fml("x = y"), tiny)

    def test_empty_range_forall_holds(self):
        assert brute_force([], fml(r"(\forall i : false : f[i])"), DOM).is_valid

    def test_model_format(self):
        assert format_model({"x": 1, "p": True, "f": (False,)}) == "{f=[false], p=true, x=1}"


class TestInterpret:
    def test_skip_identity(self):
        s = {"x": 1}
        assert interpret(Skip(), s, 10, DOM) == s

    def test_if_without_true_guard_aborts(self):
        p = If(((fml("false"), AnnotatedProgram(TRUE, TRUE, Skip())),))
        with pytest.raises(Abort):
            interpret(p, {}, 10, DOM)

    def test_unknown_fragment_cannot_run(self):
        with pytest.raises(Abort):
            interpret(UnkProg("S"), {}, 10, DOM)

    def test_fuel_exhaustion(self):
        body = AnnotatedProgram(TRUE, TRUE, Skip())
        loop = While((TRUE,), TRUE, body)
        with pytest.raises(FuelExhausted):
            interpret(loop, {}, 5, DOM)

    def test_loop_counts_down(self):
        body = AnnotatedProgram(
            TRUE, TRUE, Assignment((Var("x", INT),), (fml("x-1"),))
        )
        loop = While((TRUE,), fml("x > 0"), body)
        assert interpret(loop, {"x": 3}, 10, DOM)["x"] == 0

    def test_array_cell_update(self):
        from calx.gcl import ArrayTarget

        assign = Assignment(
            (ArrayTarget(Var("f", ArraySort(BOOL)), fml("x")),), (fml("p"),)
        )
        out = interpret(assign, {"f": (False,) * 4, "x": 2, "p": True}, 10, DOM)
        assert out["f"] == (False, False, True, False)

    def test_final_array_program(self, s2_session):
        program = s2_session.state_at().program.body
        dom = FiniteDomain(lo=0, hi=5)
        base = {"r": False, "s": False, "n": 0}
        runs = {
            (True, False, True): False,
            (True, True): True,
            (): True,
            (False, True): False,
        }
        for bits, expected in runs.items():
            f = tuple(bits) + (False,) * (6 - len(bits))
            out = interpret(program, {**base, "N": len(bits), "f": f}, 100, dom)
            assert out["r"] == expected, bits

    def test_interpret_all_demonic_choice(self):
        x = Var("x", INT)
        b1 = AnnotatedProgram(TRUE, TRUE, Assignment((x,), (fml("0"),)))
        b2 = AnnotatedProgram(TRUE, TRUE, Assignment((x,), (fml("1"),)))
        both = If(((fml("p"), b1), (fml("p"), b2)))
        outs = interpret_all(both, {"p": True, "x": 3}, DOM)
        assert sorted(o["x"] for o in outs) == [0, 1]
        aborted = interpret_all(both, {"p": False, "x": 3}, DOM)
        assert aborted == [None]
