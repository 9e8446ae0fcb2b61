import stat
import textwrap

import pytest

from calx.errors import CalxError
from calx.formula import ArraySort, BOOL, INT, parse_formula, TRUE
from calx.oracle import FiniteDomain, holds
from calx.smt import (
    materialize_model,
    parse_model,
    run_solver,
    smt_expr,
    SolverConfig,
    to_smtlib,
    UnsupportedQuantifier,
)
from calx.solver import Checker

ENV = {"x": INT, "y": INT, "p": BOOL, "f": ArraySort(BOOL), "r'": BOOL}


def fml(text):
    return parse_formula(text, ENV)


def stub_solver(tmp_path, name, body):
    path = tmp_path / name
    path.write_text("#!/bin/sh\n" + textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


class TestEmission:
    def test_negated_goal_script(self):
        script = to_smtlib([TRUE], TRUE)
        assert "(assert (not true))" in script
        assert script.strip().endswith("(get-model)")
        assert "(check-sat)" in script

    def test_declarations_cover_free_variables(self):
        script = to_smtlib([fml("x < y")], fml("f[x]"))
        assert "(declare-const x Int)" in script
        assert "(declare-const f (Array Int Bool))" in script

    def test_operators(self):
        assert smt_expr(fml("x ≠ y")) == "(distinct x y)"
        assert smt_expr(fml("p ≡ p")) == "(= p p)"
        assert smt_expr(fml(r"f[x \mapsto p][y]")) == "(select (store f x p) y)"
        assert smt_expr(fml(r"(\forall i : 0 \le i < x : f[i])")) == (
            "(forall ((i Int)) (=> (and (<= 0 i) (< i x)) (select f i)))"
        )

    def test_metavariables_refused(self):
        with pytest.raises(CalxError):
            to_smtlib([], fml(r"r' \equiv true"))

    def test_sum_expansion_with_literal_bounds(self):
        out = smt_expr(fml(r"(\sum i : 0 \le i < 3 : i+1)"))
        assert out.count("ite") == 3

    def test_unbounded_fold_unsupported(self):
        with pytest.raises(UnsupportedQuantifier):
            smt_expr(fml(r"(\sum i : 0 \le i < x : i)"))
        with pytest.raises(UnsupportedQuantifier):
            smt_expr(fml(r"(MAX i : 0 \le i < 3 : i)"))


class TestDriver:
    def test_unsat_means_valid(self, tmp_path):
        exe = stub_solver(tmp_path, "always-unsat", "cat > /dev/null\necho unsat\n")
        v = run_solver(SolverConfig("stub", exe, timeout=5), "(check-sat)")
        assert v.is_valid and v.source == "stub"

    def test_sat_model_parsed(self, tmp_path):
        exe = stub_solver(
            tmp_path,
            "always-sat",
            """\
            cat > /dev/null
            echo sat
            echo '((define-fun x () Int 2) (define-fun p () Bool true)'
            echo ' (define-fun y () Int (- 1)))'
            """,
        )
        v = run_solver(SolverConfig("stub", exe, timeout=5), "x")
        assert v.is_invalid
        assert v.model == {"x": 2, "p": True, "y": -1}

    def test_timeout_yields_unknown(self, tmp_path):
        exe = stub_solver(tmp_path, "sleepy", "sleep 5\necho unsat\n")
        v = run_solver(SolverConfig("stub", exe, timeout=0.2), "x")
        assert v.kind == "unknown" and v.reason == "timeout"

    def test_garbage_output_is_solver_error(self, tmp_path):
        exe = stub_solver(tmp_path, "broken", "cat > /dev/null\necho whatever\n")
        v = run_solver(SolverConfig("stub", exe, timeout=5), "x")
        assert v.kind == "unknown" and "solver-error" in v.reason

    def test_missing_executable(self):
        v = run_solver(SolverConfig("none", "/does/not/exist", timeout=1), "x")
        assert v.kind == "unknown" and "solver-error" in v.reason


class TestModels:
    def test_const_and_store_arrays_materialize(self):
        out = "sat\n(\n(define-fun f () (Array Int Bool) (store ((as const (Array Int Bool)) false) 1 true))\n(define-fun x () Int 1)\n)"
        model = parse_model(out)
        dom = FiniteDomain(lo=0, hi=3)
        state = materialize_model(model, [("f", ArraySort(BOOL)), ("x", INT)], dom)
        assert state == {"f": (False, True, False, False), "x": 1}

    def test_incomplete_model_is_none(self):
        dom = FiniteDomain(lo=0, hi=3)
        assert materialize_model({}, [("x", INT)], dom) is None


class TestCheckerPortfolio:
    def test_first_definitive_wins_and_is_cached(self, tmp_path):
        counter = tmp_path / "calls"
        exe = stub_solver(
            tmp_path,
            "counting-unsat",
            f"cat > /dev/null\necho run >> {counter}\necho unsat\n",
        )
        ck = Checker(
            solvers=(SolverConfig("stub", exe, timeout=5),),
            domain=FiniteDomain(lo=0, hi=3),
        )
        goal = fml("x = x")
        assert ck.check((), goal).is_valid
        assert ck.check((), goal).is_valid
        assert counter.read_text().count("run") == 1

    def test_lying_sat_model_demoted_and_oracle_rescues(self, tmp_path):
        exe = stub_solver(
            tmp_path,
            "liar",
            "cat > /dev/null\necho sat\necho '((define-fun p () Bool false))'\n",
        )
        ck = Checker(
            solvers=(SolverConfig("liar", exe, timeout=5),),
            domain=FiniteDomain(lo=0, hi=3),
        )
        v = ck.check((), fml(r"p \vee \neg p"))
        assert v.is_valid and v.source == "oracle"

    def test_honest_sat_model_cross_checked(self, tmp_path):
        exe = stub_solver(
            tmp_path,
            "honest",
            "cat > /dev/null\necho sat\necho '((define-fun p () Bool false))'\n",
        )
        ck = Checker(
            solvers=(SolverConfig("honest", exe, timeout=5),),
            domain=FiniteDomain(lo=0, hi=3),
        )
        v = ck.check((), fml("p"))
        assert v.is_invalid and v.reason == "model cross-checked"
        assert not holds([], fml("p"), v.model, ck.domain)

    def test_dump_directory(self, tmp_path):
        exe = stub_solver(tmp_path, "u", "cat > /dev/null\necho unsat\n")
        dump = tmp_path / "smt"
        ck = Checker(
            solvers=(SolverConfig("u", exe, timeout=5),),
            domain=FiniteDomain(lo=0, hi=3),
            dump_dir=str(dump),
        )
        ck.check((), fml("x = x"))
        files = list(dump.glob("*.smt2"))
        assert len(files) == 1
        assert "(check-sat)" in files[0].read_text()

    def test_unsupported_quantifier_routes_to_oracle(self, tmp_path):
        counter = tmp_path / "calls"
        exe = stub_solver(
            tmp_path, "c", f"cat > /dev/null\necho run >> {counter}\necho unsat\n"
        )
        ck = Checker(
            solvers=(SolverConfig("c", exe, timeout=5),),
            domain=FiniteDomain(lo=0, hi=3),
        )
        v = ck.check((), fml(r"(MAX i : 0 \le i \le x : i) = x"))
        assert v.is_valid and v.source == "oracle"
        assert not counter.exists()
