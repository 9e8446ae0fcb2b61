"""Discharged obligations imply actual behavior: running a fully derived
program from any state satisfying its precondition terminates in a state
satisfying its postcondition (finite domains, fuel-bounded)."""

import pytest

from calx.errors import EvaluationUndefined
from calx.oracle import (
    compile_expr,
    enumerate_states,
    FiniteDomain,
    interpret,
)
from calx.render import render_state_text
from calx.solver import Checker
from calx.wp import generate_obligations

from conftest import GOLDEN


def behavior_matches_spec(session, dom: FiniteDomain, fuel: int = 200) -> int:
    program = session.state_at().program
    decls = session.state_at().decls
    checker = Checker(domain=dom)
    assert all(
        checker.check_obligation(po).status == "valid"
        for po in generate_obligations(program)
    )
    pre = compile_expr(program.pre, dom)
    post = compile_expr(program.post, dom)
    ran = 0
    for sigma in enumerate_states(list(decls.entries), dom):
        try:
            if not pre(sigma):
                continue
        except EvaluationUndefined:
            continue
        out = interpret(program.body, dict(sigma), fuel, dom)
        assert post(out), (sigma, out)
        ran += 1
    return ran


class TestDerivedBehavior:
    def test_array_program_meets_its_spec_everywhere(self, s2_session):
        ran = behavior_matches_spec(s2_session, FiniteDomain(lo=0, hi=5))
        assert ran > 2000

    def test_division_program_meets_its_spec_everywhere(self, intdiv_session):
        ran = behavior_matches_spec(intdiv_session, FiniteDomain(lo=0, hi=5))
        assert ran > 500


class TestCanonicalRender:
    def test_full_annotation_render_is_frozen(self, s2_session):
        golden = (GOLDEN / "s2-final-full.txt").read_text()
        assert render_state_text(s2_session.state_at(), "full") + "\n" == golden

    def test_minimal_renders_are_frozen(self, s2_session, intdiv_session):
        assert (
            render_state_text(s2_session.state_at(), "minimal") + "\n"
            == (GOLDEN / "s2-final-minimal.txt").read_text()
        )
        assert (
            render_state_text(intdiv_session.state_at(), "minimal") + "\n"
            == (GOLDEN / "intdiv-final-minimal.txt").read_text()
        )
