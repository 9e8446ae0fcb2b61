"""Weakest preconditions against the execution oracle, plus the SMT-LIB
emission used when external solvers are configured.

Run with:  python demos/wp_and_oracle.py
"""

from calx.formula import BOOL, INT, parse_formula, pretty_print, Var
from calx.gcl import AnnotatedProgram, Assignment, Composition, If, UnkProg
from calx.oracle import enumerate_states, evaluate, FiniteDomain, interpret_all
from calx.smt import to_smtlib
from calx.wp import generate_obligations, wp

env = {"x": INT, "y": INT, "p": BOOL}


def f(text):
    return parse_formula(text, env)


x, y = Var("x", INT), Var("y", INT)

# if p -> x := x+1 [] ¬p -> x, y := y, x fi
branchy = If(
    (
        (f("p"), AnnotatedProgram(f("p"), f("true"), Assignment((x,), (f("x+1"),)))),
        (f(r"\neg p"), AnnotatedProgram(f(r"\neg p"), f("true"),
                                        Assignment((x, y), (f("y"), f("x"))))),
    )
)

post = f("x ≤ y")
weakest = wp(branchy, post)
print("program : if p → x := x+1 [] ¬p → x, y := y, x fi")
print("post    :", pretty_print(post))
print("wp      :", pretty_print(weakest))

print("\n== wp agrees with demonic execution on every state ==")
dom = FiniteDomain(lo=0, hi=3)
mismatches = 0
for sigma in enumerate_states(sorted(env.items()), dom):
    claimed = bool(evaluate(weakest, sigma, dom))
    outcomes = interpret_all(branchy, dict(sigma), dom)
    actual = all(o is not None and evaluate(post, o, dom) for o in outcomes)
    mismatches += claimed != actual
print(f"checked {4 * 4 * 2} states, {mismatches} mismatches")

print("\n== obligations of an annotated fragment ==")
fragment = AnnotatedProgram(
    f("0 ≤ x"),
    f("0 ≤ x ∧ 0 ≤ y"),
    Composition(
        (
            AnnotatedProgram(f("0 ≤ x"), f("0 ≤ x ∧ 0 ≤ x*x"), UnkProg("S0")),
            AnnotatedProgram(
                f("0 ≤ x ∧ 0 ≤ x*x"),
                f("0 ≤ x ∧ 0 ≤ y"),
                Assignment((y,), (f("x*x"),)),
            ),
        )
    ),
)
for po in generate_obligations(fragment):
    print(f"  {po.label}")
    print(f"      {pretty_print(po.hypotheses[0])}  ⊢  {pretty_print(po.goal)}")

print("\n== the same goal as an SMT-LIB script ==")
po = generate_obligations(fragment)[-1]
print(to_smtlib(list(po.hypotheses), po.goal, comment=po.label))
