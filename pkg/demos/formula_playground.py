"""A tour of the formula layer: parsing LaTeX-flavored input, precedence-aware
printing, capture-avoiding substitution, and finite-domain evaluation.

Run with:  python demos/formula_playground.py
"""

from calx.formula import (
    ArraySort,
    BOOL,
    INT,
    parse_formula,
    pretty_print,
    substitute,
    Substitution,
)
from calx.oracle import brute_force, evaluate, FiniteDomain

env = {"n": INT, "N": INT, "f": ArraySort(BOOL), "r": BOOL}

print("== parsing and printing ==")
sorted_prefix = parse_formula(
    r"r \equiv (\forall i, j : 0 \le i < j < N : f[j] \Rightarrow f[i])", env
)
print("input  :", r"r \equiv (\forall i, j : 0 \le i < j < N : f[j] \Rightarrow f[i])")
print("printed:", pretty_print(sorted_prefix))
print("round trips:", parse_formula(pretty_print(sorted_prefix), env) == sorted_prefix)

print("\n== substitution is simultaneous and capture avoiding ==")
invariant = parse_formula(r"(\forall i : 0 \le i < n : f[i])", env)
print("P           :", pretty_print(invariant))
print("P(n := n+1) :", pretty_print(
    substitute(invariant, Substitution.of(("n", parse_formula("n+1", env))))
))
clash = parse_formula(r"(\forall i : 0 \le i < n : f[i] \equiv r)", env)
replaced = substitute(
    clash, Substitution.of(("r", parse_formula("f[i]", {**env, "i": INT})))
)
print("bound variable renamed on clash:", pretty_print(replaced))

print("\n== evaluation over a finite window ==")
dom = FiniteDomain(lo=0, hi=5)
state = {"N": 4, "f": (True, True, False, False, False, False), "r": True}
print("state:", state)
print("holds:", evaluate(sorted_prefix, state, dom))
state["f"] = (True, False, True, False, False, False)
print("after breaking the prefix:", evaluate(sorted_prefix, state, dom))

print("\n== exhaustive validity with counterexamples ==")
claim = parse_formula(r"(\forall i : 0 \le i < N : f[i]) \Rightarrow f[0]", env)
print("claim :", pretty_print(claim))
print("verdict:", brute_force([], claim, dom))
wrong = parse_formula(r"f[0] \Rightarrow (\forall i : 0 \le i < N : f[i])", env)
print("wrong :", pretty_print(wrong))
print("verdict:", brute_force([], wrong, dom))
