"""Replay the bundled array derivation and inspect the result: the derivation
tree, the proof obligations, the minimal-annotation display, and a few runs
of the derived program.

Run with:  python demos/derive_array_program.py
"""

import io
from pathlib import Path

from calx.cli import run_script
from calx.gcl import minimal_annotations
from calx.oracle import FiniteDomain, interpret
from calx.render import render_program_text
from calx.session import Session

script = Path(__file__).resolve().parents[1] / "scripts" / "s2-derivation.calx"
session = Session(domain=FiniteDomain(lo=0, hi=5))
code = run_script(session, str(script), out=io.StringIO())
assert code == 0

tree = session.tree
print("== derivation tree ==")
active = set(tree.active_path())
for node_id in sorted(tree.nodes):
    node = tree.nodes[node_id]
    marker = "*" if node_id in active else " "
    parent = "-" if node.parent is None else node.parent
    print(f"{marker} {node_id:>2} <- {parent:>2}  {node.produced_by.name}")
print("(*) marks the active path; node 1 has two children: the branch that")
print("got stuck at the unrepresentable metavariable, and the strengthened retry.")

print("\n== where the first attempt stopped ==")
stuck = tree.nodes[7].state
from calx.formula import pretty_print

print("calculated:", pretty_print(stuck.frames[-1].current))
print("but no program expression exists for r' without tracking the prefix.")

print("\n== final program, minimal annotations ==")
final = session.state_at().program
print(render_program_text(final, minimal_annotations(final)))

print("\n== proof obligations ==")
for po in session.obligations():
    print(f"  {po.status:>6}  {po.label}")

print("\n== running the derived program ==")
dom = FiniteDomain(lo=0, hi=5)
for bits in [(True, True, False), (True, False, True), (), (False, False)]:
    f = tuple(bits) + (False,) * (6 - len(bits))
    sigma = {"N": len(bits), "f": f, "r": False, "s": False, "n": 0}
    out = interpret(final.body, sigma, 100, dom)
    shown = "".join("T" if b else "F" for b in bits) or "(empty)"
    print(f"  f = {shown:<8} ->  r = {out['r']}")
