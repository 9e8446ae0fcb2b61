"""Command line entry point: interactive REPL, batch script replay (the
regression harness), or the HTTP server.

REPL commands:

    <tactic text>          apply a tactic at the active node
    :tree                  derivation tree summary
    :nav <id>              move the active position (backtracking)
    :show [minimal|full]   render the active node
    :obligations           list proof obligations with status
    :save <file> / :load <file>
    :quit

Batch mode (--script) replays a command file, aborts with a nonzero exit on
the first failure, and prints the final program.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from calx.errors import CalxError
from calx.oracle import FiniteDomain
from calx.render import render_state_text
from calx.session import Session, SessionBusy
from calx.solver import load_solver_file


def build_session(args) -> Session:
    solvers = ()
    domain = FiniteDomain(lo=0, hi=5)
    if args.solver_config:
        solvers, domain = load_solver_file(args.solver_config)
    return Session(
        solvers=solvers,
        domain=domain,
        dump_dir=args.dump_smt,
        trust_replay=args.trust_replay,
    )


def run_command(session: Session, line: str, out=sys.stdout) -> None:
    line = line.strip()
    if not line or line.startswith("#"):
        return
    if line.startswith(":"):
        parts = line.split()
        cmd, rest = parts[0], parts[1:]
        if cmd == ":quit":
            raise SystemExit(0)
        if cmd == ":tree":
            tree = session._require_tree()
            active = set(tree.active_path())
            for node_id in sorted(tree.nodes):
                n = tree.nodes[node_id]
                marker = "*" if node_id in active else " "
                arrow = " <- active" if node_id == tree.active_leaf else ""
                parent = "-" if n.parent is None else n.parent
                out.write(f"{marker} {node_id:>3} (parent {parent}) {n.produced_by.name}{arrow}\n")
            return
        if cmd == ":nav":
            if not rest:
                raise CalxError(":nav needs a node id")
            session.navigate(int(rest[0]))
            out.write(f"active: {session.tree.active_leaf}\n")
            return
        if cmd == ":show":
            mode = rest[0] if rest else "minimal"
            if mode not in ("minimal", "full"):
                raise CalxError(":show takes minimal or full")
            out.write(render_state_text(session.state_at(), mode) + "\n")
            return
        if cmd == ":obligations":
            for po in session.obligations():
                out.write(f"  {po.status:>8}  {po.label}\n")
            return
        if cmd == ":save":
            if not rest:
                raise CalxError(":save needs a file name")
            session.save(rest[0])
            out.write(f"saved {rest[0]}\n")
            return
        if cmd == ":load":
            if not rest:
                raise CalxError(":load needs a file name")
            session.load(rest[0])
            out.write(f"loaded {rest[0]} (active {session.tree.active_leaf})\n")
            return
        raise CalxError(f"unknown command {cmd}")
    node_id, report = session.apply_text(line)
    summary = report.summary()
    out.write(f"[{node_id}] {summary}\n" if summary else f"[{node_id}]\n")


def run_script(session: Session, path: str, out=sys.stdout) -> int:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                run_command(session, line, out=out)
            except SystemExit:
                break
            except (CalxError, SessionBusy, OSError, ValueError) as exc:
                sys.stderr.write(f"{path}:{lineno}: {type(exc).__name__}: {exc}\n")
                return 1
    if session.tree is not None:
        out.write(render_state_text(session.state_at(), "minimal") + "\n")
    return 0


def repl(session: Session, out=sys.stdout) -> int:
    out.write("calx derivation workbench — :quit to exit\n")
    while True:
        try:
            line = input("calx> ")
        except EOFError:
            return 0
        try:
            run_command(session, line, out=out)
        except SystemExit:
            return 0
        except (CalxError, SessionBusy, OSError, ValueError) as exc:
            out.write(f"error: {type(exc).__name__}: {exc}\n")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="calx", description=__doc__)
    parser.add_argument("--port", type=int, help="serve the HTTP API on this port")
    parser.add_argument("--solver-config", help="JSON file with solver and domain settings")
    parser.add_argument("--script", help="replay a command file and exit")
    parser.add_argument("--trust-replay", action="store_true",
                        help="trust recorded verdicts when loading documents")
    parser.add_argument("--dump-smt", help="dump emitted SMT-LIB scripts to this directory")
    args = parser.parse_args(argv)

    if args.port is not None:
        import uvicorn

        from calx.server import create_app
        from calx.session import SessionStore

        solvers = ()
        domain = FiniteDomain(lo=0, hi=5)
        if args.solver_config:
            solvers, domain = load_solver_file(args.solver_config)
        store = SessionStore(
            solvers=solvers,
            domain=domain,
            dump_dir=args.dump_smt,
            trust_replay=args.trust_replay,
        )
        uvicorn.run(create_app(store), host="127.0.0.1", port=args.port)
        return 0

    session = build_session(args)
    if args.script:
        return run_script(session, args.script)
    return repl(session)


if __name__ == "__main__":
    sys.exit(main())
