"""Sessions: one derivation tree, its checker, and a single-writer lock.

A session owns no state that the derivation document cannot rebuild; saving
writes the tree document, loading replays it (optionally trusting recorded
verdicts).  Mutations are serialized per session — a second concurrent writer
is rejected, which the HTTP layer reports as 409.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path as FsPath
from typing import Optional

from calx.errors import FormatError, Inapplicable
from calx.oracle import FiniteDomain
from calx.solver import Checker
from calx.smt import SolverConfig
from calx.tactics import parse_tactic, TacticReport
from calx.tree import DerivationTree, deserialize, serialize
from calx.wp import generate_obligations, ProofObligation


class SessionBusy(Exception):
    """Another mutation is in flight."""


class Session:
    def __init__(
        self,
        solvers: tuple[SolverConfig, ...] = (),
        domain: FiniteDomain = FiniteDomain(lo=0, hi=5),
        dump_dir: Optional[str] = None,
        trust_replay: bool = False,
        session_id: Optional[str] = None,
    ):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.checker = Checker(solvers=solvers, domain=domain, dump_dir=dump_dir)
        self.trust_replay = trust_replay
        self.tree: Optional[DerivationTree] = None
        self.dirty = False
        self._lock = threading.Lock()

    # --- write path --------------------------------------------------------------

    def _acquire(self):
        if not self._lock.acquire(blocking=False):
            raise SessionBusy(f"session {self.id} has a mutation in flight")

    def apply_text(self, text: str, at: Optional[int] = None) -> tuple[int, TacticReport]:
        """Parse and apply one tactic command; extends at the active position
        unless a node is named (branching when it already has children)."""
        inv = parse_tactic(text)
        self._acquire()
        try:
            if self.tree is None:
                self.tree = DerivationTree.create(inv, self.checker)
                self.dirty = True
                return 0, TacticReport(("derivation started",))
            target = self.tree.active_leaf if at is None else at
            node_id, report = self.tree.extend(target, inv, self.checker)
            self.dirty = True
            return node_id, report
        finally:
            self._lock.release()

    def navigate(self, node_id: int, descend: bool = False) -> int:
        self._require_tree()
        self._acquire()
        try:
            out = self.tree.navigate(node_id, descend=descend)
            self.dirty = True
            return out
        finally:
            self._lock.release()

    # --- read path ------------------------------------------------------------------

    def _require_tree(self) -> DerivationTree:
        if self.tree is None:
            raise Inapplicable("no derivation yet; start with init4")
        return self.tree

    def state_at(self, node_id: Optional[int] = None):
        tree = self._require_tree()
        return tree.node(tree.active_leaf if node_id is None else node_id).state

    def obligations(self, node_id: Optional[int] = None) -> list[ProofObligation]:
        state = self.state_at(node_id)
        return [
            self.checker.check_obligation(po)
            for po in generate_obligations(state.program)
        ]

    # --- persistence -------------------------------------------------------------------

    def save(self, path: str) -> None:
        tree = self._require_tree()
        FsPath(path).write_text(serialize(tree, self.checker))
        self.dirty = False

    def load(self, path: str, trust_replay: Optional[bool] = None) -> None:
        text = FsPath(path).read_text()
        if not text.strip():
            raise FormatError(f"{path} is empty")
        trust = self.trust_replay if trust_replay is None else trust_replay
        self._acquire()
        try:
            self.tree = deserialize(text, self.checker, trust_replay=trust)
            self.dirty = False
        finally:
            self._lock.release()


class SessionStore:
    def __init__(self, **session_kwargs):
        self.session_kwargs = session_kwargs
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        s = Session(**self.session_kwargs)
        with self._lock:
            self.sessions[s.id] = s
        return s

    def get(self, session_id: str) -> Optional[Session]:
        with self._lock:
            return self.sessions.get(session_id)
