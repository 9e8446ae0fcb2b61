"""The derivation tree: the complete, append-only history of a derivation.

Every node snapshots the state produced by applying one tactic to its
parent's state, so the whole tree replays from the root commands alone.
Backtracking is navigation, branching is extending an interior node; nothing
is ever deleted.

The on-disk document holds the format version, one record per node (creation
order) with the producing command, the per-node solver verdicts (by
obligation digest, enabling trust-replay without solvers installed), and the
active leaf.  Wall-clock timestamps stay in memory only — the document is
byte-stable across runs and machines, which the golden tests rely on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from calx.errors import FormatError, ReplayMismatch, UnknownNode
from calx.oracle import Verdict
from calx.solver import Checker
from calx.tactics import (
    apply_tactic,
    DerivationState,
    parse_tactic,
    TacticInvocation,
    TacticReport,
)

FORMAT_TAG = "calx-derivation 1"


@dataclass
class DerivationNode:
    id: int
    parent: Optional[int]
    children: list[int]
    state: DerivationState
    produced_by: TacticInvocation
    digests: tuple[str, ...]
    timestamp: float


class DerivationTree:
    def __init__(self):
        self.nodes: dict[int, DerivationNode] = {}
        self.active_leaf: int = 0
        self._next_id: int = 0

    # --- construction -----------------------------------------------------------

    @staticmethod
    def create(root_inv: TacticInvocation, checker: Checker) -> "DerivationTree":
        tree = DerivationTree()
        with checker.journal() as j:
            state, _ = apply_tactic(None, root_inv, checker)
        tree.nodes[0] = DerivationNode(
            0, None, [], state, root_inv, tuple(sorted(j.digests)), time.time()
        )
        tree._next_id = 1
        tree.active_leaf = 0
        return tree

    @property
    def root(self) -> DerivationNode:
        return self.nodes[0]

    def node(self, node_id: int) -> DerivationNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no node {node_id}") from None

    def extend(
        self, at: int, inv: TacticInvocation, checker: Checker
    ) -> tuple[int, TacticReport]:
        """Apply a tactic at any node; a node that already has children
        branches.  The tree is untouched when the tactic fails."""
        parent = self.node(at)
        with checker.journal() as j:
            state, report = apply_tactic(parent.state, inv, checker)
        node_id = self._next_id
        self._next_id += 1
        self.nodes[node_id] = DerivationNode(
            node_id, at, [], state, inv, tuple(sorted(j.digests)), time.time()
        )
        parent.children.append(node_id)
        self.active_leaf = node_id
        return node_id, report

    # --- navigation ---------------------------------------------------------------

    def rightmost_descent(self, node_id: int) -> int:
        node = self.node(node_id)
        while node.children:
            node = self.nodes[node.children[-1]]
        return node.id

    def navigate(self, target: int, descend: bool = False) -> int:
        """Move the active position.  Plain navigation lands exactly on the
        target (backtracking); descend=True is the sibling-marker rule —
        follow rightmost children down to a leaf."""
        self.node(target)
        self.active_leaf = self.rightmost_descent(target) if descend else target
        return self.active_leaf

    def active_path(self) -> list[int]:
        path = []
        cur: Optional[int] = self.active_leaf
        while cur is not None:
            path.append(cur)
            cur = self.nodes[cur].parent
        return list(reversed(path))

    def siblings(self, node_id: int) -> list[int]:
        node = self.node(node_id)
        if node.parent is None:
            return [node_id]
        return list(self.nodes[node.parent].children)

    def active_path_view(self) -> list[dict]:
        """Root-to-active entries with the sibling markers the UI draws."""
        out = []
        for node_id in self.active_path():
            node = self.nodes[node_id]
            out.append(
                {
                    "id": node_id,
                    "tactic": node.produced_by.name,
                    "command": node.produced_by.render(),
                    "mode": node.state.mode,
                    "siblings": self.siblings(node_id),
                    "children": list(node.children),
                }
            )
        return out

    # --- integrity -------------------------------------------------------------------

    def check_invariants(self) -> None:
        assert 0 in self.nodes, "missing root"
        assert self.root.parent is None
        reachable = set()
        stack = [0]
        while stack:
            cur = stack.pop()
            assert cur not in reachable, "cycle detected"
            reachable.add(cur)
            node = self.nodes[cur]
            for c in node.children:
                assert self.nodes[c].parent == cur, "parent/child mismatch"
                assert c > cur, "children must be created after their parent"
                stack.append(c)
            assert node.children == sorted(node.children), "children out of order"
        assert reachable == set(self.nodes), "unreachable nodes"
        assert self.active_leaf in self.nodes
        for node in self.nodes.values():
            if node.parent is not None:
                assert node.parent in self.nodes

    # --- persistence --------------------------------------------------------------------


def _verdict_line(digest: str, v: Verdict) -> str:
    limited = "1" if v.domain_limited else "0"
    reason = v.reason or ""
    return f"verdict {digest} {v.kind} {v.source or '-'} {limited} {reason}".rstrip()


def serialize(tree: DerivationTree, checker: Checker) -> str:
    """Stable text document: replayable commands plus recorded verdicts."""
    lines = [FORMAT_TAG]
    digests: set[str] = set()
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        parent = "-" if node.parent is None else str(node.parent)
        lines.append(f"node {node_id} {parent}")
        lines.append(f"  {node.produced_by.render()}")
        digests.update(node.digests)
    for digest in sorted(digests):
        v = checker.cache.get(digest)
        if v is not None:
            lines.append(_verdict_line(digest, v))
    lines.append(f"active {tree.active_leaf}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def deserialize(
    text: str, checker: Checker, trust_replay: bool = False
) -> DerivationTree:
    """Rebuild a tree by replaying its commands.

    trust_replay seeds the checker with the recorded verdicts first, so
    replay performs no solver or oracle work; otherwise everything is
    re-verified and any tactic that no longer succeeds raises
    ReplayMismatch."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_TAG:
        raise FormatError(f"expected '{FORMAT_TAG}' header")
    records: list[tuple[int, Optional[int], str]] = []
    verdicts: list[tuple[str, Verdict]] = []
    active: Optional[int] = None
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line == "end":
            continue
        if line.startswith("node "):
            bits = line.split()
            if len(bits) != 3:
                raise FormatError(f"bad node line: {line!r}")
            node_id = int(bits[1])
            parent = None if bits[2] == "-" else int(bits[2])
            if i >= len(lines):
                raise FormatError("node record missing its command")
            command = lines[i].strip()
            i += 1
            records.append((node_id, parent, command))
        elif line.startswith("verdict "):
            bits = line.split(None, 5)
            if len(bits) < 5:
                raise FormatError(f"bad verdict line: {line!r}")
            _, digest, kind, source, limited = bits[:5]
            reason = bits[5] if len(bits) > 5 else None
            verdicts.append(
                (
                    digest,
                    Verdict(
                        kind,
                        source=("" if source == "-" else source),
                        domain_limited=limited == "1",
                        reason=reason,
                    ),
                )
            )
        elif line.startswith("active "):
            active = int(line.split()[1])
        else:
            raise FormatError(f"unrecognized line: {line!r}")
    if not records:
        raise FormatError("document has no nodes")
    if active is None:
        raise FormatError("document has no active marker")
    if trust_replay:
        for digest, v in verdicts:
            checker.seed(digest, v)
    tree = DerivationTree()
    for node_id, parent, command in records:
        if node_id != tree._next_id:
            raise FormatError(f"node ids must be dense and ordered, got {node_id}")
        inv = parse_tactic(command)
        try:
            if parent is None:
                if node_id != 0:
                    raise FormatError("only node 0 may be the root")
                with checker.journal() as j:
                    state, _ = apply_tactic(None, inv, checker)
            else:
                with checker.journal() as j:
                    state, _ = apply_tactic(tree.nodes[parent].state, inv, checker)
        except FormatError:
            raise
        except Exception as exc:
            raise ReplayMismatch(f"node {node_id} ({command}) failed to replay: {exc}") from exc
        tree.nodes[node_id] = DerivationNode(
            node_id,
            parent,
            [],
            state,
            inv,
            tuple(sorted(j.digests)),
            time.time(),
        )
        if parent is not None:
            tree.nodes[parent].children.append(node_id)
        tree._next_id = node_id + 1
    if active not in tree.nodes:
        raise FormatError(f"active node {active} does not exist")
    tree.active_leaf = active
    tree.check_invariants()
    return tree
