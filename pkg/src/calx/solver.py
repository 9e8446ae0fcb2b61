"""Obligation discharge: solver portfolio with finite-domain fallback and an
alpha-equivalence cache.

Solvers are tried in configuration order and the first definitive verdict
wins; an invalid model is cross-checked against the internal evaluator before
it is believed.  Obligations containing metavariables never reach a solver —
the oracle probes them with metavariables as rigid unknowns, which is sound
for the schematic side conditions tactics generate.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import replace
from pathlib import Path as FsPath
from typing import Optional

from calx.errors import BudgetExceeded
from calx.formula import Expr, has_metavars
from calx.oracle import (
    brute_force,
    FiniteDomain,
    holds,
    obligation_vars,
    Verdict,
)
from calx.smt import (
    materialize_model,
    run_solver,
    SolverConfig,
    to_smtlib,
    UnsupportedQuantifier,
)
from calx.wp import INVALID, OPEN, ProofObligation, UNKNOWN, VALID


def obligation_digest(hypotheses: tuple[Expr, ...], goal: Expr) -> str:
    key = (tuple(h.alpha_key() for h in hypotheses), goal.alpha_key())
    return hashlib.sha256(repr(key).encode()).hexdigest()[:16]


class Checker:
    """Discharges (hypotheses ⇒ goal) queries with caching.

    trust-replay mode is just a pre-seeded cache: recorded verdicts are
    injected before replay so no solver or oracle work reruns.
    """

    def __init__(
        self,
        solvers: tuple[SolverConfig, ...] = (),
        domain: FiniteDomain = FiniteDomain(lo=0, hi=5),
        dump_dir: Optional[str] = None,
    ):
        self.solvers = tuple(solvers)
        self.domain = domain
        self.dump_dir = dump_dir
        self.cache: dict[str, Verdict] = {}
        self._dump_count = 0
        self._journal: Optional[set[str]] = None

    # --- cache seeding (trust replay, persistence) ---------------------------

    def seed(self, digest: str, verdict: Verdict) -> None:
        self.cache.setdefault(digest, verdict)

    def recorded(self) -> dict[str, Verdict]:
        return dict(self.cache)

    def journal(self) -> "_Journal":
        """Track which obligation digests the enclosed work consults; the
        derivation tree persists exactly those verdicts per node."""
        return _Journal(self)

    # --- main entry ------------------------------------------------------------

    def check(self, hypotheses: tuple[Expr, ...], goal: Expr) -> Verdict:
        digest = obligation_digest(hypotheses, goal)
        if self._journal is not None:
            self._journal.add(digest)
        hit = self.cache.get(digest)
        if hit is not None:
            return hit
        verdict = self._compute(list(hypotheses), goal)
        self.cache[digest] = verdict
        return verdict

    def check_obligation(self, po: ProofObligation) -> ProofObligation:
        """Status-resolved copy.  Obligations from unknown fragments stay
        open, and so does anything still containing metavariables — those are
        solved by instantiation, not universally refuted."""
        if po.always_open or po.has_metavars:
            return po.with_status(OPEN)
        v = self.check(po.hypotheses, po.goal)
        if v.is_valid:
            return po.with_status(VALID)
        if v.is_invalid:
            return po.with_status(INVALID)
        return po.with_status(UNKNOWN)

    # --- computation ------------------------------------------------------------

    def _compute(self, hypotheses: list[Expr], goal: Expr) -> Verdict:
        metas = any(has_metavars(h) for h in hypotheses) or has_metavars(goal)
        if not metas and any(cfg.enabled for cfg in self.solvers):
            try:
                script = to_smtlib(hypotheses, goal)
            except UnsupportedQuantifier:
                script = None  # no solver can take it; fall through to the oracle
            if script is not None:
                self._dump(script)
                for cfg in self.solvers:
                    if not cfg.enabled:
                        continue
                    verdict = run_solver(cfg, script)
                    if verdict.is_valid:
                        return verdict
                    if verdict.is_invalid:
                        checked = self._cross_check(verdict, hypotheses, goal)
                        if checked.is_invalid:
                            return checked
                        # a model the evaluator rejects is no verdict; keep going
        try:
            return brute_force(hypotheses, goal, self.domain)
        except BudgetExceeded as exc:
            return Verdict("unknown", reason=f"incomplete: {exc}", source="oracle")

    def _cross_check(self, verdict: Verdict, hypotheses: list[Expr], goal: Expr) -> Verdict:
        state = None
        if verdict.model is not None:
            state = materialize_model(
                verdict.model, obligation_vars(hypotheses, goal), self.domain
            )
        if state is None:
            return replace(verdict, reason="model unverified")
        try:
            falsifies = not holds(hypotheses, goal, state, self.domain)
        except Exception:
            falsifies = False
        if falsifies:
            return replace(verdict, model=state, reason="model cross-checked")
        return Verdict(
            "unknown",
            reason="solver model did not falsify the obligation",
            source=verdict.source,
        )

    def _dump(self, script: str) -> None:
        if not self.dump_dir:
            return
        os.makedirs(self.dump_dir, exist_ok=True)
        path = FsPath(self.dump_dir) / f"obligation-{self._dump_count:04d}.smt2"
        path.write_text(script)
        self._dump_count += 1


class _Journal:
    def __init__(self, checker: Checker):
        self.checker = checker
        self.digests: set[str] = set()

    def __enter__(self) -> "_Journal":
        self._outer = self.checker._journal
        self.checker._journal = self.digests
        return self

    def __exit__(self, *exc):
        self.checker._journal = self._outer
        if self._outer is not None:
            self._outer |= self.digests
        return False


def load_solver_file(path: str) -> tuple[tuple[SolverConfig, ...], FiniteDomain]:
    """Solver configuration file: JSON with optional "solvers" and "domain"
    sections; the CALX_SOLVER_DIR environment variable prefixes relative
    executable paths."""
    raw = json.loads(FsPath(path).read_text())
    solver_dir = os.environ.get("CALX_SOLVER_DIR", "")
    solvers = []
    for entry in raw.get("solvers", []):
        exe = entry["path"]
        if solver_dir and not os.path.isabs(exe):
            exe = os.path.join(solver_dir, exe)
        solvers.append(
            SolverConfig(
                name=entry.get("name", os.path.basename(exe)),
                path=exe,
                args=tuple(entry.get("args", [])),
                timeout=float(entry.get("timeout", 5.0)),
                enabled=bool(entry.get("enabled", True)),
            )
        )
    d = raw.get("domain", {})
    domain = FiniteDomain(
        lo=int(d.get("lo", 0)),
        hi=int(d.get("hi", 5)),
        max_states=int(d.get("max_states", 2_000_000)),
        array_cells=d.get("array_cells"),
    )
    return tuple(solvers), domain
