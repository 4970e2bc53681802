"""Agent-side engine.

An evolver keeps a local asset store and an in-memory working state (a
path -> bytes file map). Retrieval cascades local store -> hub -> local
generation. Changes are applied under validation: the guiding Genes'
commands run through an injected executor, and any failure reverts the
working state byte-exact and resets the success streak.
"""

from __future__ import annotations

import difflib
import os
import subprocess
import tempfile
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Callable, Mapping, Sequence

from .core import (
    AgentId,
    AssetId,
    Capsule,
    EventKind,
    EvolutionEvent,
    Gene,
    IntrinsicSignals,
    link_event,
)
from .hub import Hub, HubUnavailable


class ExecutorFailure(Exception):
    """Infrastructure failure, distinct from a command exiting nonzero."""


@dataclass(frozen=True)
class CommandRun:
    command: str
    exit_status: int
    stdout: str = ""
    stderr: str = ""


@dataclass(frozen=True)
class ValidationOutcome:
    """Results of one validation pass. An empty command list passes
    vacuously and is flagged as such."""

    results: tuple[CommandRun, ...]
    passed: bool
    vacuous: bool

    @classmethod
    def from_results(cls, results: Sequence[CommandRun]) -> "ValidationOutcome":
        results = tuple(results)
        return cls(results=results,
                   passed=all(r.exit_status == 0 for r in results),
                   vacuous=not results)


# An executor runs one command against a file map and reports
# (exit_status, stdout, stderr).
Executor = Callable[[str, Mapping[str, bytes]], tuple[int, str, str]]


class ScriptedExecutor:
    """Deterministic mock executor.

    Exit codes come from an explicit script when one matches; otherwise a
    command that references a path absent from the file map fails, and
    everything else exits with ``default_exit``.
    """

    def __init__(self, script: Mapping[str, tuple[int, str, str] | int] | None = None,
                 default_exit: int = 0) -> None:
        self.script: dict[str, tuple[int, str, str]] = {}
        for command, result in (script or {}).items():
            if isinstance(result, int):
                result = (result, "", "")
            self.script[command] = result
        self.default_exit = default_exit
        self.calls: list[str] = []

    def __call__(self, command: str, files: Mapping[str, bytes]) -> tuple[int, str, str]:
        self.calls.append(command)
        if command in self.script:
            return self.script[command]
        for token in command.split():
            looks_like_path = "/" in token or token.endswith((".js", ".py", ".json", ".txt"))
            if looks_like_path and not token.startswith("-") and token not in files:
                return (1, "", f"{token}: not found")
        return (self.default_exit, "", "")


class SubprocessExecutor:
    """Shells out inside an isolated scratch directory.

    The file map is materialized into a fresh temp dir, the command runs
    under ``/bin/sh`` with a minimal environment, and a timeout counts as
    failure. Spawn problems surface as ExecutorFailure.
    """

    def __init__(self, timeout: float = 10.0, path: str = "/usr/bin:/bin") -> None:
        self.timeout = timeout
        self.path = path

    def __call__(self, command: str, files: Mapping[str, bytes]) -> tuple[int, str, str]:
        with tempfile.TemporaryDirectory(prefix="gepnet-sandbox-") as scratch:
            for rel, data in files.items():
                target = os.path.normpath(os.path.join(scratch, rel))
                if not target.startswith(scratch + os.sep):
                    raise ExecutorFailure(f"path escapes the sandbox: {rel!r}")
                os.makedirs(os.path.dirname(target) or scratch, exist_ok=True)
                with open(target, "wb") as fh:
                    fh.write(data)
            env = {"PATH": self.path, "HOME": scratch, "LC_ALL": "C"}
            try:
                proc = subprocess.run(
                    ["/bin/sh", "-c", command], cwd=scratch, env=env,
                    capture_output=True, text=True, timeout=self.timeout,
                )
            except subprocess.TimeoutExpired:
                return (124, "", f"timed out after {self.timeout}s")
            except OSError as exc:
                raise ExecutorFailure(str(exc)) from exc
            return (proc.returncode, proc.stdout, proc.stderr)


class Workspace:
    """In-memory keyed file map with snapshot/restore."""

    def __init__(self, files: Mapping[str, bytes] | None = None) -> None:
        self.files: dict[str, bytes] = dict(files or {})

    def snapshot(self) -> dict[str, bytes]:
        return dict(self.files)

    def restore(self, snapshot: Mapping[str, bytes]) -> None:
        self.files = dict(snapshot)

    def apply_edits(self, edits: Mapping[str, bytes | None]) -> None:
        for path, data in edits.items():
            if data is None:
                self.files.pop(path, None)
            else:
                self.files[path] = data


def diff_stats(before: Mapping[str, bytes], after: Mapping[str, bytes]) -> tuple[int, int]:
    """(files touched, lines changed) between two file maps."""
    files = 0
    lines = 0
    for path in sorted(set(before) | set(after)):
        old = before.get(path)
        new = after.get(path)
        if old == new:
            continue
        files += 1
        old_lines = old.decode("utf-8", "replace").splitlines() if old is not None else []
        new_lines = new.decode("utf-8", "replace").splitlines() if new is not None else []
        matcher = difflib.SequenceMatcher(a=old_lines, b=new_lines, autojunk=False)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag == "equal":
                continue
            lines += max(i2 - i1, j2 - j1)
    return files, lines


class LocalStore:
    """Agent-local asset store with an exact-match trigger index."""

    def __init__(self) -> None:
        self.assets: dict[AssetId, Gene | Capsule] = {}
        self.trigger_index: dict[str, AssetId] = {}

    def add(self, asset: Gene | Capsule) -> AssetId:
        asset_id = asset.asset_id
        self.assets[asset_id] = asset
        if isinstance(asset, Capsule) and asset.trigger_text:
            self.trigger_index[asset.trigger_text] = asset_id
        return asset_id

    def get(self, asset_id: AssetId) -> Gene | Capsule | None:
        return self.assets.get(asset_id)

    def by_trigger(self, trigger: str) -> Capsule | None:
        asset_id = self.trigger_index.get(trigger)
        if asset_id is None:
            return None
        asset = self.assets[asset_id]
        assert isinstance(asset, Capsule)
        return asset


@dataclass(frozen=True)
class CapsuleDraft:
    """What the agent proposes before measurement fills in the signals."""

    content: str
    trigger_text: str
    summary: str
    parent_genes: tuple[AssetId, ...] = ()
    trigger_count: int | None = None


@dataclass(frozen=True)
class RetrievedAsset:
    asset: Gene | Capsule
    source: str  # local | hub | generated
    similarity: float = 1.0


@dataclass(frozen=True)
class ApplyResult:
    committed: bool
    outcome: ValidationOutcome
    capsule: Capsule | None = None
    event: EvolutionEvent | None = None


@dataclass
class EvolverConfig:
    sharing_enabled: bool = True
    signal_policy: str = "measured"  # measured | forged_optimal
    confidence: float = 0.9
    reputation: float = 50.0
    revalidate_fetched: bool = True
    generated_signals: IntrinsicSignals | None = None


#: Self-reported signal vector that maximizes every controllable term.
FORGED_OPTIMAL = IntrinsicSignals(
    confidence=0.99, success_streak=10, files_modified=1, lines_modified=5,
    trigger_count=5, summary_length=200, reputation=50.0,
)


class Evolver:
    """One agent's engine. Single-threaded; talks to the hub only through
    hub operations."""

    def __init__(self, agent_id: AgentId, hub: Hub | None = None,
                 executor: Executor | None = None,
                 config: EvolverConfig | None = None,
                 workspace: Workspace | None = None) -> None:
        self.agent_id = agent_id
        self.hub = hub
        self.executor = executor or ScriptedExecutor()
        self.config = config or EvolverConfig()
        self.workspace = workspace or Workspace()
        self.store = LocalStore()
        self.events: list[EvolutionEvent] = []
        self.streaks: dict[str, int] = {}

    # -- retrieval cascade ------------------------------------------------

    def retrieve(self, task_signature: str, now: datetime) -> RetrievedAsset:
        """Local exact trigger match wins; otherwise query the hub (which
        bills the fetch); otherwise generate a placeholder capsule."""
        local = self.store.by_trigger(task_signature)
        if local is not None:
            return RetrievedAsset(local, "local")
        if self.hub is not None:
            hits = self.hub.fetch(self.agent_id, task_signature, now)
            if hits:
                top = hits[0]
                body = top.record.body
                if isinstance(body, Capsule):
                    # a fetched capsule that fails its own genes' checks
                    # locally is not adopted
                    if (not self.config.revalidate_fetched
                            or self._revalidate(body).passed):
                        self.store.add(body)
                        return RetrievedAsset(body, "hub", top.similarity)
        return RetrievedAsset(self._generate(task_signature), "generated")

    def _revalidate(self, capsule: Capsule) -> ValidationOutcome:
        commands: list[str] = []
        for gene_id in capsule.parent_genes:
            gene = self.store.get(gene_id)
            if isinstance(gene, Gene):
                commands.extend(gene.validations)
        results = [CommandRun(c, *self.executor(c, self.workspace.files))
                   for c in commands]
        return ValidationOutcome.from_results(results)

    def _generate(self, task_signature: str) -> Capsule:
        signals = self.config.generated_signals or IntrinsicSignals(
            confidence=self.config.confidence, success_streak=0,
            files_modified=1, lines_modified=10,
            trigger_count=max(1, len(task_signature.split())),
            summary_length=len(f"generated solution for {task_signature}"),
            reputation=self.config.reputation,
        )
        return Capsule(
            content=f"locally generated solution for {task_signature}",
            trigger_text=task_signature,
            signals=signals,
            parent_genes=(),
            summary=f"generated solution for {task_signature}",
            author=self.agent_id,
        )

    # -- validation-gated application --------------------------------------

    def apply_with_validation(
        self,
        draft: CapsuleDraft,
        genes: Sequence[Gene],
        edits: Mapping[str, bytes | None],
        now: datetime,
        kind: EventKind | str | None = None,
    ) -> ApplyResult:
        """Apply edits, run the genes' validation commands, and either
        commit (streak up, event emitted) or revert byte-exact (streak
        reset)."""
        snapshot = self.workspace.snapshot()
        self.workspace.apply_edits(edits)

        commands = [c for gene in genes for c in gene.validations]
        results = [CommandRun(command, *self.executor(command, self.workspace.files))
                   for command in commands]
        outcome = ValidationOutcome.from_results(results)

        if not outcome.passed:
            self.workspace.restore(snapshot)
            self.streaks[draft.trigger_text] = 0
            return ApplyResult(committed=False, outcome=outcome)

        streak = self.streaks.get(draft.trigger_text, 0) + 1
        self.streaks[draft.trigger_text] = streak
        capsule = self._finalize(draft, snapshot, streak)
        self.store.add(capsule)

        if kind is None:
            seen = {event.capsule for event in self.events}
            kind = EventKind.REPAIR if capsule.asset_id in seen else EventKind.INNOVATION
        event = link_event(capsule, genes, kind, now, history=self.events)
        self.events.append(event)
        return ApplyResult(committed=True, outcome=outcome,
                           capsule=capsule, event=event)

    def _finalize(self, draft: CapsuleDraft, snapshot: Mapping[str, bytes],
                  streak: int) -> Capsule:
        if self.config.signal_policy == "forged_optimal":
            signals = replace(FORGED_OPTIMAL, reputation=self.config.reputation)
        else:
            # Honest mode measures the blast radius from the actual diff.
            files, lines = diff_stats(snapshot, self.workspace.files)
            trigger_count = (draft.trigger_count if draft.trigger_count is not None
                             else max(1, len(draft.trigger_text.split())))
            signals = IntrinsicSignals(
                confidence=self.config.confidence,
                success_streak=streak,
                files_modified=files,
                lines_modified=lines,
                trigger_count=trigger_count,
                summary_length=len(draft.summary),
                reputation=self.config.reputation,
            )
        return Capsule(
            content=draft.content, trigger_text=draft.trigger_text,
            signals=signals, parent_genes=draft.parent_genes,
            summary=draft.summary, author=self.agent_id,
        )

    # -- sharing ------------------------------------------------------------

    def publish_if_sharing(self, asset: Gene | Capsule, now: datetime):
        """Forward to the hub iff sharing is enabled; hub errors surface
        and the local copy is always retained."""
        if not self.config.sharing_enabled:
            return None
        if self.hub is None:
            raise HubUnavailable("sharing is enabled but no hub is configured")
        return self.hub.publish(self.agent_id, asset, now)
