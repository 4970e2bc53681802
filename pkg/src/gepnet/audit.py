"""Validation-quality audit toolkit.

Commands are classified in two phases. The static phase applies an
ordered rule pipeline (empty -> trivial pattern -> evasive flag or pure
maintenance -> test keyword on the quote-stripped command -> short
command with a trivial head) and is deliberately conservative: it only
labels a command TRIVIAL on patterns that essentially never appear in a
real test suite, so it is a lower bound. Genes left undetermined go to
the sandbox phase, which runs their command sequence in an environment
that does not contain the capsule under test: a sequence that passes
anyway tests nothing.

The module also houses the metadata-forgery harness: the reference
signal configurations, and a study runner that publishes forged capsules
against a hub instance.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Sequence

from .core import Gene, IntrinsicSignals
from .evolver import Executor, ExecutorFailure
from .hub import Hub

TRUST_WORDS = ("ok", "pass", "passed", "done", "success", "true",
               "reviewed", "approved", "0", "1")
_TRUST = "|".join(TRUST_WORDS)

_DEFAULT_TRIVIAL_ASSERTIONS: tuple[tuple[str, str], ...] = (
    ("constant-identity-assert-equal",
     r"assert\.(?:strict)?equal\(\s*([^,()]+?)\s*,\s*\1\s*\)"),
    ("tautological-assert",
     r"assert\.(?:ok|equal)\(\s*(?:true|!{2}true|1)\b"),
    ("constant-identity-expect",
     r"expect\(\s*([^()]+?)\s*\)\s*\.toBe\(\s*\1\s*\)"),
    ("inline-require-assert(true)",
     r"require\(\s*['\"]assert['\"]\s*\)\s*\.ok\(\s*true\s*\)"),
    ("tautological-console-assert",
     r"console\.assert\(\s*true\s*\)"),
)

_DEFAULT_GENERAL_PATTERNS: tuple[tuple[str, str], ...] = (
    ("console-trust-word",
     rf"console\.\w+\(.*\b(?:{_TRUST})\b.*\)"),
    ("node-eval-console",
     r"node\s+(?:-e|--eval)\s+.*console\."),
    ("unconditional-exit",
     r"\b(?:process|sys)\.exit\(\s*0?\s*\)"),
    ("version-help-print-flag",
     r"(?:^|\s)(?:--version|--help|--eval|--print|-v|-p)(?=\s|$)"),
    ("echo-trust-word",
     rf"\becho\b.*\b(?:{_TRUST})\b"),
    ("print-trust-word",
     rf"\bprint\s*\(.*\b(?:{_TRUST})\b.*\)"),
)

#: POSIX builtins invoke no external tool, so they never trip the whitelist.
_SHELL_BUILTINS = frozenset({"true", "false", "exit", ":", "echo", "set", "cd"})


@dataclass
class PatternCatalogue:
    """Static-phase rules. Patterns compile case-insensitively; matching
    enforces the word boundaries built into each expression."""

    trivial_assertion_patterns: tuple[tuple[str, re.Pattern], ...]
    general_patterns: tuple[tuple[str, re.Pattern], ...]
    trust_words: frozenset[str] = frozenset(TRUST_WORDS)
    trivial_heads: frozenset[str] = frozenset({"true", "exit", ":"})
    test_keywords: frozenset[str] = frozenset(
        {"test", "tests", "jest", "mocha", "vitest", "assert", "expect", "spec"})
    whitelist: frozenset[str] = frozenset({"node", "npm", "npx"})
    evasive_flags: frozenset[str] = frozenset({"--passWithNoTests"})
    maintenance_scripts: frozenset[str] = frozenset({"lint", "format", "prettier"})
    short_command_length: int = 10

    @property
    def patterns(self) -> tuple[tuple[str, re.Pattern], ...]:
        return self.trivial_assertion_patterns + self.general_patterns

    @classmethod
    def default(cls) -> "PatternCatalogue":
        compile_all = lambda rows: tuple(
            (name, re.compile(expr, re.IGNORECASE)) for name, expr in rows
        )
        return cls(
            trivial_assertion_patterns=compile_all(_DEFAULT_TRIVIAL_ASSERTIONS),
            general_patterns=compile_all(_DEFAULT_GENERAL_PATTERNS),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PatternCatalogue":
        """Default catalogue with JSON overrides for the word/flag sets."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        catalogue = cls.default()
        for key in ("trust_words", "trivial_heads", "test_keywords",
                    "whitelist", "evasive_flags", "maintenance_scripts"):
            if key in data:
                setattr(catalogue, key, frozenset(data[key]))
        if "short_command_length" in data:
            catalogue.short_command_length = int(data["short_command_length"])
        for key, attr in (("trivial_assertion_patterns", "trivial_assertion_patterns"),
                          ("general_patterns", "general_patterns")):
            if key in data:
                setattr(catalogue, attr, tuple(
                    (name, re.compile(expr, re.IGNORECASE))
                    for name, expr in data[key]
                ))
        return catalogue


def default_catalogue() -> PatternCatalogue:
    return PatternCatalogue.default()


class CommandLabel(str, Enum):
    TRIVIAL = "TRIVIAL"
    PASS = "PASS"


@dataclass(frozen=True)
class CommandVerdict:
    command: str
    label: CommandLabel
    rule: str
    unauthorized: bool


class GeneLabel(str, Enum):
    NO_VALIDATION = "NoValidation"
    TRIVIAL = "Trivial"
    UNDETERMINED = "Undetermined"
    LEGITIMATE = "Legitimate"


@dataclass(frozen=True)
class GeneVerdict:
    label: GeneLabel
    command_verdicts: tuple[CommandVerdict, ...] = ()
    phase: str = "static"  # static | sandbox


def strip_quoted(text: str) -> str:
    """Remove single- and double-quoted literals (non-nested, non-greedy).

    An unterminated quote strips everything to the end of the string.
    """
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in ("'", '"'):
            closing = text.find(ch, i + 1)
            if closing == -1:
                break
            i = closing + 1
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def split_commands(text: str) -> list[str]:
    """Split a validation field into individual commands.

    Splits on newlines and on the sequential connectors ``&&`` and ``;``
    outside quotes. An empty or whitespace-only field yields one empty
    command (which the classifier labels TRIVIAL at step 1).
    """
    if not text.strip():
        return [""]
    segments: list[str] = []
    current: list[str] = []
    quote: str | None = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quote is not None:
            current.append(ch)
            if ch == quote:
                quote = None
            i += 1
            continue
        if ch in ("'", '"'):
            quote = ch
            current.append(ch)
            i += 1
            continue
        if ch == "\n" or ch == ";":
            segments.append("".join(current))
            current = []
            i += 1
            continue
        if ch == "&" and text[i:i + 2] == "&&":
            segments.append("".join(current))
            current = []
            i += 2
            continue
        current.append(ch)
        i += 1
    segments.append("".join(current))
    return [s.strip() for s in segments if s.strip()]


def _head_token(command: str) -> str:
    tokens = command.split()
    if not tokens:
        return ""
    return tokens[0].rsplit("/", 1)[-1].lower()


def _is_maintenance(command: str, catalogue: PatternCatalogue) -> bool:
    tokens = command.lower().split()
    if not tokens:
        return False
    head = _head_token(command)
    if head in catalogue.maintenance_scripts:
        return True
    if head == "npm" and len(tokens) >= 3 and tokens[1] == "run":
        return tokens[2] in catalogue.maintenance_scripts
    if head == "npx" and len(tokens) >= 2:
        return tokens[1] in catalogue.maintenance_scripts
    return False


def classify_command(command: str, catalogue: PatternCatalogue | None = None) -> CommandVerdict:
    """Ordered triviality decision for one command.

    Pattern matching (step 2) deliberately runs before test-keyword
    detection: tautologies like ``assert.ok(true)`` contain legitimate
    keywords and must not pass on that account. Evasive flags and pure
    maintenance invocations are also rejected before the keyword step.
    The whitelist check is orthogonal to the label.
    """
    catalogue = catalogue or default_catalogue()
    stripped = command.strip()
    head = _head_token(stripped)
    unauthorized = bool(head) and head not in catalogue.whitelist \
        and head not in _SHELL_BUILTINS

    def verdict(label: CommandLabel, rule: str) -> CommandVerdict:
        return CommandVerdict(command, label, rule, unauthorized)

    # Step 1: empty.
    if not stripped:
        return verdict(CommandLabel.TRIVIAL, "empty")

    # Step 2: trivial pattern.
    for name, pattern in catalogue.patterns:
        if pattern.search(stripped):
            return verdict(CommandLabel.TRIVIAL, f"pattern:{name}")

    # Evasive testing flags and pure maintenance count as trivial and must
    # beat the keyword step ("npm test -- --passWithNoTests" tests nothing).
    lowered = stripped.lower()
    for flag in catalogue.evasive_flags:
        if flag.lower() in lowered:
            return verdict(CommandLabel.TRIVIAL, "evasive-flag")
    if _is_maintenance(stripped, catalogue):
        return verdict(CommandLabel.TRIVIAL, "maintenance")

    # Step 3: test keyword, with quoted literals stripped first so log
    # messages cannot smuggle keywords in.
    unquoted = strip_quoted(stripped).lower()
    for keyword in sorted(catalogue.test_keywords):
        if keyword in unquoted:
            return verdict(CommandLabel.PASS, "test-keyword")

    # Step 4: short command with a trivial head.
    if len(stripped) < catalogue.short_command_length and head in catalogue.trivial_heads:
        return verdict(CommandLabel.TRIVIAL, "short-trivial-head")

    return verdict(CommandLabel.PASS, "default")


def gene_commands(gene: Gene) -> list[str]:
    """Flattened individual commands of a gene's validation entries."""
    commands: list[str] = []
    for entry in gene.validations:
        commands.extend(split_commands(entry))
    return commands


def classify_gene_static(gene: Gene,
                         catalogue: PatternCatalogue | None = None) -> GeneVerdict:
    """Static phase: NoValidation for zero commands, Trivial when every
    command is trivial, Undetermined otherwise. A single non-trivial
    command is enough to defer the whole gene to the sandbox phase; the
    static phase never emits Legitimate."""
    catalogue = catalogue or default_catalogue()
    commands = gene_commands(gene)
    if not commands:
        return GeneVerdict(GeneLabel.NO_VALIDATION)
    verdicts = tuple(classify_command(c, catalogue) for c in commands)
    if all(v.label is CommandLabel.TRIVIAL for v in verdicts):
        return GeneVerdict(GeneLabel.TRIVIAL, verdicts)
    return GeneVerdict(GeneLabel.UNDETERMINED, verdicts)


class EmptyEnvExecutor:
    """Deterministic model of an empty sandbox.

    Only commands with no way to depend on project state exit zero:
    shell no-ops, pure node evaluations and version queries. Anything
    reaching for npm/npx or a project file fails, because nothing is
    installed. Useful wherever the real isolated runtime is unavailable
    or undesirable (tests, corpus audits on untrusted inputs).
    """

    PASSING_HEADS = frozenset({"echo", "true", ":"})

    def __call__(self, command: str, files) -> tuple[int, str, str]:
        stripped = command.strip()
        if not stripped:
            return (0, "", "")
        head = stripped.split()[0]
        if head in self.PASSING_HEADS or stripped == "exit 0":
            return (0, "", "")
        if head == "node" and (" -e" in stripped or " --eval" in stripped
                               or " -p" in stripped or "--version" in stripped):
            return (0, "", "")
        return (1, "", "empty sandbox: nothing installed")


def sandbox_phase(gene: Gene, executor: Executor) -> GeneVerdict:
    """Empty-sandbox phase for statically undetermined genes.

    The executor provides only the bare runtime, never the capsule under
    test. If the full sequence still exits zero it verifies nothing:
    Trivial. Any failure means the commands depend on the missing capsule:
    Legitimate.
    """
    runs = []
    for command in gene_commands(gene):
        exit_status, stdout, stderr = executor(command, {})
        runs.append((command, exit_status))
        if exit_status != 0:
            return GeneVerdict(GeneLabel.LEGITIMATE, phase="sandbox")
    return GeneVerdict(GeneLabel.TRIVIAL, phase="sandbox")


@dataclass
class CorpusReport:
    total: int
    no_validation: int
    trivial_static: int
    trivial_sandbox: int
    legitimate: int
    undetermined: int = 0  # only nonzero when the sandbox executor failed

    @property
    def trivial(self) -> int:
        return self.trivial_static + self.trivial_sandbox

    def percentages(self) -> dict[str, float]:
        def pct(count: int) -> float:
            return round(100.0 * count / self.total, 1) if self.total else 0.0
        return {
            "No Validation": pct(self.no_validation),
            "Trivial Validation": pct(self.trivial),
            "-- Identified by static patterns": pct(self.trivial_static),
            "-- Identified by sandbox testing": pct(self.trivial_sandbox),
            "Legitimate Validation": pct(self.legitimate),
        }

    def rows(self) -> list[tuple[str, float]]:
        return list(self.percentages().items())


def audit_corpus(genes: Sequence[Gene],
                 catalogue: PatternCatalogue | None = None,
                 executor: Executor | None = None) -> CorpusReport:
    """Full two-phase pipeline over a gene corpus.

    Without an executor the sandbox phase is skipped and undetermined
    genes stay undetermined (reported separately).
    """
    catalogue = catalogue or default_catalogue()
    counts = {label: 0 for label in GeneLabel}
    trivial_sandbox = 0
    for gene in genes:
        verdict = classify_gene_static(gene, catalogue)
        if verdict.label is GeneLabel.UNDETERMINED and executor is not None:
            try:
                verdict = sandbox_phase(gene, executor)
            except ExecutorFailure:
                pass  # stays undetermined
            else:
                if verdict.label is GeneLabel.TRIVIAL:
                    trivial_sandbox += 1
        counts[verdict.label] += 1
    return CorpusReport(
        total=len(genes),
        no_validation=counts[GeneLabel.NO_VALIDATION],
        trivial_static=counts[GeneLabel.TRIVIAL] - trivial_sandbox,
        trivial_sandbox=trivial_sandbox,
        legitimate=counts[GeneLabel.LEGITIMATE],
        undetermined=counts[GeneLabel.UNDETERMINED],
    )


# -- metadata forgery ------------------------------------------------------

#: Median observed signal profile (proxy for truthful behavior).
MEDIAN_SIGNALS = IntrinsicSignals(
    confidence=0.93, success_streak=323, files_modified=2, lines_modified=30,
    trigger_count=3, summary_length=139, reputation=50.0,
)
#: Every controllable signal at its score-minimizing value.
WORST_SIGNALS = IntrinsicSignals(
    confidence=0.10, success_streak=0, files_modified=8, lines_modified=300,
    trigger_count=1, summary_length=50, reputation=50.0,
)
#: Every controllable signal at its score-maximizing value.
OPTIMAL_SIGNALS = IntrinsicSignals(
    confidence=0.99, success_streak=10, files_modified=1, lines_modified=5,
    trigger_count=5, summary_length=200, reputation=50.0,
)

_SWEEP_GRIDS: tuple[tuple[str, str, tuple], ...] = (
    ("streak", "success_streak", (1, 4, 13)),
    ("trigger", "trigger_count", (2, 3, 5)),
    ("summary", "summary_length", (60, 108, 175)),
    ("confidence", "confidence", (0.89, 0.95, 0.97)),
)

_ABLATIONS: tuple[tuple[str, dict], ...] = (
    ("degraded-confidence", {"confidence": 0.10}),
    ("degraded-streak", {"success_streak": 0}),
    ("degraded-blast", {"files_modified": 8, "lines_modified": 300}),
    ("degraded-trigger", {"trigger_count": 1}),
    ("degraded-summary", {"summary_length": 50}),
)


@dataclass(frozen=True)
class ForgeryConfig:
    name: str
    group: str  # baseline | ablation | sweep
    signals: IntrinsicSignals


def forge_configurations() -> list[ForgeryConfig]:
    """The reference manipulation grid: three baselines, five leave-one-out
    ablations of the optimal profile, and four three-point sweeps off the
    median profile (20 configurations in all)."""
    configs = [
        ForgeryConfig("median", "baseline", MEDIAN_SIGNALS),
        ForgeryConfig("worst", "baseline", WORST_SIGNALS),
        ForgeryConfig("optimal", "baseline", OPTIMAL_SIGNALS),
    ]
    for name, overrides in _ABLATIONS:
        configs.append(ForgeryConfig(
            f"optimal-{name}", "ablation", replace(OPTIMAL_SIGNALS, **overrides)
        ))
    for label, field_name, values in _SWEEP_GRIDS:
        for value in values:
            configs.append(ForgeryConfig(
                f"sweep-{label}-{value}", "sweep",
                replace(MEDIAN_SIGNALS, **{field_name: value}),
            ))
    return configs


_WORDS = (
    "async retry queue cache schema index worker shard token parser stream "
    "buffer metric probe router batch merge filter socket branch commit "
    "vector handler adapter cursor packet prober triage lattice kernel "
    "monitor replica quorum ledger digest anchor beacon circuit"
).split()


def synthetic_text(seed: int | str, words: int = 24) -> str:
    """Deterministic word-salad payload text for a seed."""
    rng = random.Random(f"payload:{seed}")
    return " ".join(rng.choice(_WORDS) for _ in range(words))


@dataclass(frozen=True)
class ForgeryOutcome:
    name: str
    group: str
    agent: str
    asset_id: str
    intrinsic: float
    gdi: float
    promoted: bool


def run_forgery_study(hub: Hub,
                      configurations: Sequence[ForgeryConfig] | None = None,
                      now: datetime | None = None) -> list[ForgeryOutcome]:
    """Publish one distinct-content capsule per configuration, each from a
    freshly registered identity carrying the forged signals, then trigger a
    recompute and record score and promotion outcome."""
    from .core import Capsule

    configurations = configurations if configurations is not None else forge_configurations()
    now = now or datetime(2026, 1, 1, tzinfo=timezone.utc)
    outcomes: list[ForgeryOutcome] = []
    published = []
    for index, config in enumerate(configurations):
        agent = hub.register_agent(f"forgery-{config.name}", now)
        capsule = Capsule(
            content=synthetic_text(f"{index}:{config.name}", words=40),
            trigger_text=f"test forged-signals {config.name}",
            signals=config.signals,
            parent_genes=(),
            summary=synthetic_text(f"summary:{index}:{config.name}", words=12),
            author=agent,
        )
        record = hub.publish(agent, capsule, now)
        published.append((config, agent, record))
    hub.recompute_and_promote(now)
    for config, agent, record in published:
        outcomes.append(ForgeryOutcome(
            name=config.name, group=config.group, agent=agent,
            asset_id=str(record.id),
            intrinsic=record.components.intrinsic,
            gdi=record.gdi,
            promoted=record.status.value == "promoted",
        ))
    return outcomes
