"""Auditing validation quality.

The static phase catches commands that always succeed (tautological
asserts, trust-word prints, version queries, evasive flags, pure
maintenance). Whatever it can't decide goes to the empty-sandbox phase:
a command sequence that passes with no capsule present verifies nothing.
"""

from gepnet import Gene, audit_corpus, classify_command, classify_gene_static
from gepnet.audit import EmptyEnvExecutor, GeneLabel, sandbox_phase


def gene(*validations):
    return Gene(preconditions=(), constraints=(), validations=validations,
                summary="s", tags=(), author="agent-000001")


# -- single commands through the ordered pipeline ------------------------------

COMMANDS = [
    "assert.ok(true)",
    "expect(1).toBe(1)",
    "console.log('pytest ok')",
    "node --version",
    "exit 0",
    "npm test -- --passWithNoTests",
    "npm run lint",
    "npm test",
    "python run_tests.py",
]
for command in COMMANDS:
    verdict = classify_command(command)
    flag = "  [unauthorized tool]" if verdict.unauthorized else ""
    print(f"{command:<32} -> {verdict.label.value:<7} ({verdict.rule}){flag}")

# -- gene-level verdicts: one legitimate command saves the gene -----------------

print()
for g in (gene(), gene("console.log('ok')", "exit 0"),
          gene("console.log('ok')", "npm test")):
    verdict = classify_gene_static(g)
    print(f"validations={list(g.validations)!r:<42} -> {verdict.label.value}")

# -- the empty sandbox separates the undetermined -------------------------------

sandbox = EmptyEnvExecutor()
real = gene("npm test")
sneaky = gene('node -e "globalThis.marker = 1"')
print()
print("npm test in an empty sandbox:      ",
      sandbox_phase(real, sandbox).label.value)
print("pure node eval in an empty sandbox:",
      sandbox_phase(sneaky, sandbox).label.value)

# -- corpus-level report ---------------------------------------------------------

corpus = (
    [gene() for _ in range(66)]
    + [gene("console.log('done')") for _ in range(16)]
    + [gene(f'node -e "globalThis.s{i} = {i}"') for i in range(2)]
    + [gene("npm test && npm run lint") for _ in range(16)]
)
report = audit_corpus(corpus, executor=sandbox)
print(f"\ncorpus of {report.total} genes:")
for label, percent in report.rows():
    print(f"  {label:<36} {percent:5.1f}%")
