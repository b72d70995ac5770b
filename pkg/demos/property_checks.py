"""Run the seeded property-check suite (same as ``hdivflow check``)."""

from hdivflow.checks import run_checks

for result in run_checks(seed=42):
    print(result.line())
