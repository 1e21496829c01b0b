#!/usr/bin/env python3
"""
Run every check suite and write one bundled report.

Equivalent to ``python -m src.cli report-all``, with a per-suite summary
printed to stderr once the report is written.

Usage:
    python scripts/certify_all.py [--N 2.5] [--output report.json] [--config run.json]
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from src.cli import main  # noqa: E402


def summarize(path: str) -> None:
    """Print one line per suite from a report-all JSON file."""
    with open(path, encoding="utf-8") as handle:
        report = json.load(handle)

    for record in report["records"]:
        status = "PASS" if record["passed"] else "FAIL"
        print(f"{status}  {record['command']:<18} {record['total'] - record['failed']}/{record['total']}", file=sys.stderr)


def certify_all(argv):
    """Run report-all, writing to --output or to a temporary file that is echoed to stdout."""
    argv = list(argv)
    if "--format" in argv:
        print("certify_all writes JSON only", file=sys.stderr)
        return 1

    if "--output" in argv:
        position = argv.index("--output") + 1
        code = main(["report-all", *argv])
        if position >= len(argv):
            return code
        output = argv[position]
        if code != 1:
            summarize(output)
        return code

    with tempfile.TemporaryDirectory() as workdir:
        output = os.path.join(workdir, "report.json")
        code = main(["report-all", *argv, "--output", output])
        if code != 1:
            with open(output, encoding="utf-8") as handle:
                sys.stdout.write(handle.read())
            summarize(output)
    return code


if __name__ == "__main__":
    sys.exit(certify_all(sys.argv[1:]))
