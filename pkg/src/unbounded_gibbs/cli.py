"""Batch runner: ``validate``, ``run`` and ``report`` subcommands.

Exit codes: 0 all checks passed, 1 invalid configuration or task error,
2 a deterministic check failed, 3 only statistical checks were flagged.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, validate_file
from .tasks import RUNNERS, TaskContext, TaskOutcome

OUTPUT_ENV = "UNBOUNDED_GIBBS_OUTPUT"
MANIFEST = "manifest.json"
EXIT_OK, EXIT_INVALID, EXIT_DETERMINISTIC, EXIT_STATISTICAL = 0, 1, 2, 3

log = logging.getLogger("unbounded_gibbs")


@dataclass
class TaskRecord:
    name: str
    kind: str
    files: list[str]
    status: str                  # passed | deterministic_failure | statistical_flag | error
    checks: list[dict] = field(default_factory=list)
    error: str = ""


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    created: float
    tasks: list[TaskRecord]
    exit_code: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        raw = json.loads(text)
        raw["tasks"] = [TaskRecord(**t) for t in raw["tasks"]]
        return cls(**raw)

    @property
    def summary(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for t in self.tasks:
            out[t.status] = out.get(t.status, 0) + 1
        return out


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _write_table(path: Path, rows: list[dict]) -> None:
    columns: list[str] = []
    for r in rows:
        columns += [k for k in r if k not in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _status(outcome: TaskOutcome) -> str:
    if any(not c.passed and c.deterministic for c in outcome.checks):
        return "deterministic_failure"
    if any(not c.passed for c in outcome.checks):
        return "statistical_flag"
    return "passed"


def _execute(config: RunConfig, index: int, task: dict) -> TaskOutcome | Exception:
    params = {k: v for k, v in task.items() if k not in ("kind", "name")}
    try:
        return RUNNERS[task["kind"]](TaskContext(config, index, params))
    except Exception as exc:  # recorded in the manifest, turns into a nonzero exit
        return exc


def run(config: RunConfig, output_dir: str | Path | None = None, threads: int = 1) -> RunManifest:
    """Execute every task, write one CSV per result table and the manifest."""
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = config.tasks
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(lambda it: _execute(config, *it), enumerate(tasks)))
    records = []
    for i, (task, outcome) in enumerate(zip(tasks, outcomes)):
        name = task.get("name", f"{i:02d}_{task['kind']}")
        if isinstance(outcome, Exception):
            log.error("task %s failed: %s", name, outcome)
            records.append(TaskRecord(name, task["kind"], [], "error", error=repr(outcome)))
            continue
        files = []
        for table, rows in outcome.tables.items():
            path = out / f"{name}__{table}.csv"
            _write_table(path, rows)
            files.append(path.name)
        status = _status(outcome)
        log.info("task %s: %s", name, status)
        records.append(TaskRecord(name, task["kind"], files, status,
                                  [asdict(c) for c in outcome.checks]))
    statuses = {r.status for r in records}
    if "error" in statuses:
        code = EXIT_INVALID
    elif "deterministic_failure" in statuses:
        code = EXIT_DETERMINISTIC
    elif "statistical_flag" in statuses:
        code = EXIT_STATISTICAL
    else:
        code = EXIT_OK
    manifest = RunManifest(config.digest(), code_version(), time.time(), records, code)
    (out / MANIFEST).write_text(manifest.to_json())
    return manifest


def report(output_dir: str | Path) -> RunManifest:
    manifest = RunManifest.from_json((Path(output_dir) / MANIFEST).read_text())
    for t in manifest.tasks:
        for f in t.files:
            with open(Path(output_dir) / f, newline="") as fh:
                list(csv.reader(fh))
    return manifest


def _resolve_output(args, config: RunConfig) -> str:
    return args.output or os.environ.get(OUTPUT_ENV) or config.output_dir


def _cmd_validate(args) -> int:
    try:
        diags = validate_file(args.config)
    except (OSError, ValueError) as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for d in diags:
        print(d)
    if not diags:
        print("ok")
    return EXIT_INVALID if diags else EXIT_OK


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        config.disorder.master_seed = args.seed
    out = _resolve_output(args, config)
    manifest = run(config, out, args.threads)
    _print_manifest(manifest, out)
    return manifest.exit_code


def _print_manifest(manifest: RunManifest, out) -> None:
    for t in manifest.tasks:
        print(f"{t.status:22s} {t.name}")
        for c in t.checks:
            mark = "ok" if c["passed"] else "FAIL"
            kind = "det" if c["deterministic"] else "stat"
            print(f"    {mark:4s} [{kind}] {c['name']} {c['detail']}".rstrip())
        if t.error:
            print(f"    error: {t.error}")
    print(f"exit {manifest.exit_code}; results in {out}")


def _cmd_report(args) -> int:
    out = args.output or os.environ.get(OUTPUT_ENV) or "results"
    try:
        manifest = report(out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot read results in {out}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _print_manifest(manifest, out)
    return manifest.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unbounded-gibbs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="check a config file and list every violation")
    p.add_argument("--config", required=True)
    p = sub.add_parser("run", help="execute the tasks of a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help=f"output directory (overrides ${OUTPUT_ENV} and the config)")
    p.add_argument("--seed", type=int, help="override disorder.master_seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    p = sub.add_parser("report", help="summarise a finished run")
    p.add_argument("--output", help=f"results directory (default ${OUTPUT_ENV} or ./results)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"validate": _cmd_validate, "run": _cmd_run, "report": _cmd_report}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
