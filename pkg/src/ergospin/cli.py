"""Command line runner: ``ergospin run`` and ``ergospin validate``.

Exit codes: 0 all certificates pass, 1 a certificate failed, 2 usage or
config error, 3 a resource cap was exceeded.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .config import TOL, ErgospinError, InputError, ResourceError, with_overrides
from .studies import SCHEMA, STUDY_NAMES, estimated_sites, run_job, seeds_of, summarize

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
JOBS_ENV = "ERGOSPIN_JOBS"


class UsageError(InputError):
    pass


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def apply_overrides(cfg: dict, overrides) -> dict:
    """KEY=VALUE with dotted keys; VALUE is parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = val
    return cfg


def schema_errors(cfg) -> list:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(cfg), key=lambda e: (list(e.absolute_path), e.message))
    return [(_pointer(e.absolute_path), e.message) for e in errs]


def diagnostics(cfg: dict) -> list:
    """Schema errors first; if none, semantic checks and cap warnings."""
    out = [f"error {p}: {m}" for p, m in schema_errors(cfg)]
    if out:
        return out
    try:
        with_overrides(**cfg.get("tolerances", {}))
    except InputError as exc:
        out.append(f"error /tolerances: {exc}")
    n = estimated_sites(cfg)
    cap = cfg.get("tolerances", {}).get("max_dense_dim", TOL.max_dense_dim)
    dim = cfg.get("k", 2) ** n
    if dim > cap:
        out.append(f"warning /params: largest volume has {n} sites, dense dimension {dim} exceeds max_dense_dim = {cap}")
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, sort_keys=True)
    return v


def _csv_bytes(rows: list) -> bytes:
    cols: list = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue().encode()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _jobs(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"{JOBS_ENV}={env!r} is not an integer") from exc
    return 1


def run(cfg: dict, out_dir: str | None = None, jobs: int = 1) -> tuple:
    """Execute the configured study; returns (manifest, all_passed)."""
    diags = [d for d in diagnostics(cfg) if d.startswith("error")]
    if diags:
        raise UsageError("; ".join(diags))
    name = cfg["study"]
    out = Path(out_dir or cfg.get("output", f"ergospin-{name}"))
    seeds = seeds_of(cfg)
    tasks = [(name, cfg, s) for s in seeds]
    start = time.perf_counter()
    with_overrides(**cfg.get("tolerances", {}))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_job, tasks))
    else:
        results = [run_job(t) for t in tasks]
    rows = [row for r in results for row in r["rows"]]
    report = {"study": name, "per_seed": [r["report"] for r in results], "summary": summarize(name, results)}
    files = {f"{name}.csv": _csv_bytes(rows), f"{name}.json": _json_bytes(report)}
    out.mkdir(parents=True, exist_ok=True)
    for fname, data in files.items():
        (out / fname).write_bytes(data)
    passed = all(r["passed"] for r in results)
    manifest = {
        "config": cfg,
        "checksums": {f: hashlib.sha256(d).hexdigest() for f, d in sorted(files.items())},
        "versions": {"ergospin": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "wall_clock_seconds": round(time.perf_counter() - start, 3),
        "seeds": seeds,
        "passed": passed,
    }
    (out / "manifest.json").write_bytes(_json_bytes(manifest))
    return manifest, passed


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ergospin", description="Disordered quantum spin lattice experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a study from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--jobs", type=int, default=None, help=f"worker processes (default ${JOBS_ENV} or 1)")
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)
    v.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    sub.add_parser("studies", help="list study names")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "studies":
            print("\n".join(STUDY_NAMES))
            return EXIT_OK
        cfg = apply_overrides(load_config(args.config), args.override)
        if args.command == "validate":
            diags = diagnostics(cfg)
            for d in diags:
                print(d)
            return EXIT_USAGE if any(d.startswith("error") for d in diags) else EXIT_OK
        manifest, passed = run(cfg, args.out, _jobs(args.jobs))
        for f, h in manifest["checksums"].items():
            print(f"{h}  {f}")
        print("all certificates passed" if passed else "certificate failure", file=sys.stderr)
        return EXIT_OK if passed else EXIT_FAIL
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InputError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ErgospinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
