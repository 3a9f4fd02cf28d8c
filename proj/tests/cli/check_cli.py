#!/usr/bin/env python3
"""Contract checks for the bqp executable: schema, exit codes, config files, output formats.

usage: check_cli.py <bqp> <schema.json>
"""
import csv
import io
import json
import math
import os
import subprocess
import sys
import tempfile

import jsonschema

BQP, SCHEMA_PATH = sys.argv[1], sys.argv[2]
DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

with open(SCHEMA_PATH) as fh:
    SCHEMA = json.load(fh)
VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)

failures = []


def check(cond, what):
    print(("ok    " if cond else "FAIL  ") + what)
    if not cond:
        failures.append(what)


def run(*args, env=None):
    e = dict(os.environ)
    e.pop("BQP_THREADS", None)
    if env:
        e.update(env)
    return subprocess.run([BQP, *args], capture_output=True, text=True, env=e, timeout=300)


def doc_of(*args, env=None):
    p = run(*args, env=env)
    if p.returncode != 0:
        check(False, f"{' '.join(args)} exits 0 (got {p.returncode}: {p.stderr.strip()})")
        return None
    d = json.loads(p.stdout)
    errs = sorted(VALIDATOR.iter_errors(d), key=lambda e: list(e.path))
    check(not errs, f"{args[0]} document matches the schema" + (f" ({errs[0].message} at {list(errs[0].path)})" if errs else ""))
    return d


SMALL = {
    "kappa": ["--n", "4", "--method", "direct", "--prime-limit", "10000"],
    "count": ["--n", "4", "--X", "10000", "--no-main-term"],
    "mainterm": ["--n", "6", "--X", "10000", "--no-main-term"],
    "gowers": ["--k", "2", "--N", "64", "--function", "interval"],
    "gpnorm": ["--N", "32", "--function", "random_signs", "--measures", "pm1", "uniform:2"],
    "buchstab": ["--n", "4", "--X", "5000", "--u", "5", "--z", "30"],
    "typesum": ["--n", "4", "--X", "5000", "--L", "20", "--type", "I"],
    "sigma": ["--n", "6", "--s1", "5"],
    "largesieve": ["--N", "100", "--W", "7"],
    "idealstats": ["--n", "5", "--X", "10000"],
    "cramer": ["--X", "1e6"],
}
for name, args in SMALL.items():
    d = doc_of(name, *args)
    if d:
        check(d["command"] == name, f"{name} names itself in the document")

# Worked values.
d = doc_of("count", "--n", "4", "--X", "50", "--ell", "0")
if d:
    want = 4 * math.log(5) * math.log(2)
    check(abs(d["result"]["value_re"] - want) < 1e-12, "count n=4 X=50 equals 4 log5 log2")

d = doc_of("sigma", "--n", "4")
if d:
    r = d["result"]
    check(r["sigma"] == 2.0 and r["brute_count"] == 16 and r["agree"], "sigma n=4 with empty S1, S2 is 2 by both routes")

d = doc_of("kappa", "--n", "4", "--method", "regularized")
if d:
    check(d["result"]["route"] == "regularized" and d["result"]["value"] > 0, "kappa n=4 regularized is positive")

# Exit codes.
check(run("count", "--bogus").returncode == 2, "unknown flag exits 2")
check(run("kappa", "--n", "5").returncode == 2, "kappa with n = 5 exits 2")
check(run("count", "--n", "4", "--X", "abc").returncode == 2, "non-numeric X exits 2")
check(run("gowers", "--k", "2", "--input", os.path.join(DATA, "missing.csv")).returncode == 2, "missing input file exits 2")
check(run("count", "--n", "4", "--X", "1e11").returncode == 3, "X above the capacity guard exits 3")
check(run().returncode != 0, "no subcommand is an error")

# Thread count from flag and environment; results do not depend on it.
a = doc_of("count", "--n", "4", "--X", "20000", "--threads", "1", "--no-main-term")
b = doc_of("count", "--n", "4", "--X", "20000", "--no-main-term", env={"BQP_THREADS": "3"})
if a and b:
    check(a["provenance"]["threads"] == 1 and b["provenance"]["threads"] == 3, "threads follow --threads and BQP_THREADS")
    check(a["result"] == b["result"], "count result independent of thread count")
    check(a["provenance"]["config_hash"] == b["provenance"]["config_hash"], "config hash independent of thread count")

with tempfile.TemporaryDirectory() as tmp:
    # Config file: global keys up top, subcommand keys in a section, comments allowed.
    cfg = os.path.join(tmp, "run.ini")
    with open(cfg, "w") as fh:
        fh.write("# count at a small bound\nthreads = 2\n\n[count]\nn = 4   # Gaussian-type field\nX = 50\nell = 0\n")
    d = doc_of("count", "--config", cfg)
    if d:
        check(d["config"]["X"] == 50 and d["provenance"]["threads"] == 2, "config file sets subcommand and global keys")
        check(abs(d["result"]["value_re"] - 4 * math.log(5) * math.log(2)) < 1e-12, "config-file run matches the flag run")
    d = doc_of("count", "--config", cfg, "--X", "100")
    if d:
        check(d["config"]["X"] == 100, "flags override the config file")
    bad = os.path.join(tmp, "bad.ini")
    with open(bad, "w") as fh:
        fh.write("[count]\nn = 4\nX = 50\ncolour = blue\n")
    check(run("count", "--config", bad).returncode == 2, "unknown config key exits 2")

    # --out and --format csv.
    out = os.path.join(tmp, "sigma.json")
    p = run("sigma", "--n", "4", "--out", out)
    check(p.returncode == 0 and p.stdout == "", "--out leaves stdout empty")
    with open(out) as fh:
        check(json.load(fh)["result"]["sigma"] == 2.0, "--out writes the document")
    p = run("sigma", "--n", "4", "--format", "csv")
    rows = list(csv.reader(io.StringIO(p.stdout)))
    check(p.returncode == 0 and rows[0] == ["key", "value"], "csv output has a key,value header")
    flat = dict(r for r in rows[1:] if len(r) == 2)
    check(flat.get("command") == "sigma" and float(flat.get("result.sigma", "nan")) == 2.0, "csv output flattens the document")
    check(run("sigma", "--n", "4", "--format", "xml").returncode == 2, "unknown format exits 2")

    # File inputs.
    d = doc_of("gowers", "--k", "2", "--N", "8", "--input", os.path.join(DATA, "interval8.csv"))
    if d:
        check(d["result"]["function"] == "csv", "gowers reads a function CSV")
    d = doc_of("largesieve", "--system", os.path.join(DATA, "sieve_small.json"))

# The report path: one cheap criterion, schema and exit code consistent with all_pass.
p = run("report", "--criteria", "10")
try:
    d = json.loads(p.stdout)
    errs = list(VALIDATOR.iter_errors(d))
    check(not errs, "report document matches the schema")
    check(p.returncode == (0 if d["result"]["all_pass"] else 4), "report exit code follows all_pass")
    check([c["id"] for c in d["result"]["criteria"]] == [10], "report runs only the selected criterion")
    lines = [l for l in p.stderr.splitlines() if l.startswith(("PASS ", "FAIL "))]
    check(len(lines) == 1 and "criterion 10:" in lines[0], "report prints one PASS/FAIL line on stderr")
except json.JSONDecodeError:
    check(False, f"report prints JSON (exit {p.returncode}: {p.stderr.strip()})")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
