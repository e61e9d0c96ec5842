"""End-to-end checks of the levy_escape binary."""

import json
import os
import subprocess
import sys
import tempfile

EXE = sys.argv[1]
PRESETS = sys.argv[2]
failures = []


def run(*args, env=None):
    return subprocess.run([EXE, *args], capture_output=True, text=True, env=env)


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def envelope(proc):
    doc = json.loads(proc.stdout)
    for key in ("tool_version", "config_echo", "seed", "wall_time"):
        check(key in doc, f"{doc.get('command')}: JSON has {key}")
    return doc


with tempfile.TemporaryDirectory() as tmp:
    a, b = os.path.join(tmp, "a.txt"), os.path.join(tmp, "b.txt")
    for path in (a, b):
        p = run("sample", "--alpha", "1.5", "--n", "20000", "--seed", "7", "--output", path)
        check(p.returncode == 0, "sample exits 0")
    with open(a, "rb") as fa, open(b, "rb") as fb:
        check(fa.read() == fb.read(), "same seed gives byte-identical samples")

    p = run("estimate", "--input", a)
    check(p.returncode == 0, "estimate exits 0")
    alpha = envelope(p)["result"]["alpha_hat"]
    check(abs(alpha - 1.5) < 0.15, f"estimate recovers alpha ({alpha:.3f})")

    empty = os.path.join(tmp, "empty.txt")
    open(empty, "w").close()
    check(run("estimate", "--input", empty).returncode == 2, "empty input exits 2")

    check(run("sample", "--alpha", "2.5").returncode == 2, "alpha out of range exits 2")
    check(run("escape", "--optimizer", "rmsprop").returncode == 2, "unknown optimizer exits 2")
    check(run("sample", "--no-such-flag").returncode == 2, "unknown flag exits 2")
    check(run().returncode == 2, "missing subcommand exits 2")

    p = run("flow", "--lambdas", "1000", "--step-h", "1", "--T", "2000", "--height", "1e300")
    check(p.returncode == 3, "divergent flow exits 3")

    csv = os.path.join(tmp, "esc.csv")
    p = run("escape", "--lambdas", "1", "--noise-amplitude", "0.2", "--noise-scale", "levy",
            "--trials", "50", "--max-steps", "100000", "--eps", "0.2", "--csv", csv, "--seed", "3")
    check(p.returncode == 0, "escape exits 0")
    doc = envelope(p)
    check(doc["result"]["exits"] == 50, "all escape trials exit")
    with open(csv) as f:
        rows = f.read().splitlines()
    check(rows[0] == "basin,trial,exited,exit_step,exit_time", "escape CSV header")
    check(len(rows) == 51, "one CSV row per trial")

    env = dict(os.environ, LEVY_ESCAPE_THREADS="3")
    doc = envelope(run("geometry", "--directions", "5000", env=env))
    check(doc["config_echo"]["threads"] == "3", "threads read from the environment")
    check(doc["result"]["geometry"]["ratio"] > 1.0, "sharp aligned noise favours SGD")

    doc = envelope(run("--config", os.path.join(PRESETS, "measure_compare.cfg"), "compare",
                       "--directions", "5000", "--trials", "20"))
    check(doc["config_echo"]["sigmas"] == ["3", "0.3"], "preset values reach the subcommand")
    check(doc["config_echo"]["trials"] == "20", "command line overrides the preset")
    check(set(doc["result"]["simulation"]) == {"sgd", "adam"}, "compare runs the preset optimizers")

    for name in ("fig3_basins.cfg", "scaling_alpha15.cfg", "measure_compare.cfg"):
        p = run("--config", os.path.join(PRESETS, name), "--help")
        check(p.returncode == 0, f"preset {name} parses")

if failures:
    print(f"{len(failures)} check(s) failed")
    sys.exit(1)
