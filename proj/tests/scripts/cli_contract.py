"""Black-box checks of the coopalign command line: exit codes, output files,
byte-identical reruns and report consistency."""

import csv
import json
import math
import os
import shutil
import subprocess
import sys
from collections import defaultdict
from pathlib import Path

CLI = sys.argv[1]
WORK = Path(sys.argv[2])

failures = []


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name}{(' ' + detail) if detail else ''}")
    if not ok:
        failures.append(name)


def run(*args, env=None):
    e = dict(os.environ)
    e["COOPALIGN_LOG"] = "off"
    if env:
        e.update(env)
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=e, timeout=300)


def read_dir(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)

small = WORK / "small.json"
small.write_text(json.dumps({"seed": 5, "scenarios": 6, "noise_levels": [[0, 0], [2, 2]]}))
bad_key = WORK / "bad_key.json"
bad_key.write_text(json.dumps({"sed": 5}))
bad_value = WORK / "bad_value.json"
bad_value.write_text(json.dumps({"scenarios": -3}))

check("no subcommand exits 1", run().returncode == 1)
check("unknown flag exits 1", run("align", "--bogus").returncode == 1)
check("non-positive --parallel exits 1", run("align", "--parallel", "0").returncode == 1)
check("unknown config key exits 1", run("align", "--config", str(bad_key)).returncode == 1)
check("invalid config value exits 1", run("align", "--config", str(bad_value)).returncode == 1)
check("missing config file exits 1", run("align", "--config", str(WORK / "absent.json")).returncode == 1)
check("unknown method exits 1", run("align", "--methods", "pgc,warp-drive").returncode == 1)
check("help exits 0", run("--help").returncode == 0)

for sub, extra in (("selftest", []), ("align", ["--config", str(small)]), ("sweep", ["--config", str(small)])):
    outs = []
    for k in range(2):
        d = WORK / f"{sub}_{k}"
        r = run(sub, "--seed", "5", "--out", str(d), *extra)
        check(f"{sub} run {k} exits 0", r.returncode == 0, r.stderr.strip()[-200:])
        outs.append(read_dir(d))
    check(f"{sub} reruns are byte-identical", outs[0] == outs[1] and len(outs[0]) > 0)

r = run("align", "--config", str(small), "--parallel", "3", "--out", str(WORK / "align_par"))
check("parallel align exits 0", r.returncode == 0)
check("parallel align matches serial",
      (WORK / "align_par" / "align.csv").read_bytes() == (WORK / "align_0" / "align.csv").read_bytes())

# Success rates and byte means recomputed from the per-row CSV.
rows = list(csv.DictReader((WORK / "align_0" / "align.csv").open()))
agg = {a["method"]: a for a in json.loads((WORK / "align_0" / "align.json").read_text())["aggregates"]
       if a["co_visible"] == -1}
by_method = defaultdict(list)
for row in rows:
    by_method[row["method"]].append(row)
check("align.json covers every method", set(agg) == set(by_method))
for method, rs in by_method.items():
    successes = sum(int(r["success"]) for r in rs)
    recomputed = 100.0 * successes / len(rs)
    for r in rs:
        if r["pose_returned"] == "1" and int(r["success"]) != (float(r["translation_error_m"]) < 3.0):
            check(f"{method} success flag matches 3 m rule", False, r["scenario_id"])
            break
    a = agg[method]
    mean_bytes = sum(int(r["bytes"]) for r in rs) / len(rs)
    check(f"{method} success rate recomputes", a["successes"] == successes and
          math.isclose(a["success_rate_pct"], recomputed, abs_tol=1e-9), f"{recomputed:.2f}%")
    check(f"{method} byte mean recomputes", math.isclose(a["mean_bytes"], mean_bytes, rel_tol=1e-12) and
          math.isclose(a["log2_mean_bytes"], math.log2(mean_bytes), rel_tol=1e-12))

sweep_rows = list(csv.DictReader((WORK / "sweep_0" / "sweep.csv").open()))
check("sweep rows cover methods x levels x thresholds x scenarios", len(sweep_rows) == 3 * 2 * 3 * 6,
      str(len(sweep_rows)))
check("sweep AP values lie in [0, 1]", all(0.0 <= float(r["ap"]) <= 1.0 for r in sweep_rows))

gen_dir = WORK / "gen"
r = run("gen", "--config", str(small), "--out", str(gen_dir))
check("gen exits 0", r.returncode == 0)
scen = sorted((gen_dir / "scenarios").iterdir()) if (gen_dir / "scenarios").exists() else []
check("gen writes one directory per scenario", len(scen) == 6)
if scen:
    clouds = sorted(scen[0].glob("*.cpc"))
    check("gen clouds carry the binary header", bool(clouds) and all(c.read_bytes()[:8] == b"CPALPC01" for c in clouds))
    meta = json.loads((scen[0] / "scenario.json").read_text())
    check("scenario.json parses", isinstance(meta, dict))

pipe_dir = WORK / "pipe"
r = run("pipeline", "--config", str(small), "--out", str(pipe_dir))
check("pipeline exits 0", r.returncode == 0, r.stderr.strip()[-200:])
for name in ("detections.json", "ground_truth.json", "ledger.csv", "trace.json"):
    check(f"pipeline writes {name}", (pipe_dir / "pipeline" / name).is_file())
if (pipe_dir / "pipeline" / "detections.json").is_file():
    dets = json.loads((pipe_dir / "pipeline" / "detections.json").read_text())
    check("detections carry 7-float boxes and scores",
          isinstance(dets, list) and all(len(d["box"]) == 7 and 0.0 <= d["score"] <= 1.0 for d in dets))

sys.exit(1 if failures else 0)
