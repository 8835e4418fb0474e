"""File emission for experiment outcomes.

Output bytes are a pure function of (spec, base seed): floats are
written with repr (shortest round-trip form), JSON keys are sorted, and
anything time-dependent (timestamps, wall time, worker count) lives only
in manifest.json.  Plots are emitted as small standalone scripts next to
the data, so a rerun is never needed just to restyle a figure.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import io
import json
from pathlib import Path

from .. import __version__
from .run import ExperimentOutcome
from .spec import RunResult, ReplicaRecord

RESULTS_NAME = "results.csv"
SUMMARY_NAME = "summary.json"
MANIFEST_NAME = "manifest.json"

SEED_NOTE = ("replica i of every cell uses field seed "
             "derive_seed(base_seed, i, 11) and walker seed "
             "derive_seed(base_seed, i, 12)")


def _fmt(v) -> str:
    return repr(float(v))


def result_csv_text(result: RunResult) -> str:
    """Render a RunResult as CSV text; empty results still carry the
    schema line and header."""
    buf = io.StringIO()
    buf.write(f"# rwdre-results schema=1 kind={result.kind}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("key", "index", "status") + tuple(result.columns))
    for rec in result.records:
        writer.writerow((rec.key, rec.index, rec.status)
                        + tuple(_fmt(v) for v in rec.values))
    return buf.getvalue()


def read_result_csv(path) -> RunResult:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# rwdre-results schema=1"):
        raise ValueError(f"{path}: not a results file")
    kind = lines[0].rsplit("kind=", 1)[1]
    rows = list(csv.reader(lines[1:]))
    header = rows[0]
    if header[:3] != ["key", "index", "status"]:
        raise ValueError(f"{path}: unexpected header {header[:3]}")
    columns = tuple(header[3:])
    records = tuple(
        ReplicaRecord(row[0], int(row[1]), row[2],
                      tuple(float(v) for v in row[3:]))
        for row in rows[1:])
    return RunResult(kind, columns, records)


def summary_json_text(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=1,
                      allow_nan=True) + "\n"


_PLOTS = {
    "speed_curve": """\
cells = sorted(summary["cells"].values(), key=lambda c: c["mu"])
mu = [c["mu"] for c in cells]
v = [c["v_hat"] for c in cells]
err = [3 * c["se_speed"] for c in cells]
pred = [c["decomposition_predicted"] for c in cells]
fig, ax = plt.subplots()
ax.errorbar(mu, v, yerr=err, fmt="o-", label="measured")
ax.plot(mu, pred, "x--", label="rho-weighted prediction")
ax.set_xscale("log")
ax.set_xlabel("mu")
ax.set_ylabel("speed")
ax.legend()
""",
    "rho_curve": """\
cells = sorted(summary["cells"].values(), key=lambda c: c["mu"])
mu = [c["mu"] for c in cells]
rho_t = [c["rho_time"] for c in cells]
rho_j = [c["rho_jumps"] for c in cells]
fig, ax = plt.subplots()
ax.plot(mu, rho_t, "o-", label="time fraction")
ax.plot(mu, rho_j, "x--", label="jump fraction")
ax.set_xscale("log")
ax.set_xlabel("mu")
ax.set_ylabel("occupied fraction")
ax.legend()
""",
    "static_solomon": """\
fig, ax = plt.subplots()
by_p = {}
for c in summary["cells"].values():
    by_p.setdefault(c["p"], []).append(c)
for p, cells in sorted(by_p.items()):
    cells.sort(key=lambda c: c["mu"])
    mu = [c["mu"] for c in cells]
    v = [c["v_hat"] for c in cells]
    err = [3 * c["se_speed"] for c in cells]
    ax.errorbar(mu, v, yerr=err, fmt="o-", label=f"p={p}")
    ax.axvline(cells[0]["mu_c_minus"], ls=":", color="gray")
    ax.axvline(cells[0]["mu_c_plus"], ls=":", color="gray")
ax.axhline(0.0, color="k", lw=0.5)
ax.set_xlabel("mu")
ax.set_ylabel("speed")
ax.legend()
""",
    "single_run": """\
import csv
speeds = []
with open(HERE / "results.csv") as fh:
    fh.readline()
    for row in csv.DictReader(fh):
        if row["status"] == "ok":
            speeds.append(float(row["speed"]))
fig, ax = plt.subplots()
ax.hist(speeds, bins=max(5, len(speeds) // 20))
ax.set_xlabel("empirical speed")
ax.set_ylabel("replicas")
""",
    "block_tails": """\
events = ("phi", "gamma_bad", "lambda")
cells = sorted(summary["cells"].values(), key=lambda c: c["mu"])
fig, ax = plt.subplots()
for ev in events:
    mu = [c["mu"] for c in cells]
    f = [c["freq"][ev] for c in cells]
    ax.plot(mu, f, "o-", label=ev)
ax.set_xscale("log")
ax.set_xlabel("mu")
ax.set_ylabel("exceedance frequency")
ax.legend()
""",
    "coverage_probe": """\
cells = [(k, c) for k, c in sorted(summary["cells"].items())
         if "f_hat" in c]
fig, ax = plt.subplots()
for x, (key, c) in enumerate(cells):
    lo, hi = c["ci95"]
    ax.errorbar([x], [c["f_hat"]],
                yerr=[[c["f_hat"] - lo], [hi - c["f_hat"]]], fmt="o")
ax.set_xticks(range(len(cells)))
ax.set_xticklabels([k for k, _ in cells], rotation=20)
ax.set_ylabel("cover probability")
""",
    "constants_report": """\
rows = summary["rows"]
r = [row["r"] for row in rows]
fig, ax = plt.subplots()
ax.plot(r, [row["const4_log"] for row in rows], "o-",
        label="log block-count bound (needs <= 0)")
ax.plot(r, [row["const3_lhs"] - row["const3_rhs"] for row in rows],
        "x--", label="scale-gain margin (needs <= 0)")
ax.axhline(0.0, color="k", lw=0.5)
ax.set_xlabel("r")
ax.legend()
""",
}


def plot_script_text(kind: str) -> str:
    body = _PLOTS[kind]
    return (
        '"""Generated plotting script; reads only the files beside it.\n'
        '"""\n'
        "import json\n"
        "from pathlib import Path\n"
        "\n"
        "import matplotlib.pyplot as plt\n"
        "\n"
        "HERE = Path(__file__).resolve().parent\n"
        'summary = json.loads((HERE / "summary.json").read_text())\n'
        "\n"
        f"{body}"
        "fig.tight_layout()\n"
        f'fig.savefig(HERE / "plot_{kind}.png", dpi=150)\n'
        f'print("wrote", HERE / "plot_{kind}.png")\n')


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def emit_outputs(outcome: ExperimentOutcome, out_dir=None,
                 workers: int = 1) -> dict:
    """Write results.csv, summary.json, a plot script, and manifest.json.

    Returns {name: Path}.  Everything except the manifest is
    byte-reproducible from (spec, base seed).
    """
    if out_dir is None:
        out_dir = outcome.spec.out_dir
    if out_dir is None:
        raise ValueError("no output directory: pass out_dir or set it on "
                         "the spec")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = outcome.result.kind

    files = {
        RESULTS_NAME: result_csv_text(outcome.result).encode(),
        SUMMARY_NAME: summary_json_text(outcome.summary).encode(),
        f"plot_{kind}.py": plot_script_text(kind).encode(),
    }
    paths = {}
    for name, data in files.items():
        path = out / name
        path.write_bytes(data)
        paths[name] = path

    manifest = {
        "schema": 1,
        "kind": kind,
        "spec": outcome.spec.to_dict(),
        "spec_hash": outcome.spec.spec_hash(),
        "code_version": __version__,
        "seed_derivation": SEED_NOTE,
        "created_utc": datetime.datetime.now(
            datetime.timezone.utc).isoformat(),
        "runtime_seconds": outcome.runtime_seconds,
        "workers": int(workers),
        "flags": list(outcome.flags),
        "outputs": [
            {"name": name, "bytes": len(files[name]),
             "sha256": _sha256(files[name])}
            for name in sorted(files)
        ],
    }
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1)
                             + "\n")
    paths[MANIFEST_NAME] = manifest_path
    return paths
