"""Emit standalone matplotlib scripts for a sweep directory. Nothing is rendered here."""

from pathlib import Path

EXPECTED = ("sweep.csv",)

_PRELUDE = '''import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
with open(HERE / "sweep.csv", newline="") as fh:
    rows = list(csv.DictReader(fh))
'''

_NORM_VS_N = _PRELUDE + '''
t_final = max(float(r["t"]) for r in rows)
series = defaultdict(dict)
for r in rows:
    if float(r["t"]) == t_final:
        series[float(r["theta"])][int(r["N1"])] = float(r["trace_norm"])
        series["a1+a2"][int(r["N1"])] = float(r["a1"]) + float(r["a2"])
fig, ax = plt.subplots()
for key, pts in series.items():
    n = sorted(pts)
    label = key if isinstance(key, str) else f"weighted trace norm, theta={key}"
    ax.loglog(n, [pts[i] for i in n], "o-", label=label)
ax.set_xlabel("N1")
ax.set_title(f"t = {t_final}")
ax.legend()
fig.savefig(HERE / "norm_vs_N.png", dpi=150)
'''

_PICKL = _PRELUDE + '''
series = defaultdict(dict)
for r in rows:
    key = (int(r["N1"]), int(r["N2"]))
    series[key][float(r["t"])] = (float(r["a1"]), float(r["a2"]))
fig, ax = plt.subplots()
for (n1, n2), pts in sorted(series.items()):
    t = sorted(pts)
    ax.plot(t, [pts[s][0] for s in t], "-", label=f"a1, N=({n1},{n2})")
    ax.plot(t, [pts[s][1] for s in t], "--", label=f"a2, N=({n1},{n2})")
ax.set_xlabel("t")
ax.set_yscale("log")
ax.legend()
fig.savefig(HERE / "pickl_timeseries.png", dpi=150)
'''

_ENERGY = _PRELUDE + '''
series = defaultdict(dict)
for r in rows:
    series[(int(r["N1"]), int(r["N2"]))][float(r["t"])] = float(r["energy_drift"])
fig, ax = plt.subplots()
for (n1, n2), pts in sorted(series.items()):
    t = sorted(pts)
    ax.plot(t, [max(pts[s], 1e-17) for s in t], label=f"N=({n1},{n2})")
ax.set_xlabel("t")
ax.set_ylabel("relative energy drift")
ax.set_yscale("log")
ax.legend()
fig.savefig(HERE / "energy_drift.png", dpi=150)
'''

CATALOG = {
    "plot_norm_vs_N.py": _NORM_VS_N,
    "plot_pickl_timeseries.py": _PICKL,
    "plot_energy_drift.py": _ENERGY,
}


def emit_plots(report_dir):
    """Write the plotting scripts into `report_dir`; returns their paths."""
    report_dir = Path(report_dir)
    missing = [name for name in EXPECTED if not (report_dir / name).is_file()]
    if missing:
        raise FileNotFoundError(f"{report_dir}: missing expected files {', '.join(missing)}")
    paths = []
    for name, body in CATALOG.items():
        p = report_dir / name
        p.write_text(body)
        paths.append(p)
    return paths
