# Monte-Carlo sweep through the command line
#
# The CLI writes per-seed CSVs and a merged summary. Here it runs in-process
# over five seeds of a smaller drop.

# %%
import json
import tempfile
from pathlib import Path

from mmwave_udn.cli import run_experiment

work = Path(tempfile.mkdtemp())
(work / "small.cfg").write_text("n_small_cells = 10\nn_users = 40\n")

code = run_experiment(["--config", str(work / "small.cfg"), "--seeds", "1..5",
                       "--out", str(work / "mc")])
print("exit code", code)   # 3 means some seed could not meet the rate target

# %%
summary = json.loads((work / "mc" / "summary.json").read_text())
ee = summary["merged"]["comparison"]["ee_ratio"]
print("EE ratio over seeds: mean %.1f, std %.1f" % (ee["mean"], ee["std"]))
print(sorted(p.name for p in (work / "mc").iterdir()))
