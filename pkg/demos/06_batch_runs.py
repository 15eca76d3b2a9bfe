# %% [markdown]
# # Batch runs from a config file
#
# The ``mfgfb`` command reads an INI problem description and writes CSV
# and JSON tables plus a hashed manifest. This script drives it in-process.

# %%
import tempfile
from pathlib import Path

from mfgfb.cli import main

work = Path(tempfile.mkdtemp())
cfg = work / "barenblatt.ini"
cfg.write_text("""
[coupling]
theta = 1

[initial]
profile = barenblatt

[terminal]
kind = planning

[grid]
ny = 65
nt = 65
""")

# %%
for cmd in ("validate", "solve", "report"):
    code = main([cmd, "--config", str(cfg), "--out", str(work / cmd)])

# %%
main(["convergence", "--config", str(cfg), "--out", str(work / "conv"), "--levels", "3"])
print((work / "conv" / "convergence.csv").read_text().splitlines()[0])
