# coding: utf-8

# # Driving the solver from a config file
#
# Everything above is also reachable through `python -m polyflux`. The same
# config drives every command; outputs land in the --out directory.

# In[1]:

import json
import pathlib
import tempfile

from polyflux.cli import main

cfg = pathlib.Path(__file__).resolve().parent.parent / "configs" / "example1.json"
out = pathlib.Path(tempfile.mkdtemp())
for cmd in ("solve", "crosscheck", "report"):
    code = main(["--config", str(cfg), "--command", cmd, "--out", str(out / cmd)])
    print(cmd, "exit", code)


# The two shocks meet at t = 0.25, so the transported tail sets overlap at
# later times. With --expect-breakdown that overlap is the passing outcome.

# In[2]:

main(["--config", str(cfg), "--command", "verify-h1", "--expect-breakdown", "--out", str(out / "h1")])


# The solve command writes one JSON line per collision.

# In[3]:

for line in (out / "solve" / "events.jsonl").read_text().splitlines():
    print(json.loads(line))
