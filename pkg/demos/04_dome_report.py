"""Plan a hemispherical cap and print the speed-window report."""

import sys
from pathlib import Path

from maam_motion import RunConfig, run_pipeline
from maam_motion.synthetic import dome_toolpaths

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("dome_out")
run = run_pipeline(RunConfig(out=out), dome_toolpaths())
print(run.report.summary)
print(f"G-code, speeds.csv and report.txt written to {out}/")
