"""Run every shipped study and print the headline summary of each.

Usage: python3 scripts/run_all.py [OUT_DIR]   (default: results/)
"""
import json
import sys
import time
from pathlib import Path

from lyapnet.cli import main

ROOT = Path(__file__).resolve().parents[1]
STUDIES = [
    ("width-scaling", "width_scaling.json"),
    ("activation", "activation.json"),
    ("depth-profile", "depth_profile.json"),
    ("overfit", "overfit.json"),
    ("prune", "prune.json"),
]


def run(out):
    for name, cfg in STUDIES:
        t0 = time.perf_counter()
        code = main(["-q", "experiment", name, "--config", str(ROOT / "configs" / cfg), "--out", str(out)])
        if code:
            return code
        summary = json.loads((Path(out) / f"{name}.meta.json").read_text())["summary"]
        print(f"{name} ({time.perf_counter() - t0:.1f}s)")
        for key, value in summary.items():
            if not isinstance(value, (list, dict)):
                print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else ROOT / "results"))
