"""Run the activation study with the shipped config and write CSV + meta JSON.

Usage: python3 scripts/run_activation.py [OUT_DIR]   (default: results/)
"""
import sys
from pathlib import Path

from lyapnet.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "results")
    sys.exit(main(["experiment", "activation", "--config", str(ROOT / "configs" / "activation.json"), "--out", out]))
