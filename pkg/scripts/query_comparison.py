"""Run the full pipeline on a config and print the query-variant recall table."""
import argparse
import sys
import tempfile
from pathlib import Path

from grabqc.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=ROOT / "fixtures" / "disambiguation" / "pipeline.cfg")
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    out = args.out or Path(tempfile.mkdtemp(prefix="grabqc-"))
    argv = ["--config", str(args.config), "--out", str(out)]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    sys.exit(main(argv + ["all"]))
