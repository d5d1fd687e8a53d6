"""Regenerate the bundled disambiguation fixture under fixtures/disambiguation/."""
import argparse
from pathlib import Path

from grabqc.synth import write_disambiguation_fixture

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "fixtures" / "disambiguation")
    ap.add_argument("--notes", type=int, default=150)
    ap.add_argument("--seed", type=int, default=13)
    args = ap.parse_args()
    print(write_disambiguation_fixture(args.out, args.notes, args.seed))
