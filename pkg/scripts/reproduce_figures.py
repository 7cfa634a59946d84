"""Regenerate every CSV and plot stub from the shipped configs.

    python scripts/reproduce_figures.py [--out out]

Runs source, hom, scan and verify on the BBO default and feasibility on both
lens realizations.  Exits non-zero if any command does.
"""
import argparse
import sys
from pathlib import Path

from timelens_hom import cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

RUNS = [
    ("source", "bbo_default"),
    ("hom", "bbo_default"),
    ("scan", "bbo_default"),
    ("verify", "bbo_default"),
    ("feasibility", "eopm"),
    ("feasibility", "fwm"),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    args = ap.parse_args(argv)
    worst = 0
    for cmd, name in RUNS:
        out = args.out / name
        print(f"== {cmd} {name} -> {out}")
        code = cli.main([cmd, "--config", str(CONFIGS / f"{name}.toml"), "--out", str(out)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
