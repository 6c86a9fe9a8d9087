#!/usr/bin/env python3
"""Run the shipped recipe configs end to end into out/.

Produces the BPSK phase sweep, the response-magnitude table, the
theory-vs-simulation curves for 16QAM and 64QAM, and the multipath
criterion comparison.  Everything lands as CSV plus a JSON sidecar; any
plotting tool can consume the CSVs directly.
"""

import sys
from pathlib import Path

from tdslink.cli import main

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
OUT = ROOT / "out"


def run(args: list[str]) -> int:
    print("+ tdslink " + " ".join(args))
    return main(args)


def main_script() -> int:
    OUT.mkdir(exist_ok=True)
    worst = 0
    jobs = [
        ["simulate", "--config", str(CONFIGS / "fig3.cfg"),
         "--out", str(OUT / "bpsk_phase_sweep.csv")],
        ["response", "--config", str(CONFIGS / "fig5.cfg"),
         "--phases", "0,0.125,0.25,0.375,0.5",
         "--out", str(OUT / "response_magnitude.csv")],
        ["theory", "--config", str(CONFIGS / "fig6.cfg"), "--chernoff",
         "--out", str(OUT / "qam16_theory.csv")],
        ["theory", "--config", str(CONFIGS / "fig6.cfg"), "--chernoff",
         "--modulation", "qam64", "--out", str(OUT / "qam64_theory.csv")],
        ["simulate", "--config", str(CONFIGS / "fig6.cfg"),
         "--out", str(OUT / "qam16_mc.csv")],
        ["simulate", "--config", str(CONFIGS / "fig6.cfg"),
         "--modulation", "qam64", "--out", str(OUT / "qam64_mc.csv")],
        ["criterion", "--config", str(CONFIGS / "sec4-comparison.cfg"),
         "--out", str(OUT / "criterion_comparison.csv")],
    ]
    for job in jobs:
        worst = max(worst, run(job))
    return worst


if __name__ == "__main__":
    sys.exit(main_script())
