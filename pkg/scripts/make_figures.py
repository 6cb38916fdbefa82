#!/usr/bin/env python3
"""
Regenerate the data behind every published figure.

Writes one CSV per preset curve, e.g. figures/fig4a_dashed.csv, by running
the atomdem CLI with --preset <figure>:<curve>.

Exits with:
  0 = every curve written
  1 = bad arguments or unknown figure
  2 = a curve failed (computation or I/O); the rest are still attempted
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from atomdem.config import FIGURES_DIR, PRESETS  # noqa: E402
from atomdem.main import EXIT_OK, main as atomdem_main  # noqa: E402


def run(figures: list[str], out_dir: Path, workers: int) -> int:
    failures = 0
    for name in figures:
        preset = PRESETS[name]
        for curve in preset.curves:
            target = out_dir / f"{name}_{curve}.csv"
            code = atomdem_main(
                [
                    preset.command,
                    "--preset", f"{name}:{curve}",
                    "--out", str(target),
                    "--workers", str(workers),
                ]
            )
            status = "ok" if code == EXIT_OK else f"FAILED (exit {code})"
            print(f"{name}:{curve:<8} -> {target} {status}")
            failures += code != EXIT_OK
    return 0 if failures == 0 else 2


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write the data of all figure presets")
    parser.add_argument("figures", nargs="*", help=f"Subset of {', '.join(PRESETS)} (default: all)")
    parser.add_argument("--out-dir", type=Path, default=FIGURES_DIR)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args(argv)

    unknown = [f for f in args.figures if f not in PRESETS]
    if unknown:
        print(f"Unknown figure(s): {', '.join(unknown)}", file=sys.stderr)
        return 1
    return run(args.figures or list(PRESETS), args.out_dir, args.workers)


if __name__ == "__main__":
    sys.exit(main())
