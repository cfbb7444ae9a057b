"""Run one of the bundled scenario configs (default: sphere).

    python scripts/run_scenario.py [sphere|dumbbell|path/to.cfg] [--out DIR]
"""
import argparse
import os
from pathlib import Path

from ricci_lab import cli

CONFIGS = Path(__file__).resolve().parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", default="sphere")
    ap.add_argument("--out", default="runs", help="output root (default: ./runs)")
    args = ap.parse_args()
    cfg = Path(args.scenario)
    if not cfg.exists():
        cfg = CONFIGS / f"{args.scenario}.cfg"
    os.environ.setdefault(cli.OUTPUT_ROOT_ENV, args.out)
    code = cli.main(["run", str(cfg)])
    if code == 0:
        cli.main(["report", cli.parse_config(cfg.read_text()).output])
    raise SystemExit(code)


if __name__ == "__main__":
    main()
