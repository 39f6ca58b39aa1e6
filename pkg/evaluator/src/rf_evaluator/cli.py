import argparse
import sys

from .model import MODES, DigitsScorer
from .server import serve_stdio


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rf-evaluator",
        description="Serve 1 - accuracy of a random forest on the digits table "
        "over the line-delimited JSON protocol (version 1).",
    )
    parser.add_argument("--mode", choices=MODES, default="holdout")
    parser.add_argument("--seed", type=int, default=0, help="dataset split seed")
    args = parser.parse_args(argv)
    return serve_stdio(DigitsScorer(mode=args.mode, seed=args.seed))


if __name__ == "__main__":
    sys.exit(main())
