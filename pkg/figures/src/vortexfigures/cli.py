"""Command line entry point: figures --spec job.json [--spec more.json ...]"""

import argparse
import sys

from .render import render
from .spec import FigureSpec, SchemaError


def main(argv=None):
    ap = argparse.ArgumentParser(prog="figures")
    ap.add_argument("--spec", action="append", required=True,
                    help="JSON FigureSpec file; repeatable")
    args = ap.parse_args(argv)
    try:
        for path in args.spec:
            out = render(FigureSpec.from_json(path))
            print(out)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
