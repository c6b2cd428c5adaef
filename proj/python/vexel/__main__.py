"""`python -m vexel edit`: the edit command with Python-side backends available."""

import argparse
import sys

from . import BackendError, Error, edit
from .backends import register_external


def main(argv=None):
    parser = argparse.ArgumentParser(prog="python -m vexel")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("edit", help="optimize an image's vector form against text prompts")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.add_argument("--svg", help="start from this document instead of vectorizing")
    p.add_argument("--frames", help="directory for snapshot frames")
    args = parser.parse_args(argv)

    register_external()
    try:
        report = edit(args.config, output=args.output, frames=args.frames, svg=args.svg)
    except BackendError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (Error, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    losses = report["losses"]
    print(f"iterations: {len(losses)}")
    if len(losses):
        print(f"loss: first {losses[0]:.6f}, last {losses[-1]:.6f}, min {losses.min():.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
