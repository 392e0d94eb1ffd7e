"""Entry point: `synkit-smt [file.smt2 ...]` or interactive over stdio."""
from __future__ import annotations

import sys

from .solver import MiniSmtError, Solver
from .sexpr import SexprError


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    files = [a for a in args if not a.startswith("-")]
    solver = Solver(out=sys.stdout)
    if files:
        for path in files:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
            try:
                solver.run_script(text)
            except (MiniSmtError, SexprError) as exc:
                print(f'(error "{exc}")')
                return 1
        return 0
    solver.interact(sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
