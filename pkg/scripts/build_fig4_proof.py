#!/usr/bin/env python3
"""Regenerate corpus/fig4.proof.

The temporal-split proof for Sys2 needs the intermediate state predicate
at round 100, which is obtained by numerically simulating the closed
composition of the test generators with the system. Run from the
repository root:

    python3 scripts/build_fig4_proof.py
"""
from pathlib import Path

from synkit.algebra import compose_all
from synkit.node import elaborate_program
from synkit.parser import parse_program
from synkit.properties import prime
from synkit.proof import temp_split_assist

ROOT = Path(__file__).resolve().parent.parent
J, K = 100, 101

HEADER = """\
-- Temporal split of the Sys2 objective Out @ 202 (j = 100, k = 101).
-- The intermediate state predicate equates every register of the closed
-- composition to its simulated value after round 100; it is produced by
-- scripts/build_fig4_proof.py.

"""

TEMPLATE = """\
goal: T_In1 || T_In2 || Sys2 |= obs(Out @ {n})
rule: Temp
j: {j}
k: {k}
state_pred: {e}
premise {{
  goal: C(T_In1 || T_In2 || Sys2, init) |= obs({ep} @ {j})
  rule: V
  bound: {j}
}}
premise {{
  goal: C(T_In1 || T_In2 || Sys2, {e}) |= obs(Out @ {k})
  rule: V
  bound: {k}
}}
"""


def main() -> None:
    prog = parse_program((ROOT / "corpus" / "sys2.lus").read_text())
    env = elaborate_program(prog)
    closed = compose_all([env["T_In1"], env["T_In2"], env["Sys2"]])
    e = temp_split_assist(closed, [{}] * (J + 1), J)
    text = HEADER + TEMPLATE.format(n=J + K + 1, j=J, k=K, e=e, ep=prime(e))
    out = ROOT / "corpus" / "fig4.proof"
    out.write_text(text)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
