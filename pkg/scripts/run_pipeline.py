#!/usr/bin/env python3
"""End-to-end CLI pipeline over the shipped corpus.

Runs every stage the tool offers, via the `synkit` command line:
  1. check all corpus sources;
  2. simulate the Cnt golden trace;
  3. synthesize a Square input for the filter objective and export it;
  4. replay the exported test case on the full first system;
  5. validate both shipped proof scripts.

Exits nonzero on the first failing stage. Used by the acceptance suite as
the commodity-hardware pipeline benchmark.
"""
import os
import subprocess
import sys
import tempfile
import time

ROOT = os.path.normpath(os.path.join(os.path.dirname(__file__), ".."))
CORPUS = os.path.join(ROOT, "corpus")


def run(args: list[str], **kw) -> subprocess.CompletedProcess:
    print("+", " ".join(args), flush=True)
    return subprocess.run(args, check=False, text=True,
                          capture_output=True, **kw)


def stage(name: str, proc: subprocess.CompletedProcess,
          expect: int = 0) -> str:
    if proc.returncode != expect:
        print(proc.stdout)
        print(proc.stderr, file=sys.stderr)
        print(f"FAILED stage: {name} (exit {proc.returncode}, "
              f"expected {expect})")
        sys.exit(1)
    print(f"  ok: {name}")
    return proc.stdout


def main() -> None:
    t0 = time.monotonic()
    sys1 = os.path.join(CORPUS, "sys1.lus")
    sys2 = os.path.join(CORPUS, "sys2.lus")
    small = os.path.join(CORPUS, "small_nodes.lus")

    stage("check corpus",
          run(["synkit", "check", sys1, sys2, small]))

    out = stage("golden Cnt trace",
                run(["synkit", "sim", sys1, "Cnt"],
                    input="round,En\n0,false\n1,true\n2,false\n3,true\n"))
    want = ["round,En,C", "0,false,0", "1,true,1", "2,false,1", "3,true,2"]
    if out.splitlines() != want:
        print(f"FAILED stage: golden trace mismatch: {out!r}")
        sys.exit(1)

    with tempfile.TemporaryDirectory() as tmp:
        base = os.path.join(tmp, "sys1_tc")
        stage("synthesize Square input for the filter objective",
              run(["synkit", "falsify", sys1, "Filter",
                   "--templates", "In:Square",
                   "--obj", "FOut @ 10 /\\ FOut @ 20",
                   "--kmax", "20", "--out", base]))
        stage("objective out of reach below round 20",
              run(["synkit", "falsify", sys1, "Filter",
                   "--templates", "In:Square",
                   "--obj", "FOut @ 10 /\\ FOut @ 20",
                   "--kmax", "10"]), expect=2)
        with open(base + ".csv", encoding="utf-8") as fh:
            header, *rows = fh.read().splitlines()
        in_col = header.split(",").index("In")
        sim_in = "round,In\n" + "\n".join(
            f"{i},{r.split(',')[in_col]}" for i, r in enumerate(rows))
        out = stage("replay the exported test case on the full system",
                    run(["synkit", "sim", sys1, "Sys1"], input=sim_in))
        last = out.splitlines()[21]  # header + rounds 0..20
        if not last.startswith("20,") or not last.endswith(",true"):
            print(f"FAILED stage: replay did not reach Out at round 20: "
                  f"{last!r}")
            sys.exit(1)

    stage("validate the filter/counter proof script",
          run(["synkit", "prove", os.path.join(CORPUS, "fig3.proof"),
               "-p", sys1, "--jobs", "4"]))
    stage("validate the temporal-split proof script",
          run(["synkit", "prove", os.path.join(CORPUS, "fig4.proof"),
               "-p", sys2, "--jobs", "4"]))

    print(f"pipeline complete in {time.monotonic() - t0:.1f}s")


if __name__ == "__main__":
    main()
