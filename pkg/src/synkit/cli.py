"""Command-line entry point: check/simulate programs, generate test cases
by falsification or template synthesis, and validate proof scripts.

Exit codes are a stable contract for CI use:
  0  success / proved
  1  usage or input error (parse, type, causality, bad flags)
  2  objective not reached / proof validation failed
  3  solver failure (crash, timeout, unknown)
"""
from __future__ import annotations

import json
import os
import shlex
import sys

import click

from .algebra import combi, compose_all, eval_nodeexpr
from .engine import EngineConfig, falsify as engine_falsify, synthesize
from .errors import SolverError, SynkitError
from .node import Node, elaborate_program, simulate
from .parser import parse_program
from .proof import ProofContext, parse_proof, validate_tree
from .smt import SmtConfig
from .typecheck import typecheck
from .values import csv_to_valuations, trace_to_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNREACHED = 2
EXIT_SOLVER = 3


# ---------------------------------------------------------------------------
# Configuration: flags > environment > config file > defaults
# ---------------------------------------------------------------------------

_ENV_KEYS = {
    "solver": "SYNKIT_SMT_SOLVER",
    "timeout": "SYNKIT_TIMEOUT",
    "budget": "SYNKIT_BUDGET",
    "jobs": "SYNKIT_JOBS",
    "seed": "SYNKIT_SEED",
    "dump_dir": "SYNKIT_DUMP_DIR",
}


def _load_config_file(path: str | None) -> dict:
    path = path or os.environ.get("SYNKIT_CONFIG")
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"config file {path}: {exc}")
    if not isinstance(data, dict):
        raise click.ClickException(f"config file {path}: expected an object")
    return data


def build_config(config_file: str | None = None, *,
                 solver: str | None = None, timeout: float | None = None,
                 budget: float | None = None, jobs: int | None = None,
                 seed: int | None = None,
                 dump_dir: str | None = None) -> EngineConfig:
    """Merge settings with precedence flags > env vars > file > defaults."""
    merged: dict = dict(_load_config_file(config_file))
    for key, env in _ENV_KEYS.items():
        if os.environ.get(env) is not None:
            merged[key] = os.environ[env]
    flags = {"solver": solver, "timeout": timeout, "budget": budget,
             "jobs": jobs, "seed": seed, "dump_dir": dump_dir}
    for key, val in flags.items():
        if val is not None:
            merged[key] = val
    smt_kwargs: dict = {}
    if merged.get("solver"):
        cmdline = merged["solver"]
        smt_kwargs["command"] = (shlex.split(cmdline)
                                 if isinstance(cmdline, str) else list(cmdline))
        if not smt_kwargs["command"]:
            raise click.ClickException("solver command must be nonempty")
    if merged.get("timeout") is not None:
        smt_kwargs["timeout"] = float(merged["timeout"])
        if smt_kwargs["timeout"] <= 0:
            raise click.ClickException("timeout must be positive")
    if merged.get("dump_dir"):
        smt_kwargs["dump_dir"] = str(merged["dump_dir"])
    cfg = EngineConfig(smt=SmtConfig(**smt_kwargs))
    if merged.get("budget") is not None:
        cfg.budget = float(merged["budget"])
        if cfg.budget <= 0:
            raise click.ClickException("budget must be positive")
    if merged.get("jobs") is not None:
        cfg.jobs = max(1, int(merged["jobs"]))
    if merged.get("seed") is not None:
        cfg.seed = int(merged["seed"])
    if merged.get("dump_dir"):
        cfg.dump_dir = str(merged["dump_dir"])
    return cfg


def _config_options(fn):
    opts = [
        click.option("--config", "config_file", type=click.Path(),
                     default=None, help="JSON config file (lowest priority "
                     "after defaults; SYNKIT_CONFIG also works)."),
        click.option("--solver", default=None,
                     help="Solver command line (default: bundled minismt)."),
        click.option("--timeout", type=float, default=None,
                     help="Per-check solver timeout in seconds."),
        click.option("--budget", type=float, default=None,
                     help="Overall wall-clock budget in seconds."),
        click.option("--jobs", type=int, default=None,
                     help="Maximum concurrent solver sessions."),
        click.option("--seed", type=int, default=None,
                     help="Seed for randomized search (printed on use)."),
        click.option("--dump-dir", default=None,
                     help="Directory for SMT script dumps."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _load_env(paths: tuple[str, ...]) -> dict[str, Node]:
    env: dict[str, Node] = {}
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SynkitError(str(exc))
        from .templates import template_decls
        prog = typecheck(parse_program(text), extra_nodes=template_decls())
        env.update(elaborate_program(prog, extra=env))
    return env


def _pick_node(env: dict[str, Node], name: str) -> Node:
    if name not in env:
        raise SynkitError(
            f"node {name} not found; available: {', '.join(sorted(env))}")
    return env[name]


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
def main() -> None:
    """Compositional test generation for synchronous dataflow programs."""


@main.command("check")
@click.argument("files", nargs=-1, required=True, type=click.Path())
def cmd_check(files: tuple[str, ...]) -> None:
    """Parse, typecheck and elaborate all nodes; print a summary table."""
    try:
        env = _load_env(files)
    except SynkitError as exc:
        _fail(str(exc), EXIT_USAGE)
    click.echo(f"{'node':<16} {'inputs':>6} {'outputs':>7} {'states':>6}")
    for name in env:
        n = env[name]
        click.echo(f"{name:<16} {len(n.inputs):>6} {len(n.outputs):>7} "
                   f"{len(n.states):>6}")
    click.echo(f"{len(env)} node(s) ok")


@main.command("sim")
@click.argument("file", type=click.Path())
@click.argument("node_name", metavar="NODE")
@click.option("--inputs", "inputs_csv", type=click.Path(), default=None,
              help="CSV of input streams (round,var,... header); stdin "
              "when omitted and the node has inputs.")
@click.option("--steps", type=int, default=None,
              help="Number of rounds to simulate (defaults to the CSV "
              "length; required for closed nodes).")
def cmd_sim(file: str, node_name: str, inputs_csv: str | None,
            steps: int | None) -> None:
    """Simulate NODE and print the trace as CSV on stdout."""
    try:
        env = _load_env((file,))
        node = _pick_node(env, node_name)
        types = dict(node.inputs)
        if node.inputs:
            text = (open(inputs_csv, encoding="utf-8").read()
                    if inputs_csv else sys.stdin.read())
            rows = csv_to_valuations(text, types)
        else:
            if steps is None:
                raise SynkitError("closed node: --steps is required")
            rows = [{} for _ in range(steps)]
        if steps is not None:
            rows = rows[:steps]
        trace = simulate(node, rows)
        columns = node.input_names() + node.output_names()
        click.echo(trace_to_csv(trace, columns=columns), nl=False)
    except SynkitError as exc:
        _fail(str(exc), EXIT_USAGE)


def _parse_templates(spec: str | None) -> dict[str, str]:
    if not spec:
        return {}
    out: dict[str, str] = {}
    for part in spec.split(","):
        if ":" not in part:
            raise SynkitError(
                f"bad template binding {part!r}; expected input:Template")
        inp, tname = part.split(":", 1)
        out[inp.strip()] = tname.strip()
    return out


@main.command("falsify")
@click.argument("file", type=click.Path())
@click.argument("node_name", metavar="NODE")
@click.option("--obj", required=True,
              help="Objective over the node's interface, e.g. "
              "'FOut @ 10 /\\ FOut @ 20'.")
@click.option("--templates", default=None,
              help="Per-input stream templates, e.g. 'In:Square'; when "
              "given, template parameters are synthesized.")
@click.option("--kmax", type=int, default=None,
              help="Largest unrolling bound to try.")
@click.option("--out", "out_base", type=click.Path(), default=None,
              help="Write <out>.csv and <out>.meta for the test case.")
@click.option("--json", "as_json", is_flag=True,
              help="Machine-readable result on stdout.")
@_config_options
def cmd_falsify(file: str, node_name: str, obj: str, templates: str | None,
                kmax: int | None, out_base: str | None, as_json: bool,
                config_file, solver, timeout, budget, jobs, seed,
                dump_dir) -> None:
    """Generate a test case driving NODE to the objective."""
    cfg = build_config(config_file, solver=solver, timeout=timeout,
                       budget=budget, jobs=jobs, seed=seed, dump_dir=dump_dir)
    try:
        env = _load_env((file,))
        node = _pick_node(env, node_name)
        tmap = _parse_templates(templates)
        k_max = kmax if kmax is not None else cfg.k_max
        click.echo(f"seed: {cfg.seed}", err=True)
        if tmap:
            tc = synthesize(node, tmap, obj, k_max, cfg)
        else:
            tc = engine_falsify(node, obj, k_max, cfg)
    except SolverError as exc:
        _fail(str(exc), EXIT_SOLVER)
    except SynkitError as exc:
        _fail(str(exc), EXIT_USAGE)
    if tc is None:
        if as_json:
            click.echo(json.dumps({"found": False, "k_max": k_max}))
        else:
            click.echo("none")
        sys.exit(EXIT_UNREACHED)
    if out_base:
        tc.save(out_base)
    if as_json:
        click.echo(json.dumps({
            "found": True,
            "generator": str(tc.generator),
            "objective": tc.objective,
            "witnessed_round": tc.s,
            "bound": tc.bound,
            "params": {k: str(v) for k, v in sorted(tc.params.items())},
            "trace_csv": tc.to_csv(),
        }))
    else:
        click.echo(tc.metadata(), nl=False)
        click.echo(tc.to_csv(), nl=False)
    sys.exit(EXIT_OK)


@main.command("prove")
@click.argument("script", type=click.Path())
@click.option("--program", "-p", "programs", multiple=True, required=True,
              type=click.Path(), help="Source file(s) declaring the nodes "
              "the script refers to (repeatable).")
@click.option("--json", "as_json", is_flag=True,
              help="Machine-readable report on stdout.")
@click.option("--cex-dir", type=click.Path(), default=None,
              help="Directory for counterexample trace CSVs.")
@_config_options
def cmd_prove(script: str, programs: tuple[str, ...], as_json: bool,
              cex_dir: str | None, config_file, solver, timeout, budget,
              jobs, seed, dump_dir) -> None:
    """Validate a proof script: structural rule checks + BMC leaves."""
    cfg = build_config(config_file, solver=solver, timeout=timeout,
                       budget=budget, jobs=jobs, seed=seed, dump_dir=dump_dir)
    try:
        env = _load_env(programs)
        with open(script, encoding="utf-8") as fh:
            tree = parse_proof(fh.read())
        report = validate_tree(tree, ProofContext.for_env(env), cfg)
    except SynkitError as exc:
        _fail(str(exc), EXIT_USAGE)
    cex_paths: dict[str, str] = {}
    if cex_dir:
        os.makedirs(cex_dir, exist_ok=True)
        for e in report.counterexamples():
            path = os.path.join(cex_dir, f"cex_{e.path.replace('.', '_')}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(trace_to_csv(e.verdict.trace))
            cex_paths[e.path] = path
    if as_json:
        payload = report.to_dict()
        payload["counterexample_files"] = cex_paths
        click.echo(json.dumps(payload))
    else:
        click.echo(report.render())
        for path, csv_path in cex_paths.items():
            click.echo(f"counterexample for {path}: {csv_path}")
    if report.ok:
        sys.exit(EXIT_OK)
    if any(e.verdict.status in ("unknown", "unsupported")
           for e in report.entries if not e.ok):
        sys.exit(EXIT_SOLVER)
    sys.exit(EXIT_UNREACHED)


if __name__ == "__main__":
    main()
