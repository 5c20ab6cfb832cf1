"""``amdn``: generate corpora, compile, solve, learn, evaluate and sweep.

Exit status is 0 on success, 1 when a stage fails on its input, and 2 for
usage errors (bad flags, unreadable files).  Every subcommand writes its
artifacts atomically and records a ``manifest.json`` next to them.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from contextlib import contextmanager
from importlib.resources import files
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .compiler import CompileConfig, compile_theory
from .decoder import LearnConfig, decode, family_weights, learn
from .errors import AmdnError, EmptyInput, MixedVariation
from .forge import CorruptionConfig, derived_rng, forge_corpus, random_blocks_problem
from .maxsat import METHODS, SlsParams, read_model, read_wcnf, solve, write_model, write_wcnf
from .metrics import err_rates, trend_report
from .pddl import emit_domain, parse_domain, parse_problem
from .traces import read_traces, write_traces

log = logging.getLogger("amdn")

AXES = ("traces", "obs_rate", "disorder", "noise")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use ``_`` or ``-``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def load_config(path: str) -> dict[str, str]:
    """A key-value file, or a previous run's manifest.json (its merged config)."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    if path.endswith(".json"):
        try:
            cfg = json.loads(text)["config"]
        except (ValueError, KeyError):
            raise UsageError(f"{path} is not a manifest with a 'config' object") from None
        return {k: _cfg_str(v) for k, v in cfg.items() if v is not None}
    return parse_config(text, path)


def _cfg_str(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    return str(v)


def builtin_defaults() -> dict[str, str]:
    return parse_config((files("amdn") / "data" / "defaults.cfg").read_text(), "defaults.cfg")


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {s!r}")


def _unit(s) -> float:
    v = float(s)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{s} is not in [0, 1]")
    return v


# ---------------------------------------------------------------------------
# files


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class Run:
    """Collects inputs, outputs and stage timings for the manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.stages: dict[str, float] = {}
        self.stage = "setup"
        self.extra: dict = {}

    def read(self, path) -> str:
        text = read_text(path)
        self.inputs[str(path)] = hashlib.sha256(text.encode()).hexdigest()
        return text

    def write(self, path, text: str) -> None:
        atomic_write(path, text)
        self.outputs[str(path)] = sha256(path)

    def out(self, name: str, flag: Optional[str]) -> Path:
        return Path(flag) if flag else Path(self.args.run_dir) / name

    @contextmanager
    def timed(self, stage: str):
        self.stage = stage
        t0 = time.perf_counter()
        yield
        self.stages[stage] = round(time.perf_counter() - t0, 6)

    def manifest(self) -> None:
        cfg = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "config", "command")}
        data = {
            "tool": "amdn",
            "version": __version__,
            "command": self.args.command,
            "config": cfg,
            "seeds": {"seed": getattr(self.args, "seed", None)},
            "inputs": self.inputs,
            "outputs": self.outputs,
            "stages": self.stages,
            **self.extra,
        }
        path = Path(self.args.manifest) if self.args.manifest else Path(self.args.run_dir) / "manifest.json"
        atomic_write(path, dump_json(data))


# ---------------------------------------------------------------------------
# shared option groups


def _add_common(p):
    p.add_argument("--config", help="key = value file (or a manifest.json) supplying flag values")
    p.add_argument("--run-dir", default=".", help="directory for default artifact names and manifest.json")
    p.add_argument("--manifest", help="manifest path (default RUN_DIR/manifest.json)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _add_forge(p):
    g = p.add_argument_group("corpus generation")
    g.add_argument("--problems", help="directory of PDDL problem files used round-robin")
    g.add_argument("--num-problems", type=int, help="draw this many random blocks problems (blocks domain only)")
    g.add_argument("--traces", type=int, help="number of traces")
    g.add_argument("--disorder", type=_unit, help="disorder prior p; a pair at distance d swaps with p/d")
    g.add_argument("--noise", type=_unit, help="noise rate: fraction removed, then fraction replaced")
    g.add_argument("--obs-rate", type=_unit, help="probability that a proposition is observed")
    g.add_argument("--horizon", type=int, help="largest set distance considered for swaps")
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--plan-budget", type=int, help="planner expansion budget per problem")
    g.add_argument("--min-blocks", type=int, help="smallest random blocks problem")
    g.add_argument("--max-blocks", type=int, help="largest random blocks problem")


def _add_compile(p):
    g = p.add_argument_group("compilation")
    g.add_argument("--wmax", type=int, help="maximal soft weight w_max")
    g.add_argument("--delta", type=float, help="occurrence threshold for NC1/NC3 (lifted counts)")
    g.add_argument("--prior-scale", type=float, help="multiplier on the disorder prior before weighting")
    g.add_argument("--aggregate", choices=("max", "mean"), help="how to combine priors over a preceding set")
    g.add_argument("--support", type=_unit, help="minimum fraction of instances for NC1/NC3")
    g.add_argument("--evidence-rate", type=float, help="per-instance state-evidence weight as a fraction of w_max (0 = off)")
    g.add_argument("--evidence-threshold", type=_unit, help="hit rate above which state evidence favours a slot")
    g.add_argument("--parsimony", type=_bool, help="break ties toward fewer true variables")
    g.add_argument("--observed-only", type=_bool, help="expand DC/PC only over observed propositions")
    g.add_argument("--cap-merged", type=_bool, help="clip merged soft weights to w_max - 1")


def _add_solver(p, with_seed=True):
    g = p.add_argument_group("solving")
    g.add_argument("--solver", choices=METHODS, help="MaxSAT backend")
    g.add_argument("--time-budget", type=float, help="seconds for exact / integer-program search")
    g.add_argument("--max-flips", type=int, help="local search flips per restart")
    g.add_argument("--restarts", type=int, help="local search restarts")
    g.add_argument("--sls-noise", type=_unit, help="local search random-walk probability")
    g.add_argument("--patience", type=int, help="end a restart after this many flips without improvement (0 = never)")
    if with_seed:
        g.add_argument("--seed", type=int, help="solver seed")


def compile_config(a) -> CompileConfig:
    return CompileConfig(
        w_max=a.wmax,
        delta=a.delta,
        prior_scale=a.prior_scale,
        aggregate=a.aggregate,
        support=a.support,
        evidence_rate=a.evidence_rate,
        evidence_threshold=a.evidence_threshold,
        parsimony=a.parsimony,
        observed_only=a.observed_only,
        cap_merged=a.cap_merged,
    )


def sls_params(a) -> SlsParams:
    return SlsParams(a.max_flips, a.restarts, a.sls_noise, a.patience or None)


def learn_config(a) -> LearnConfig:
    return LearnConfig(compile_config(a), a.solver, a.seed, a.time_budget, sls_params(a))


def corruption_config(a, **override) -> CorruptionConfig:
    kw = dict(disorder_prior=a.disorder, noise_rate=a.noise, observation_rate=a.obs_rate, seed=a.seed, horizon=a.horizon)
    kw.update(override)
    return CorruptionConfig(**kw)


# ---------------------------------------------------------------------------
# subcommands


def _load_problems(run: Run, a, domain):
    if a.problems:
        d = Path(a.problems)
        if not d.is_dir():
            raise UsageError(f"{d} is not a directory")
        return [parse_problem(run.read(p), domain) for p in sorted(d.glob("*.pddl"))] or None
    if a.num_problems:
        if not {"on", "ontable", "clear"} <= set(domain.predicates):
            raise UsageError("--num-problems draws blocks problems; give --problems for other domains")
        rng = derived_rng(a.seed, 5)
        return [
            random_blocks_problem(domain, int(rng.integers(a.min_blocks, a.max_blocks + 1)), rng, name=f"p{i}")
            for i in range(a.num_problems)
        ]
    if not {"on", "ontable", "clear"} <= set(domain.predicates):
        raise UsageError("give --problems (or use the blocks domain)")
    return None


def _forge(a, domain, problems, **override):
    return forge_corpus(
        domain,
        override.pop("traces", a.traces),
        corruption_config(a, **override),
        problems=problems,
        n_blocks=(a.min_blocks, a.max_blocks),
        budget=a.plan_budget,
    )


def cmd_gen(run: Run, a) -> None:
    with run.timed("parse"):
        domain = parse_domain(run.read(a.domain))
        problems = _load_problems(run, a, domain)
    with run.timed("forge"):
        result = _forge(a, domain, problems)
    with run.timed("write"):
        run.write(run.out("traces.sexp", a.out), write_traces(result.traces))
        run.write(run.out("swaps.json", a.log), dump_json([s.to_json() for s in result.swaps]))
    run.extra["plan_lengths"] = result.plan_lengths


def _compile(run: Run, a):
    with run.timed("parse"):
        domain = parse_domain(run.read(a.domain)).skeleton()
        traces = read_traces(run.read(a.traces), domain)
    with run.timed("compile"):
        theory = compile_theory(domain, traces, compile_config(a))
    return domain, traces, theory


def cmd_compile(run: Run, a) -> None:
    _, _, theory = _compile(run, a)
    with run.timed("write"):
        run.write(run.out("theory.wcnf", a.out), write_wcnf(theory.wcnf))
        run.write(run.out("varmap.json", a.map), theory.catalog.to_json(theory.lowered.aux))


def cmd_solve(run: Run, a) -> None:
    with run.timed("parse"):
        inst = read_wcnf(run.read(a.wcnf))
    with run.timed("solve"):
        sol = solve(inst, a.solver, seed=a.seed, time_budget=a.time_budget, sls=sls_params(a))
        sol.check(inst)
    with run.timed("write"):
        run.write(run.out("model.txt", a.out), write_model(sol))
    run.extra["solution"] = {"cost": sol.cost, "optimal": sol.optimal}
    print(f"cost {sol.cost}{' (optimal)' if sol.optimal else ''}")


def cmd_learn(run: Run, a) -> None:
    if a.import_model:
        domain, traces, theory = _compile(run, a)
        with run.timed("decode"):
            values = read_model(run.read(a.import_model), theory.wcnf.num_vars)
            learned = decode(values, theory.catalog, domain)
            cost, ok = theory.wcnf.evaluate(values)
        report = {
            "traces": len(traces),
            "imported_model": True,
            "families": family_weights(theory, values),
            "solver": {"method": "import", "cost": cost, "hard_ok": ok},
        }
    elif a.export_only:
        _, _, theory = _compile(run, a)
        with run.timed("write"):
            run.write(run.out("theory.wcnf", a.wcnf_out), write_wcnf(theory.wcnf))
            run.write(run.out("varmap.json", a.map), theory.catalog.to_json(theory.lowered.aux))
        return
    else:
        with run.timed("parse"):
            domain = parse_domain(run.read(a.domain)).skeleton()
            traces = read_traces(run.read(a.traces), domain)
        run.stage = "learn"
        res = learn(domain, traces, learn_config(a))
        run.stages.update({k: round(v, 6) for k, v in res.timings.items()})
        learned, report = res.domain, res.report
    with run.timed("write"):
        run.write(run.out("learned.pddl", a.out), emit_domain(learned))
        run.write(run.out("report.json", a.report), dump_json(report))


def cmd_eval(run: Run, a) -> None:
    with run.timed("parse"):
        truth = parse_domain(run.read(a.truth))
        learned = parse_domain(run.read(a.learned))
    with run.timed("eval"):
        scores = err_rates(learned, truth)
    with run.timed("write"):
        run.write(run.out("metrics.json", a.out), dump_json(scores.to_json()))
    print(f"acc {scores.acc:.4f}")


def _parse_vary(a, defaults: dict) -> tuple[str, list]:
    if not a.vary:
        raise UsageError("--vary AXIS[=v1,v2,...] is required")
    axes = {}
    for spec in a.vary:
        name, _, values = spec.partition("=")
        name = name.strip().replace("-", "_")
        if name not in AXES:
            raise UsageError(f"cannot vary {name!r}; choose from {', '.join(AXES)}")
        values = values or getattr(a, f"sweep_{name}")
        conv = int if name == "traces" else float
        try:
            axes[name] = [conv(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad value list for {name}: {values}") from None
    if len(axes) > 1:
        raise MixedVariation(f"an experiment varies one parameter; got {sorted(axes)}")
    (name, values), = axes.items()
    if not values:
        raise UsageError(f"no values for {name}")
    return name, values


_AXIS_ARG = {"traces": "traces", "obs_rate": "observation_rate", "disorder": "disorder_prior", "noise": "noise_rate"}


def cmd_experiment(run: Run, a) -> None:
    if a.repeats is None or a.repeats < 1:
        raise EmptyInput("repeats must be at least 1")
    axis, values = _parse_vary(a, {})
    with run.timed("parse"):
        truth = parse_domain(run.read(a.domain))
        problems = _load_problems(run, a, truth)
    base = {"traces": a.traces, "obs_rate": a.obs_rate, "disorder": a.disorder, "noise": a.noise}
    runs, records = [], []
    with run.timed("cells"):
        for v in values:
            for rep in range(a.repeats):
                cell = dict(base, **{axis: v})
                seed = a.seed + rep
                rec = {**cell, "repeat": rep, "seed": seed}
                try:
                    override = {_AXIS_ARG[k]: cell[k] for k in ("obs_rate", "disorder", "noise")}
                    corpus = _forge(a, truth, problems, traces=cell["traces"], seed=seed, **override)
                    cfg = learn_config(a)
                    res = learn(truth, corpus.traces, LearnConfig(cfg.compile, cfg.solver, seed, cfg.time_budget, cfg.sls))
                    rec["acc"] = err_rates(res.domain, truth).acc
                    runs.append((cell, rec["acc"]))
                except AmdnError as e:
                    rec["error"] = f"{type(e).__name__}: {e}"
                    log.warning("cell %s=%s repeat %d failed: %s", axis, v, rep, e)
                records.append(rec)
                log.info("%s=%s repeat %d acc %s", axis, v, rep, rec.get("acc"))
    key, rows = trend_report(runs) if runs else (axis, [])
    table = [{"value": r.value, "n": r.n, "mean": r.mean, "stdev": r.stdev} for r in rows]
    with run.timed("write"):
        run.write(run.out("trends.json", a.out), dump_json({"axis": axis, "rows": table, "runs": records}))
        if a.csv:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow([axis, "n", "mean_acc", "stdev_acc"])
            for r in table:
                w.writerow([r["value"], r["n"], f"{r['mean']:.6f}", f"{r['stdev']:.6f}"])
            run.write(a.csv, buf.getvalue())
    for r in table:
        print(f"{axis}={r['value']}: acc {r['mean']:.4f} +- {r['stdev']:.4f} (n={r['n']})")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amdn", description="Learn STRIPS action models from disordered, noisy plan traces.")
    parser.add_argument("--version", action="version", version=f"amdn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="generate a corrupted trace corpus from a ground-truth domain")
    p.add_argument("--domain", required=True, help="ground-truth domain (PDDL)")
    _add_forge(p)
    p.add_argument("--out", help="trace file (default RUN_DIR/traces.sexp)")
    p.add_argument("--log", help="swap log (default RUN_DIR/swaps.json)")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    for name, help_ in (("compile", "compile traces to a WCNF theory"), ("export-wcnf", "same as compile")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--domain", required=True, help="domain skeleton (bodies are ignored)")
        p.add_argument("--traces", required=True, help="trace file")
        _add_compile(p)
        p.add_argument("--out", help="WCNF output (default RUN_DIR/theory.wcnf)")
        p.add_argument("--map", help="variable map (default RUN_DIR/varmap.json)")
        _add_common(p)
        p.set_defaults(func=cmd_compile)

    p = sub.add_parser("solve", help="solve a WCNF instance")
    p.add_argument("--wcnf", required=True, help="DIMACS WCNF input")
    _add_solver(p)
    p.add_argument("--out", help="model file (default RUN_DIR/model.txt)")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("learn", help="learn action models from traces")
    p.add_argument("--domain-skeleton", "--domain", dest="domain", required=True, help="domain skeleton (PDDL)")
    p.add_argument("--traces", required=True, help="trace file")
    _add_compile(p)
    _add_solver(p)
    p.add_argument("--out", help="learned domain (default RUN_DIR/learned.pddl)")
    p.add_argument("--report", help="report (default RUN_DIR/report.json)")
    p.add_argument("--export-only", action="store_true", help="write the WCNF and variable map, then stop")
    p.add_argument("--wcnf-out", help="WCNF path for --export-only (default RUN_DIR/theory.wcnf)")
    p.add_argument("--map", help="variable map path for --export-only (default RUN_DIR/varmap.json)")
    p.add_argument("--import-model", help="decode this model file instead of solving")
    _add_common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="score a learned domain against the truth")
    p.add_argument("--learned", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="metrics (default RUN_DIR/metrics.json)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="generate, learn and score across one varied parameter")
    p.add_argument("--domain", required=True, help="ground-truth domain (PDDL)")
    p.add_argument("--vary", action="append", help="AXIS or AXIS=v1,v2,... with AXIS in traces, obs_rate, disorder, noise")
    p.add_argument("--repeats", type=int, help="repetitions per cell")
    for axis in AXES:
        p.add_argument(f"--sweep-{axis.replace('_', '-')}", help=f"default value list for --vary {axis}")
    _add_forge(p)
    _add_compile(p)
    _add_solver(p, with_seed=False)
    p.add_argument("--out", help="trend table (default RUN_DIR/trends.json)")
    p.add_argument("--csv", help="also write the table as CSV")
    _add_common(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def _defer_required(parser: argparse.ArgumentParser) -> None:
    """Required flags may come from a config file, so check them after parsing."""
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp._deferred = [a for a in sp._actions if a.required]
            for a in sp._deferred:
                a.required = False


def _check_required(parser: argparse.ArgumentParser, args) -> None:
    sp = parser._subparsers._group_actions[0].choices[args.command]
    missing = [a.option_strings[0] for a in sp._deferred if getattr(args, a.dest) is None]
    if missing:
        sp.error(f"the following arguments are required: {', '.join(missing)}")


def _apply_defaults(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    """Set string defaults on every subparser that has the option; argparse applies ``type``."""
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            known = {a.dest: a for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in values.items() if k in known})


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _defer_required(parser)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        _apply_defaults(parser, builtin_defaults())
        if known.config:
            _apply_defaults(parser, load_config(known.config))
    except UsageError as e:
        print(f"amdn: {e}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    _check_required(parser, args)
    sp = parser._subparsers._group_actions[0].choices[args.command]
    for action in sp._actions:
        v = getattr(args, action.dest, None)
        if isinstance(action, argparse._StoreTrueAction) and isinstance(v, str):
            try:
                setattr(args, action.dest, _bool(v))
            except argparse.ArgumentTypeError as e:
                sp.error(f"{action.option_strings[0]}: {e}")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    run = Run(args)
    try:
        args.func(run, args)
        run.manifest()
    except UsageError as e:
        print(f"amdn {args.command}: {e}", file=sys.stderr)
        return 2
    except (AmdnError, ValueError) as e:
        print(f"amdn {args.command}: {run.stage}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
