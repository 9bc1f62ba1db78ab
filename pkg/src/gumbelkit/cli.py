"""Command-line entry point: ``gumbelkit <subcommand> [options]``.

Settings come from built-in defaults, then an optional JSON file given with
``--config``, then explicit flags; later sources win. Every output is a pure
function of the resolved settings, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .distributions import (
    CategoricalParams,
    DomainError,
    GumbelParams,
    GumbelSoftmaxParams,
)
from .estimators import ESTIMATORS, Objective
from .relax import scaled_noise_relaxation, st_gs_sample
from .rng import RngState, fork_stream
from .sampling import gumbel_max_scaled, perturb, standard_gumbels
from .suites import SUITES, random_categorical, run_suite
from .topdown import top_down_construction
from .wor import gumbel_topk

_U64 = 2**64

DEFAULTS = {
    "seed": 0,
    "logits": None,
    "temperature": 1.0,
    "noise_scale": None,
    "gs_lambda": None,
    "n_draws": 1000,
    "output_path": None,
    "format": None,
    "k": 2,
    "condition_index": None,
    "condition_max": None,
    "partition": "median",
    "hard": False,
    "estimator": "reinforce",
    "payoff": None,
    "payoff_kind": "linear",
    "n_samples": 10_000,
}

_DEFAULT_FORMAT = {
    "sample": "csv",
    "topk": "csv",
    "relax": "csv",
    "experiment": "csv",
    "topdown": "json",
    "estimate": "json",
    "verify": "json",
}

# classes in the default experiment distribution
_EXPERIMENT_CLASSES = 5
_EXPERIMENT_NOISE_SCALES = [0.3, 1.0, 3.0]
_EXPERIMENT_LAMBDAS = [0.05, 1.0, 5.0]


class ConfigError(ValueError):
    def __init__(self, name: str, message: str):
        super().__init__(f"invalid config field {name!r}: {message}")
        self.field = name


@dataclass
class ExperimentConfig:
    seed: int = 0
    logits: list | None = None
    temperature: float = 1.0
    noise_scale: float | list = 1.0
    gs_lambda: float | list = 1.0
    n_draws: int = 1000
    output_path: str | None = None
    format: str | None = None
    options: dict = field(default_factory=dict)

    def categorical(self) -> CategoricalParams:
        if self.logits is None:
            raise ConfigError("logits", "required for this subcommand")
        return CategoricalParams(self.logits, self.temperature)


# ---------------------------------------------------------------- parsing


def _parse_float(name, value):
    if isinstance(value, bool):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if value is None:
        return -math.inf
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {value!r}") from None


def _parse_vector(name, value):
    if value is None:
        return None
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError(name, f"expected a list or comma-separated string, got {value!r}")
    if not parts:
        raise ConfigError(name, "must not be empty")
    out = [_parse_float(name, p) for p in parts]
    if any(math.isnan(v) for v in out):
        raise ConfigError(name, "NaN is not allowed")
    return out


def _int(name, value):
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, str):
        try:
            value = int(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return value


def _positive(name, value, integer=False):
    value = _int(name, value) if integer else _parse_float(name, value)
    if not value > 0 or not math.isfinite(value):
        raise ConfigError(name, f"must be positive, got {value!r}")
    return value


def _scalar_or_list(name, value):
    values = _parse_vector(name, value) if isinstance(value, (str, list, tuple)) else [value]
    values = [_positive(name, v) for v in values]
    return values if len(values) > 1 or isinstance(value, (list, tuple)) else values[0]


def resolve_config(command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    """Merge defaults, file and flags; validate every field."""
    merged = dict(DEFAULTS)
    for key in file_values:
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown field")
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})

    seed = _int("seed", merged["seed"])
    if not 0 <= seed < _U64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    fmt = merged["format"] or _DEFAULT_FORMAT[command]
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"expected csv or json, got {fmt!r}")

    logits = _parse_vector("logits", merged["logits"])
    if logits is not None:
        if any(v == math.inf for v in logits):
            raise ConfigError("logits", "+inf is not allowed")
        if all(v == -math.inf for v in logits):
            raise ConfigError("logits", "at least one class needs positive mass")

    opts = {
        "k": _positive("k", merged["k"], integer=True),
        "partition": merged["partition"],
        "hard": bool(merged["hard"]),
        "estimator": merged["estimator"],
        "payoff": _parse_vector("payoff", merged["payoff"]),
        "payoff_kind": merged["payoff_kind"],
        "n_samples": _positive("n_samples", merged["n_samples"], integer=True),
        "condition_index": None,
        "condition_max": None,
    }
    if opts["partition"] not in ("median", "random"):
        raise ConfigError("partition", f"expected median or random, got {opts['partition']!r}")
    if opts["estimator"] not in ESTIMATORS:
        raise ConfigError("estimator", f"expected one of {sorted(ESTIMATORS)}")
    if opts["payoff_kind"] not in ("linear", "quadratic"):
        raise ConfigError("payoff_kind", "expected linear or quadratic")
    if merged["condition_index"] is not None:
        opts["condition_index"] = _int("condition_index", merged["condition_index"])
    if merged["condition_max"] is not None:
        opts["condition_max"] = _parse_float("condition_max", merged["condition_max"])
        if not math.isfinite(opts["condition_max"]):
            raise ConfigError("condition_max", "must be finite")

    sweep = command == "experiment"
    if merged["noise_scale"] is None:
        merged["noise_scale"] = list(_EXPERIMENT_NOISE_SCALES) if sweep else 1.0
    if merged["gs_lambda"] is None:
        merged["gs_lambda"] = list(_EXPERIMENT_LAMBDAS) if sweep else 1.0
    return ExperimentConfig(
        seed=seed,
        logits=logits,
        temperature=_positive("temperature", merged["temperature"]),
        noise_scale=_scalar_or_list("noise_scale", merged["noise_scale"]),
        gs_lambda=_scalar_or_list("gs_lambda", merged["gs_lambda"]),
        n_draws=_positive("n_draws", merged["n_draws"], integer=True),
        output_path=merged["output_path"],
        format=fmt,
        options=opts,
    )


def _scalar(name, value):
    if isinstance(value, list):
        raise ConfigError(name, "this subcommand takes a single value")
    return value


# ---------------------------------------------------------------- output


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no infinities; -inf logits already use null
        return value if math.isfinite(value) else None
    return value


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n"


def _records_to(fmt, header, rows) -> str:
    if fmt == "csv":
        return _csv_text(header, rows)
    return _json_text([dict(zip(header, r)) for r in rows])


# ---------------------------------------------------------------- commands


def cmd_sample(cfg: ExperimentConfig) -> tuple[str, int]:
    c = cfg.categorical()
    beta = _scalar("noise_scale", cfg.noise_scale)
    draw, _ = gumbel_max_scaled(c, GumbelParams(0.0, beta), RngState(cfg.seed), size=cfg.n_draws)
    rows = [(i, int(w), float(m)) for i, (w, m) in enumerate(zip(draw.index, draw.max_value))]
    return _records_to(cfg.format, ["draw_id", "index", "max_value"], rows), 0


def cmd_topk(cfg: ExperimentConfig) -> tuple[str, int]:
    c = cfg.categorical()
    k = cfg.options["k"]
    if k > c.n:
        raise ConfigError("k", f"must be at most the number of classes ({c.n})")
    pl, _ = perturb(c, RngState(cfg.seed), size=cfg.n_draws)
    res = gumbel_topk(pl, k)
    rows = [
        (d, r, int(res.indices[d, r]), float(res.perturbed_values[d, r]))
        for d in range(cfg.n_draws)
        for r in range(k)
    ]
    return _records_to(cfg.format, ["draw_id", "rank", "index", "perturbed_value"], rows), 0


def cmd_topdown(cfg: ExperimentConfig) -> tuple[str, int]:
    c = cfg.categorical()
    opts = cfg.options
    if opts["condition_index"] is not None and not 0 <= opts["condition_index"] < c.n:
        raise ConfigError("condition_index", f"must be in 0..{c.n - 1}")
    nodes = list(
        top_down_construction(
            c,
            RngState(cfg.seed),
            opts["partition"],
            root_index=opts["condition_index"],
            root_max=opts["condition_max"],
        )
    )
    if cfg.format == "json":
        return _json_text([n.to_dict() for n in nodes]), 0
    rows = [
        (i, " ".join(str(d) for d in n.domain), n.index, float(n.max_value))
        for i, n in enumerate(nodes)
    ]
    return _csv_text(["node_id", "domain", "omega", "m"], rows), 0


def cmd_relax(cfg: ExperimentConfig) -> tuple[str, int]:
    c = cfg.categorical()
    lam = _scalar("gs_lambda", cfg.gs_lambda)
    hard, soft, _ = st_gs_sample(GumbelSoftmaxParams(c, lam), RngState(cfg.seed), size=cfg.n_draws)
    weights = [f"w{i}" for i in range(c.n)]
    if cfg.options["hard"]:
        header = ["draw_id", "index"] + weights
        rows = [
            (d, int(np.argmax(hard[d])), *map(float, soft.weights[d])) for d in range(cfg.n_draws)
        ]
    else:
        header = ["draw_id"] + weights
        rows = [(d, *map(float, soft.weights[d])) for d in range(cfg.n_draws)]
    return _records_to(cfg.format, header, rows), 0


def cmd_estimate(cfg: ExperimentConfig) -> tuple[str, int]:
    c = cfg.categorical()
    opts = cfg.options
    payoff = opts["payoff"] if opts["payoff"] is not None else list(range(c.n))
    if len(payoff) != c.n:
        raise ConfigError("payoff", f"needs {c.n} entries, got {len(payoff)}")
    if not all(math.isfinite(v) for v in payoff):
        raise ConfigError("payoff", "entries must be finite")
    obj = Objective(payoff, opts["payoff_kind"])
    name = opts["estimator"]
    rng = RngState(cfg.seed)
    if name == "reinforce":
        report, _ = ESTIMATORS[name](c, obj, opts["n_samples"], rng)
    else:
        lam = _scalar("gs_lambda", cfg.gs_lambda)
        report, _ = ESTIMATORS[name](GumbelSoftmaxParams(c, lam), obj, opts["n_samples"], rng)
    if cfg.format == "json":
        return _json_text(report.to_dict()), 0
    rows = [
        (j, float(report.grad_mean[j]), float(report.grad_std_err[j]), float(report.oracle_grad[j]))
        for j in range(c.n)
    ]
    return _csv_text(["coord", "grad_mean", "grad_std_err", "oracle_grad"], rows), 0


def _as_list(value):
    return value if isinstance(value, list) else [value]


def experiment_rows(cfg: ExperimentConfig) -> list[tuple]:
    """Rows ``(panel, noise_scale, lam, class, value)`` for the experiment."""
    root = RngState(cfg.seed)
    if cfg.logits is None:
        c, _ = random_categorical(fork_stream(root, 1), _EXPERIMENT_CLASSES)
        c = c.with_temperature(cfg.temperature)
    else:
        c = cfg.categorical()
    betas = _as_list(cfg.noise_scale)
    lams = _as_list(cfg.gs_lambda)
    # one noise matrix shared by every panel
    g, _ = standard_gumbels(root, (cfg.n_draws, c.n))
    rows = [("target", "", "", i, float(p)) for i, p in enumerate(c.probs)]
    for beta in betas:
        idx = np.argmax(c.log_theta + beta * g, axis=1)
        freq = np.bincount(idx, minlength=c.n) / cfg.n_draws
        rows += [("gumbel_max", float(beta), "", i, float(f)) for i, f in enumerate(freq)]
    for beta in betas:
        for lam in lams:
            mean = scaled_noise_relaxation(c.log_theta, g, beta, lam).mean(axis=0)
            rows += [("gs_mean", float(beta), float(lam), i, float(v)) for i, v in enumerate(mean)]
    return rows


def cmd_experiment(cfg: ExperimentConfig) -> tuple[str, int]:
    rows = experiment_rows(cfg)
    return _records_to(cfg.format, ["panel", "noise_scale", "lam", "class", "value"], rows), 0


def cmd_verify(cfg: ExperimentConfig, suite: str) -> tuple[str, int]:
    checks = run_suite(suite, cfg.seed)
    passed = all(ch.passed for ch in checks)
    width = max(len(ch.name) for ch in checks)
    for ch in checks:
        p = "-" if ch.p_value is None else f"{ch.p_value:.4g}"
        print(
            f"{'PASS' if ch.passed else 'FAIL'}  {ch.suite:<14} {ch.name:<{width}}  "
            f"stat={ch.statistic:.6g}  p={p}",
            file=sys.stderr,
        )
    if cfg.format == "json":
        text = _json_text(
            {"suite": suite, "seed": cfg.seed, "passed": passed, "checks": [ch.to_dict() for ch in checks]}
        )
    else:
        text = _csv_text(
            ["suite", "check", "passed", "statistic", "p_value"],
            [
                (ch.suite, ch.name, ch.passed, float(ch.statistic), "" if ch.p_value is None else float(ch.p_value))
                for ch in checks
            ],
        )
    return text, 0 if passed else 1


# ---------------------------------------------------------------- argparse

_SCHEMAS = {
    "sample": "CSV columns: draw_id,index,max_value (index is 0-based).\n"
    "JSON: array of objects with the same keys.",
    "topk": "CSV columns: draw_id,rank,index,perturbed_value; one row per (draw, rank),\n"
    "rank 0 is the largest perturbed logit. JSON: array of objects with the same keys.",
    "topdown": "JSON (default): array of nodes {\"domain\": [...], \"omega\": int, \"m\": float},\n"
    "root first, then breadth-first. m is null for a zero-mass domain.\n"
    "CSV columns: node_id,domain,omega,m with domain space-separated.",
    "relax": "CSV columns: draw_id,w0,...,w{N-1}; with --hard: draw_id,index,w0,...,w{N-1}\n"
    "where index is the straight-through hard sample. JSON: array of objects.",
    "estimate": "JSON (default): {grad_mean, grad_std_err, n_samples, oracle_grad,\n"
    "max_abs_bias, estimator, lam, grad_var}; oracle_grad is the exact gradient.\n"
    "CSV columns: coord,grad_mean,grad_std_err,oracle_grad.",
    "experiment": "CSV columns: panel,noise_scale,lam,class,value. panel is one of\n"
    "target (the categorical probabilities), gumbel_max (index frequencies per\n"
    "noise scale) or gs_mean (mean relaxed sample per noise scale and lam).\n"
    "Empty cells mean the parameter does not apply. Defaults: noise scales\n"
    "0.3,1,3; lam 0.05,1,5; a seeded random 5-class distribution.",
    "verify": "JSON (default): {suite, seed, passed, checks: [{suite, check, passed,\n"
    "statistic, p_value}]}. A readable table goes to stderr. Exit status 0 iff\n"
    "every check passes. CSV columns: suite,check,passed,statistic,p_value.",
}


def _common_parser() -> argparse.ArgumentParser:
    # SUPPRESS so a subcommand's unset flag cannot mask one given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("common options")
    g.add_argument("--seed", type=int, help="unsigned 64-bit seed (default 0)")
    g.add_argument("--config", help="JSON file of settings; flags override it")
    g.add_argument("--out", dest="output_path", help="write output here instead of stdout")
    g.add_argument("--format", choices=["csv", "json"], help="output format")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="gumbelkit",
        description="Gumbel-based sampling and gradient estimation experiments.",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            epilog="Output schema:\n" + _SCHEMAS[name],
            parents=[common],
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    def logits(p, required_note=""):
        p.add_argument("--logits", help="comma-separated logits, -inf allowed" + required_note)
        p.add_argument("--temperature", type=float, help="Boltzmann temperature T (default 1)")

    p = add("sample", "Draw categorical samples with the Gumbel-max trick.")
    logits(p)
    p.add_argument("--noise-scale", dest="noise_scale", type=float, help="Gumbel noise scale (default 1)")
    p.add_argument("--n-draws", dest="n_draws", type=int, help="number of draws (default 1000)")

    p = add("topk", "Sample k classes without replacement with Gumbel-top-k.")
    logits(p)
    p.add_argument("--k", type=int, help="sample size (default 2)")
    p.add_argument("--n-draws", dest="n_draws", type=int, help="number of draws (default 1000)")

    p = add("topdown", "Run one top-down construction of a perturbation.")
    logits(p)
    p.add_argument("--condition-index", dest="condition_index", type=int, help="fix the root argmax")
    p.add_argument("--condition-max", dest="condition_max", type=float, help="fix the root max")
    p.add_argument("--partition", choices=["median", "random"], help="domain split rule (default median)")

    p = add("relax", "Draw Gumbel-Softmax relaxed samples.")
    logits(p)
    p.add_argument("--lambda", dest="gs_lambda", type=float, help="relaxation temperature (default 1)")
    p.add_argument("--n-draws", dest="n_draws", type=int, help="number of draws (default 1000)")
    p.add_argument("--hard", action="store_true", default=None, help="also emit the straight-through hard index")

    p = add("estimate", "Estimate d/d(logits) of E[f(X)] and compare with the exact gradient.")
    logits(p)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), help="default reinforce")
    p.add_argument("--lambda", dest="gs_lambda", type=float, help="relaxation temperature (default 1)")
    p.add_argument("--payoff", help="comma-separated payoff per class (default 0,1,...,N-1)")
    p.add_argument("--payoff-kind", dest="payoff_kind", choices=["linear", "quadratic"])
    p.add_argument("--n-samples", dest="n_samples", type=int, help="default 10000")

    p = add("experiment", "Index histograms and mean relaxed samples over noise scales and lam.")
    p.add_argument("--logits", help="comma-separated logits (default: seeded random, 5 classes)")
    p.add_argument("--temperature", type=float, help="Boltzmann temperature T (default 1)")
    p.add_argument("--noise-scale", dest="noise_scale", help="comma-separated noise scales")
    p.add_argument("--lambda", dest="gs_lambda", help="comma-separated relaxation temperatures")
    p.add_argument("--n-draws", dest="n_draws", type=int, help="number of draws (default 1000)")

    p = add("verify", "Run a seeded invariant suite.")
    p.add_argument("suite", help="one of: " + ", ".join([*SUITES, "all"]))
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", str(exc)) from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return data


_COMMANDS = {
    "sample": cmd_sample,
    "topk": cmd_topk,
    "topdown": cmd_topdown,
    "relax": cmd_relax,
    "estimate": cmd_estimate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "suite")}
    try:
        cfg = resolve_config(args.command, _load_config(getattr(args, "config", None)), flags)
        if args.command == "verify":
            if args.suite != "all" and args.suite not in SUITES:
                print(f"error: unknown suite {args.suite!r}", file=sys.stderr)
                return 2
            text, code = cmd_verify(cfg, args.suite)
        else:
            text, code = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
