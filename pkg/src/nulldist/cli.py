"""Scenario runner: reproducible experiments from flat key=value configs.

    nulldist estimate|encode|witness|probe|catalog-list --config FILE
             [--check] [--threads N] [--out PREFIX]

Configs are INI-style: [section] headers over flat key = value lines (the
exact grammar is documented in the README).  Unknown sections or keys are
rejected.  NULLDIST_SEED in the environment overrides the config seed.

Exit codes: 0 success, 2 validation error, 3 numerical failure
(Unreachable / TooLarge), 4 property violation detected in --check mode.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import estimates as est
from . import models as md
from . import paths as pth
from . import probes as pb
from . import relations as rel
from . import reports as rp
from . import witness as wt
from .errors import ConfigError, NullDistError, TooLarge, Unreachable

COMMANDS = ("estimate", "encode", "witness", "probe", "catalog-list")

_SCHEMA = {
    "scenario": {"command", "seed"},
    "model": {"name", "n"},
    "points": {"p", "q"},
    "pairs": None,                      # any pairN keys
    "lattice": {"delta0", "levels", "conv_tol", "stencil", "region",
                "region_pad", "exact_endpoints"},
    "witness": {"kind", "k_values", "n_values", "s", "k", "t_p", "x_p",
                "t_q", "x_q", "y_p", "y_q", "p", "q"},
    "probe": {"kind", "base", "velocity", "horizon", "eps", "h_scale",
              "region", "n_pairs", "n_samples", "tau2", "t_values", "n_max"},
    "tolerances": {"rhat_tol"},
    "output": {"prefix"},
}


@dataclass
class ScenarioConfig:
    command: str
    seed: int
    raw_text: str
    model_name: str = ""
    model_params: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    out_prefix: str = "nulldist_report"
    check: bool = False
    threads: int = 1


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(c) for c in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"bad point '{text}'") from exc


def _parse_region(text: str):
    axes = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            axes.append((float(lo), float(hi)))
        except ValueError as exc:
            raise ConfigError(f"bad region axis '{part}'") from exc
    return tuple(axes)


def _parse_floats(text: str):
    return [float(c) for c in text.split(",")]


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"bad boolean '{text}'")


def load_config(path, check: bool = False, threads: int = 1,
                out: str | None = None) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        allowed = _SCHEMA[section]
        for key in parser[section]:
            if allowed is not None and key not in allowed:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            if section == "pairs" and not key.startswith("pair"):
                raise ConfigError(f"keys in [pairs] must start with 'pair'")

    if "scenario" not in parser or "command" not in parser["scenario"]:
        raise ConfigError("missing [scenario] command")
    command = parser["scenario"]["command"].strip()
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'")

    seed = pb.DEFAULT_SEED
    if "seed" in parser["scenario"]:
        seed = int(parser["scenario"]["seed"])
    env_seed = os.environ.get("NULLDIST_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError("NULLDIST_SEED must be an integer") from exc

    cfg = ScenarioConfig(command=command, seed=seed, raw_text=text,
                         check=check, threads=max(1, threads))
    if "model" in parser:
        cfg.model_name = parser["model"].get("name", "").strip()
        if "n" in parser["model"]:
            cfg.model_params["n"] = int(parser["model"]["n"])
    cfg.sections = {s: dict(parser[s]) for s in parser.sections()}
    cfg.out_prefix = out or cfg.sections.get("output", {}).get(
        "prefix", "nulldist_report")
    return cfg


def _model(cfg: ScenarioConfig):
    if not cfg.model_name:
        raise ConfigError("missing [model] name")
    try:
        return md.catalog(cfg.model_name, **cfg.model_params)
    except NullDistError as exc:
        raise ConfigError(str(exc)) from exc


def _lattice_options(cfg: ScenarioConfig) -> est.EstimateOptions:
    sec = cfg.sections.get("lattice", {})
    kwargs = {"threads": cfg.threads}
    if "delta0" in sec:
        kwargs["delta0"] = float(sec["delta0"])
        if kwargs["delta0"] <= 0:
            raise ConfigError("delta0 must be positive")
    if "levels" in sec:
        kwargs["levels"] = int(sec["levels"])
        if kwargs["levels"] < 1:
            raise ConfigError("levels must be >= 1")
    if "conv_tol" in sec:
        kwargs["conv_tol"] = float(sec["conv_tol"])
        if kwargs["conv_tol"] < 0:
            raise ConfigError("conv_tol must be >= 0")
    if "stencil" in sec:
        kwargs["stencil"] = int(sec["stencil"])
    if "region" in sec:
        kwargs["region"] = _parse_region(sec["region"])
    if "region_pad" in sec:
        kwargs["region_pad"] = float(sec["region_pad"])
        if kwargs["region_pad"] <= 0:
            raise ConfigError("region_pad must be positive")
    if "exact_endpoints" in sec:
        kwargs["exact_endpoints"] = _parse_bool(sec["exact_endpoints"])
    try:
        return est.EstimateOptions(**kwargs)
    except NullDistError as exc:
        raise ConfigError(str(exc)) from exc


def _header(cfg: ScenarioConfig) -> dict:
    return {
        "tool": f"nulldist {__version__}",
        "command": cfg.command,
        "config_hash": rp.config_hash(cfg.raw_text),
        "seed": cfg.seed,
    }


def _run_estimate(cfg: ScenarioConfig) -> int:
    model = _model(cfg)
    pts = cfg.sections.get("points", {})
    if "p" not in pts or "q" not in pts:
        raise ConfigError("estimate needs [points] p and q")
    p = _parse_point(pts["p"])
    q = _parse_point(pts["q"])
    opts = _lattice_options(cfg)
    report = est.convergence_report(model, p, q, opts)
    rows = [
        (model.label, tuple(p), tuple(q), level, delta, upper, lower, gap,
         ";".join(report.flags))
        for (level, delta, upper, lower, gap) in report.rows
    ]
    rp.write_report(
        f"{cfg.out_prefix}_estimate.csv", _header(cfg),
        ["model", "p", "q", "level", "delta", "upper", "lower", "gap", "flags"],
        rows,
    )
    if cfg.check:
        uppers = [r[2] for r in report.rows if math.isfinite(r[2])]
        if any(u2 > u1 + 1e-12 for u1, u2 in zip(uppers, uppers[1:])):
            return 4
        if uppers and report.rows and uppers[-1] < report.rows[-1][3] - 1e-9:
            return 4
    return 0


def _run_encode(cfg: ScenarioConfig) -> int:
    model = _model(cfg)
    sec = cfg.sections.get("pairs", {})
    if not sec:
        raise ConfigError("encode needs a [pairs] section")
    pairs = []
    for key in sorted(sec):
        try:
            a, b = sec[key].split(";")
        except ValueError as exc:
            raise ConfigError(f"bad pair '{sec[key]}'") from exc
        pairs.append((_parse_point(a.strip()), _parse_point(b.strip())))
    tol = None
    if "rhat_tol" in cfg.sections.get("tolerances", {}):
        tol = float(cfg.sections["tolerances"]["rhat_tol"])
    opts = rel.EncodingOptions(tol=tol, estimate_opts=_lattice_options(cfg))
    report = rel.encoding_report(model, pairs, opts)
    rows = [
        (v.pair[0], v.pair[1], v.tau_p, v.tau_q, v.j_plus, v.j_source,
         v.r_hat, v.r_hat_gap)
        for v in report.rows
    ]
    rp.write_report(
        f"{cfg.out_prefix}_encode.csv", _header(cfg),
        ["p", "q", "tau_p", "tau_q", "j_plus", "j_source", "r_hat", "gap"],
        rows, footer={"summary": report.summary},
    )
    if cfg.check:
        for v in report.rows:
            if v.j_plus == rel.YES and not v.r_hat:
                return 4  # J+ subset of R+ violated: engine defect
    return 0


def _run_witness(cfg: ScenarioConfig) -> int:
    model = _model(cfg)
    sec = cfg.sections.get("witness", {})
    kind = sec.get("kind", "").strip()
    results = []
    if kind == "counterexK":
        t_p = float(sec.get("t_p", 1.0))
        x_p = float(sec.get("x_p", 1.0))
        t_q = float(sec.get("t_q", -1.0))
        x_q = float(sec.get("x_q", 1.0))
        for k in _parse_floats(sec.get("k_values", "10,100,1000")):
            results.append(wt.counterexK_witness(model, t_p, x_p, t_q, x_q, int(k)))
    elif kind == "counterexsimple":
        y_p = float(sec.get("y_p", 0.0))
        y_q = float(sec.get("y_q", 4.0))
        s = float(sec.get("s", 10.0))
        for k in _parse_floats(sec.get("k_values", "10000")):
            results.append(wt.counterexsimple_witness(model, y_p, y_q, s, int(k)))
    elif kind == "wick2":
        p = _parse_point(sec.get("p", "0,0"))
        q = _parse_point(sec.get("q", "0,1"))
        gamma = np.vstack([p, q])
        for n in _parse_floats(sec.get("n_values", "0,1,2,3,4,5,6")):
            results.append(wt.wick2_deformation(model, gamma, int(n)))
    elif kind == "bounce":
        p = _parse_point(sec.get("p", "0,0"))
        q = _parse_point(sec.get("q", "0,1"))
        for k in _parse_floats(sec.get("k_values", "1,4,16")):
            results.append(wt.minkowski_bounce(model, p, q, int(k)))
    else:
        raise ConfigError(f"unknown witness kind '{kind}'")
    rows = [
        (";".join(f"{k}={rp.fmt(v)}" for k, v in r.params.items()),
         r.null_len, r.paper_bound, r.slack)
        for r in results
    ]
    rp.write_report(
        f"{cfg.out_prefix}_witness.csv", _header(cfg),
        ["params", "null_len", "paper_bound", "slack"], rows,
    )
    if cfg.check and any(r.causal and r.slack < -1e-9 for r in results):
        return 4
    return 0


def _run_probe(cfg: ScenarioConfig) -> int:
    model = _model(cfg)
    sec = cfg.sections.get("probe", {})
    kind = sec.get("kind", "").strip()
    header = _header(cfg)
    out = f"{cfg.out_prefix}_probe.csv"
    if kind == "escape":
        ray = pb.Ray(tuple(_parse_point(sec.get("base", "0,0"))),
                     tuple(_parse_point(sec.get("velocity", "-1,0"))))
        wit = pb.escape_probe(model, ray, int(sec.get("horizon", "16")),
                              float(sec.get("eps", "1e-3")))
        rows = [(i, inc) for i, inc in enumerate(wit.increments)]
        rp.write_report(out, header, ["step", "increment"], rows, footer={
            "tail_sum": wit.tail_sum, "escaped": wit.escaped,
            "verdict": wit.verdict,
        })
    elif kind == "escape_sequence":
        n_max = int(sec.get("n_max", "2000"))
        points = [np.array([0.0, float(n)]) for n in range(n_max + 1)]
        bound = lambda i, j: est.exact_oracle(model, points[i], points[j])
        wit = pb.escape_probe_sequence(model, points,
                                       bound, float(sec.get("eps", "2e-3")))
        rows = [(i, inc) for i, inc in enumerate(wit.increments)]
        rp.write_report(out, header, ["step", "bound"], rows, footer={
            "tail_sum": wit.tail_sum, "escaped": wit.escaped,
            "verdict": wit.verdict,
        })
    elif kind in ("anti_lipschitz", "steepness"):
        h = md.scaled_euclidean(model.dim, float(sec.get("h_scale", "1.0")))
        region = _parse_region(sec["region"]) if "region" in sec else model.sample_box
        if kind == "anti_lipschitz":
            res = pb.anti_lipschitz_scan(model, h, region,
                                         int(sec.get("n_pairs", "1000")),
                                         seed=cfg.seed)
            rows = [(i, r) for i, r in enumerate(res.rows)]
            rp.write_report(out, header, ["pair", "ratio"], rows, footer={
                "inf_ratio": res.value, "argmin": res.argmin,
            })
        else:
            res = pb.steepness_scan(model, h, region,
                                    int(sec.get("n_samples", "1000")),
                                    seed=cfg.seed)
            rp.write_report(out, header, ["quantity", "value"],
                            [("min_slack", res.value)], footer={
                "argmin": res.argmin,
            })
    elif kind == "bilipschitz":
        tau2_name = sec.get("tau2", "").strip()
        if not tau2_name:
            raise ConfigError("bilipschitz probe needs tau2 model name")
        model2 = md.catalog(tau2_name, **cfg.model_params)
        pairs = None
        if "t_values" in sec:
            origin = np.zeros(model.dim)
            pairs = []
            for t in _parse_floats(sec["t_values"]):
                qpt = origin.copy()
                qpt[0] = t
                pairs.append((origin, qpt))
        region = _parse_region(sec["region"]) if "region" in sec else model.sample_box
        lo_r, hi_r, ratios = pb.bilipschitz_scan(
            model, model2, region, int(sec.get("n_pairs", "500")),
            seed=cfg.seed, pairs=pairs)
        rows = [(i, r) for i, r in enumerate(ratios)]
        rp.write_report(out, header, ["pair", "ratio"], rows, footer={
            "min_ratio": lo_r, "max_ratio": hi_r,
        })
    else:
        raise ConfigError(f"unknown probe kind '{kind}'")
    return 0


def _run_catalog_list(cfg: ScenarioConfig) -> int:
    for name in md.CATALOG_NAMES:
        print(name)
    rp.write_report(
        f"{cfg.out_prefix}_catalog.csv", _header(cfg), ["name"],
        [(name,) for name in md.CATALOG_NAMES],
    )
    return 0


def run_scenario(cfg: ScenarioConfig) -> int:
    runners = {
        "estimate": _run_estimate,
        "encode": _run_encode,
        "witness": _run_witness,
        "probe": _run_probe,
        "catalog-list": _run_catalog_list,
    }
    return runners[cfg.command](cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nulldist",
        description="null-distance engine scenario runner",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=False,
                        help="flat key=value config file")
    parser.add_argument("--check", action="store_true",
                        help="verify engine invariants; exit 4 on violation")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=None, help="output path prefix")
    args = parser.parse_args(argv)

    try:
        if args.command == "catalog-list" and args.config is None:
            cfg = ScenarioConfig(command="catalog-list", seed=pb.DEFAULT_SEED,
                                 raw_text="", check=args.check,
                                 threads=args.threads)
            if args.out:
                cfg.out_prefix = args.out
        else:
            if args.config is None:
                raise ConfigError(f"command '{args.command}' needs --config")
            cfg = load_config(args.config, check=args.check,
                              threads=args.threads, out=args.out)
            if cfg.command != args.command:
                raise ConfigError(
                    f"config command '{cfg.command}' does not match "
                    f"'{args.command}'"
                )
        code = run_scenario(cfg)
    except ConfigError as exc:
        print(f"nulldist: config error: {exc}", file=sys.stderr)
        return 2
    except (Unreachable, TooLarge) as exc:
        print(f"nulldist: numerical failure: {exc}", file=sys.stderr)
        return 3
    except NullDistError as exc:
        print(f"nulldist: error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
