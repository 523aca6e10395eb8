"""Command-line front end.

Subcommands
-----------
build            print the annotated circuit of one configuration
layout           print the qubit layout of a patch as JSON
dem              print the detector error model at a given ``p``
verify-distance  compute the circuit-level distance (exit 3 if inconclusive)
run              sample and decode, write failure CSV and fit JSON
compare          overhead ratios and break-even verdicts from run CSVs

Exit status is 0 on success, 2 on a configuration error and 3 when a
distance check is inconclusive. Options may also come from a JSON file given
with ``--config``; explicit command-line values win, and ``--set key=value``
overrides single keys.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from collections import defaultdict
from importlib.metadata import PackageNotFoundError, version

from . import analysis, circuit, experiment
from .experiment import ConfigError, PointConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3

_DEFAULTS = {
    "family": "standard",
    "scheme": "nr",
    "rounds": None,
    "p": None,
    "t_res": 500,
    "basis": "Z",
    "seed": 0,
    "shots": experiment.DEFAULT_MAX_SHOTS,
    "max_failures": experiment.DEFAULT_MAX_FAILURES,
    "workers": 1,
    "batch": experiment.DEFAULT_BATCH,
    "node_budget": 20_000_000,
}


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def parse_p(text: str) -> float:
    """Parse an error rate; ``1e-2.5`` means ``10**-2.5``."""
    text = str(text).strip()
    m = re.fullmatch(r"1e(-?\d+(?:\.\d+)?)", text)
    if m:
        return 10 ** float(m.group(1))
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse error rate {text!r}") from None


def _parse_list(value, conv):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [conv(v) for v in value]
    return [conv(v) for v in str(value).split(",") if v.strip()]


def _add_point_args(sp, experiment_positional=True, with_p=False):
    if experiment_positional:
        sp.add_argument("experiment", nargs="?", choices=("memory", "stability"))
    else:
        sp.add_argument("--experiment", choices=("memory", "stability"))
    sp.add_argument("--family", choices=("standard", "spreading", "squeezing"))
    sp.add_argument("--scheme", choices=experiment.SCHEMES, type=str.lower)
    sp.add_argument("-d", dest="d", type=int, help="memory distance")
    sp.add_argument("-w", dest="w", type=int, help="stability width")
    sp.add_argument("--rounds", help="round count, or comma list for run")
    sp.add_argument("--t-res", dest="t_res", type=int, help="reset duration in ns (UR)")
    sp.add_argument("--basis", choices=("X", "Z"))
    if with_p:
        sp.add_argument("-p", dest="p", help="error rate(s), comma list; 1e-2.5 allowed")
    sp.add_argument("--config", help="JSON file with option values")
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resetqec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build", help="print the annotated circuit")
    _add_point_args(sp)
    sp.add_argument("-o", "--out")

    sp = sub.add_parser("layout", help="print the patch layout as JSON")
    _add_point_args(sp)
    sp.add_argument("-o", "--out")

    sp = sub.add_parser("dem", help="print the detector error model")
    _add_point_args(sp, with_p=True)
    sp.add_argument("-o", "--out")

    sp = sub.add_parser("verify-distance", help="circuit-level distance")
    _add_point_args(sp, experiment_positional=False)
    sp.add_argument("--expect", type=int, help="fail with exit 3 unless the distance equals this")
    sp.add_argument("--node-budget", dest="node_budget", type=int)

    sp = sub.add_parser("run", help="sample, decode and fit")
    _add_point_args(sp, with_p=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--shots", type=float, help="shot cap per point and basis")
    sp.add_argument("--max-failures", dest="max_failures", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--batch", type=int)
    sp.add_argument("--csv", help="failure-point CSV path (default stdout)")
    sp.add_argument("--json", help="fit JSON path")
    sp.add_argument("--plot-csv", dest="plot_csv", help="log10 p_L vs rounds with 3-sigma bars")
    sp.add_argument("--dump-circuit", dest="dump_circuit", help="write the circuit of the first point")
    sp.add_argument("--dump-dem", dest="dump_dem", help="write the DEM of the first point")
    sp.add_argument("--verify-distance", dest="verify_distance", action="store_true")

    sp = sub.add_parser("compare", help="overhead ratios from run CSVs")
    sp.add_argument("baseline", help="CSV of the no-reset baseline")
    sp.add_argument("alternates", nargs="+", help="CSV files of the circuits to compare")
    sp.add_argument("--json", help="report JSON path")
    sp.add_argument("--csv", help="R vs p CSV path")
    return parser


def _settings(args) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "set", "command"):
            cfg[k] = v
    for item in getattr(args, "set", []) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    if cfg.get("experiment") is None:
        raise ConfigError("experiment (memory or stability) is required")
    size = cfg.get("size")
    if cfg["experiment"] == "memory":
        size = cfg.get("d") or size
    else:
        size = cfg.get("w") or size
    if size is None:
        raise ConfigError("size is required (-d for memory, -w for stability)")
    cfg["size"] = int(size)
    rounds = _parse_list(cfg.get("rounds"), int)
    if not rounds:
        # memory default: n = d rounds; stability needs an explicit sweep
        if cfg["experiment"] == "memory":
            rounds = [cfg["size"]]
        else:
            raise ConfigError("stability runs need --rounds")
    cfg["rounds"] = rounds
    cfg["p"] = _parse_list(cfg.get("p"), parse_p)
    for k in ("t_res", "seed", "max_failures", "workers", "batch", "node_budget"):
        cfg[k] = int(cfg[k])
    cfg["shots"] = int(float(cfg["shots"]))
    return cfg


def _point(cfg, rounds=None, p=1e-3) -> PointConfig:
    return PointConfig(cfg["experiment"], cfg["family"], cfg["scheme"], cfg["size"], p,
                       rounds if rounds is not None else cfg["rounds"][0], cfg["t_res"],
                       cfg["basis"])


def config_hash(cfg: dict) -> str:
    keep = {k: v for k, v in cfg.items() if k not in ("csv", "json", "plot_csv", "out",
                                                       "dump_circuit", "dump_dem", "workers")}
    blob = json.dumps(keep, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _header(cfg) -> str:
    return f"# config_hash={config_hash(cfg)} version={tool_version()}\n"


def cmd_build(cfg) -> int:
    prog = experiment.program_for(_point(cfg))
    _emit(_header(cfg) + circuit.to_text(prog), cfg.get("out"))
    return EXIT_OK


def cmd_layout(cfg) -> int:
    patch = _point(cfg).patch()
    doc = json.loads(patch.to_json())
    doc["config_hash"] = config_hash(cfg)
    doc["version"] = tool_version()
    _emit(json.dumps(doc, indent=1) + "\n", cfg.get("out"))
    return EXIT_OK


def cmd_dem(cfg) -> int:
    ps = cfg["p"] or [1e-3]
    model = experiment.detector_model(_point(cfg, p=ps[0]))
    _emit(_header(cfg) + model.to_text(), cfg.get("out"))
    return EXIT_OK


def cmd_verify_distance(cfg) -> int:
    result = experiment.effective_distance(_point(cfg), cfg["node_budget"])
    print(result)
    if not result.exact:
        return EXIT_INCONCLUSIVE
    if cfg.get("expect") is not None and result.value != cfg["expect"]:
        print(f"expected {cfg['expect']}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def fit_groups(points, round_ns_of) -> list[dict]:
    """Fit every (family, scheme, size, p, t_res) group that has enough rounds."""
    groups = defaultdict(list)
    for pt in points:
        groups[(pt.experiment, pt.family, pt.scheme, pt.size, pt.p, pt.t_res)].append(pt)
    out = []
    for key, pts in sorted(groups.items()):
        if len({pt.rounds for pt in pts}) < analysis.MIN_POINTS:
            continue
        entry = dict(zip(("experiment", "family", "scheme", "size", "p", "t_res"), key))
        try:
            entry["fit"] = analysis.fit_log_linear(pts, round_ns_of(pts[0])).to_dict()
        except analysis.FitError as exc:
            entry["fit"] = None
            entry["error"] = str(exc)
        out.append(entry)
    return out


def _round_ns(pt) -> int:
    cfg = PointConfig(pt.experiment, pt.family, pt.scheme, pt.size, pt.p, pt.rounds, pt.t_res)
    return experiment.round_duration(cfg)


def cmd_run(cfg) -> int:
    if not cfg["p"]:
        raise ConfigError("run needs -p")
    points_cfg = [_point(cfg, n, p) for p in cfg["p"] for n in cfg["rounds"]]
    if cfg.get("verify_distance"):
        for c in points_cfg[:1]:
            result = experiment.effective_distance(c, cfg["node_budget"])
            print(f"# distance {result}", file=sys.stderr)
            if not result.exact:
                return EXIT_INCONCLUSIVE
    if cfg.get("dump_circuit"):
        _emit(_header(cfg) + circuit.to_text(experiment.program_for(points_cfg[0])), cfg["dump_circuit"])
    if cfg.get("dump_dem"):
        _emit(_header(cfg) + experiment.detector_model(points_cfg[0]).to_text(), cfg["dump_dem"])
    points = experiment.run_points(points_cfg, cfg["seed"], cfg["max_failures"], cfg["shots"],
                                   cfg["workers"], cfg["batch"])
    _emit(_header(cfg) + analysis.to_csv(points), cfg.get("csv"))
    if cfg.get("plot_csv"):
        rows = analysis.plot_rows(points)
        lines = [",".join(rows[0])] if rows else []
        lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in r.values()) for r in rows]
        _emit(_header(cfg) + "\n".join(lines) + "\n", cfg["plot_csv"])
    fits = fit_groups(points, _round_ns)
    if cfg.get("json"):
        doc = {"config_hash": config_hash(cfg), "version": tool_version(), "fits": fits}
        _emit(json.dumps(doc, indent=1) + "\n", cfg["json"])
    for f in fits:
        if f["fit"]:
            print(f"# {f['family']} {f['scheme']} p={f['p']:.4g} t_res={f['t_res']}: "
                  f"gamma/round = {f['fit']['gamma_round']:.4f} +- {f['fit']['se_gamma_round']:.4f}",
                  file=sys.stderr)
    return EXIT_OK


def _label(pt) -> str:
    if pt.family != "standard":
        return pt.family
    return f"{pt.scheme}" + (f"(t_res={pt.t_res})" if pt.scheme == "ur" else "")


def compare(baseline, alternates) -> dict:
    """Overhead ratio table of each alternate against the baseline points.

    Raises
    ------
    ConfigError
        If an alternate does not share the baseline's size, ``p`` grid and rounds.
    """
    def grid(pts):
        return {(pt.size, pt.p, pt.rounds) for pt in pts}

    def fits(pts):
        by_p = defaultdict(list)
        for pt in pts:
            by_p[pt.p].append(pt)
        return {p: analysis.fit_log_linear(v, _round_ns(v[0])) for p, v in by_p.items()}

    base_grid = grid(baseline)
    base_fits = fits(baseline)
    report = []
    for alt in alternates:
        if grid(alt) != base_grid:
            raise ConfigError("alternate and baseline do not share the size, p and rounds grid")
        alt_fits = fits(alt)
        rows = []
        for p in sorted(base_fits):
            r = analysis.overhead_ratio(base_fits[p], alt_fits[p])
            rows.append({"p": p, "R": r.value, "se": r.se})
        verdict = analysis.break_even([(row["p"], row["R"]) for row in rows]) if len(rows) > 1 else None
        report.append({"label": _label(alt[0]), "ratios": rows,
                       "break_even": None if verdict is None else str(verdict),
                       "p_br": None if verdict is None else verdict.p_br})
    return {"baseline": _label(baseline[0]), "alternates": report}


def cmd_compare(args) -> int:
    def load(path):
        try:
            with open(path) as fh:
                pts = analysis.from_csv(fh.read())
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        if not pts:
            raise ConfigError(f"{path} holds no points")
        return pts

    base = load(args.baseline)
    alts = [load(a) for a in args.alternates]
    try:
        report = compare(base, alts)
    except analysis.FitError as exc:
        raise ConfigError(str(exc)) from None
    blob = json.dumps({"baseline": args.baseline, "alternates": args.alternates}, sort_keys=True)
    report["config_hash"] = hashlib.sha256(blob.encode()).hexdigest()[:16]
    report["version"] = tool_version()
    lines = ["label,p,R,se"]
    for alt in report["alternates"]:
        for row in alt["ratios"]:
            lines.append(f"{alt['label']},{row['p']!r},{row['R']!r},{row['se']!r}")
    if args.csv:
        _emit(f"# config_hash={report['config_hash']} version={report['version']}\n"
              + "\n".join(lines) + "\n", args.csv)
    if args.json:
        _emit(json.dumps(report, indent=1) + "\n", args.json)
    for alt in report["alternates"]:
        cells = ", ".join(f"p={r['p']:.3g}: R={r['R']:.3f}+-{r['se']:.3f}" for r in alt["ratios"])
        print(f"{alt['label']}: {cells}; {alt['break_even'] or 'single p'}")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "layout": cmd_layout, "dem": cmd_dem,
            "verify-distance": cmd_verify_distance, "run": cmd_run}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            return cmd_compare(args)
        return COMMANDS[args.command](_settings(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # layout, build and noise validation errors all derive from ValueError
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
