"""Command-line experiment runner.

    zerotwo run CONFIG.json [--out DIR] [--seed N] [--plot]
    zerotwo list-examples
    zerotwo --version

Exit codes: 0 when the experiment's verdict holds, 1 on errors or a failed
verdict, 2 when a hypothesis of the experiment is violated, 3 when the
config does not parse or does not match the schema.
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
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import __version__
from .algebra import AlgebraShape
from .bundle import (
    BundleAlgebra,
    FiniteMeasureSpace,
    Section,
    SectionOperator,
    assemble,
    disintegrate,
    gns,
    operator_center_norm,
    order_limit_check,
    vector_norm,
)
from .channels import make_channel
from .errors import PremiseViolated, ZeroTwoError
from .laws import (
    ConvergesToZero,
    MultiIndex,
    corollary14_experiment,
    default_schedule,
    difference_norm_sequence,
    multi_power,
    q_sequence,
    theorem12_experiment,
    v_table,
    zaharopol_check,
    zn0_experiment,
)
from .superop import SuperOperator, norm_1to1, power

log = logging.getLogger("zerotwo")

EXIT_OK, EXIT_ERROR, EXIT_PREMISE, EXIT_SCHEMA = 0, 1, 2, 3


def build_id() -> str:
    """Version plus a digest of the package sources."""
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


class ConfigError(Exception):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("zerotwo").joinpath("schema.json").read_text())


def load_config(path: str | os.PathLike) -> dict:
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{path}: field {where}: {e.message}")
        raise ConfigError("\n".join(lines))
    return cfg


# -- instance construction --------------------------------------------------------


def _shape(spec: dict | None) -> AlgebraShape | None:
    if spec is None:
        return None
    try:
        return AlgebraShape(spec["dims"], spec.get("weights"))
    except ZeroTwoError as exc:
        raise ConfigError(f"field algebra: {exc}") from exc


def _channel(spec: dict, shape: AlgebraShape | None):
    return make_channel(spec["kind"], spec.get("params"), shape)


def _family(spec, shape) -> list[SuperOperator]:
    specs = spec if isinstance(spec, list) else [spec]
    out = []
    for s in specs:
        made = _channel(s, shape)
        out.extend(made if isinstance(made, list) else [made])
    return out


def _index(value, d: int) -> MultiIndex:
    n = MultiIndex([value] if isinstance(value, int) else value)
    if len(n) != d:
        raise ConfigError(f"multi-index {list(n)} has length {len(n)}, family has {d} maps")
    return n


def _dominated(spec, family, m: MultiIndex, shape) -> SuperOperator:
    if spec is None or spec == "half-power":
        return 0.5 * multi_power(family, m)
    if spec == "power":
        return multi_power(family, m)
    if spec == "zero":
        return SuperOperator.zero(shape)
    return _channel(spec, shape)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


@dataclass
class Outcome:
    ok: bool
    verdict: str
    tables: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    series: list[tuple[str, list[float], list[float]]] = field(default_factory=list)


def _report_table(report, d: int):
    header = [f"n{i + 1}" for i in range(d)] + ["lower", "upper", "exact"]
    return header, report.rows()


def _series(report, label: str, offset=None):
    xs, ys = [], []
    for n, e in report.samples:
        xs.append(float((n - offset).total if offset is not None else n.total))
        ys.append(e.upper)
    return label, xs, ys


# -- experiment runners ----------------------------------------------------------------


def run_norm(cfg: dict, seed: int) -> Outcome:
    p, shape = cfg["params"], _shape(cfg["algebra"])
    t = _channel(p["map"], shape)
    if "power" in p:
        t = power(t, p["power"])
    if "minus" in p:
        t = t - _channel(p["minus"], shape)
    est = norm_1to1(t, strategy=p.get("strategy", "auto"), restarts=p.get("restarts", 64), seed=seed)
    row = (est.lower, est.upper, est.exact)
    return Outcome(
        ok=True,
        verdict="exact" if est.exact else "bracketed",
        tables={"norm": (["lower", "upper", "exact"], [row])},
        summary={"lower": est.lower, "upper": est.upper, "exact": est.exact},
    )


def run_dichotomy(cfg: dict, seed: int) -> Outcome:
    p, shape = cfg["params"], _shape(cfg["algebra"])
    fam = _family(p["family"], shape)
    d = len(fam)
    k = _index(p["k"], d)
    if "points" in p:
        points = [_index(n, d) for n in p["points"]]
    else:
        points = default_schedule(d, p.get("n_max", 64))
    report = difference_norm_sequence(fam, k, points, eps=p.get("eps", 1e-3), seed=seed)
    verdict = report.classification.name
    expect = p.get("expect")
    summary = {"classification": verdict}
    if isinstance(report.classification, ConvergesToZero):
        summary["n0"] = list(report.classification.n0)
    return Outcome(
        ok=expect is None or expect == verdict,
        verdict=verdict,
        tables={"norms": _report_table(report, d)},
        summary=summary,
        series=[_series(report, "||T^(n+k) - T^n||")],
    )


def run_zn0(cfg: dict, seed: int) -> Outcome:
    p, shape = cfg["params"], _shape(cfg["algebra"])
    S = _channel(p["S"], shape)
    T = _channel(p["T"], shape)
    Z = _channel(p["Z"], shape) if "Z" in p else SuperOperator.identity(S.domain)
    rep = zn0_experiment(Z, T, S, p["n0"], p["N"], budget=p.get("budget", 16), seed=seed)
    rows = [(n, v) for n, v in rep.norms]
    return Outcome(
        ok=rep.holds,
        verdict="holds" if rep.holds else "fails",
        tables={"norms": (["n", "norm"], rows)},
        summary={"margin": rep.margin, "n0": rep.n0},
        series=[("||Z(S^n - T^n)||", [float(n) for n, _ in rows], [v for _, v in rows])],
    )


def run_theorem12(cfg: dict, seed: int) -> Outcome:
    p, shape = cfg["params"], _shape(cfg["algebra"])
    fam = _family(p["family"], shape)
    d = len(fam)
    m, k = _index(p["m"], d), _index(p["k"], d)
    S = _dominated(p.get("S"), fam, m, shape)
    Z = _channel(p["Z"], shape) if "Z" in p else None
    res = theorem12_experiment(
        Z, fam, S, m, k, p["eps"],
        d_budget=p.get("d_budget", 64), seed=seed, horizon=p.get("horizon", 16),
    )
    tr = res.trace
    header = [f"offset{i + 1}" for i in range(d)] + ["lower", "upper", "exact"]
    rows = [(*(n - tr.n0).entries, e.lower, e.upper, e.exact) for n, e in res.report.samples]
    summary = dict(tr.summary())
    summary.update(
        hypothesis_norms=list(res.hypothesis_norms),
        zq_norm=res.zq_norm,
        zq_norm_dual=res.zq_norm_dual,
        zq_deficit=res.zq_deficit,
        bound_at_n0=res.bound_at_n0,
        max_upper=max(e.upper for _, e in res.report.samples),
    )
    return Outcome(
        ok=res.holds,
        verdict="holds" if res.holds else "fails",
        tables={"norms": (header, rows)},
        summary=summary,
        series=[_series(res.report, "||Z^M(T^(n+k) - T^n)||, n = n0 + offset", offset=tr.n0)],
    )


def run_corollary14(cfg: dict, seed: int) -> Outcome:
    p, shape = cfg["params"], _shape(cfg["algebra"])
    T, S_map = _channel(p["T"], shape), _channel(p["S_map"], shape)
    res = corollary14_experiment(
        T, S_map, p["m0"], p["k"], eps=p.get("eps", 0.1),
        n_schedule=default_schedule(2, p.get("horizon", 8)),
        table_size=p.get("table_size", 8), seed=seed,
    )
    th = res.theorem12
    n0 = th.trace.n0
    rows = [(*(n - n0).entries, e.lower, e.upper, e.exact) for n, e in th.report.samples]
    summary = dict(th.trace.summary())
    summary.update(
        hypothesis_norms=list(th.hypothesis_norms),
        table_classification=res.table.classification.name,
    )
    return Outcome(
        ok=th.holds,
        verdict="holds" if th.holds else "fails",
        tables={
            "table": _report_table(res.table, 2),
            "norms": (["offset1", "offset2", "lower", "upper", "exact"], rows),
        },
        summary=summary,
        series=[_series(res.table, "||T^(n+k) S^m - T^n S^m||")],
    )


def run_identities(cfg: dict, seed: int) -> Outcome:
    p, shape = cfg["params"], _shape(cfg["algebra"])
    fam = _family(p["family"], shape)
    d = len(fam)
    m, k = _index(p["m"], d), _index(p["k"], d)
    S = _dominated(p.get("S"), fam, m, shape)
    rows = []
    worst3 = worst4 = 0.0
    for ell in range(1, p["ell_max"] + 1):
        trace = q_sequence(fam, S, m, k, ell)
        v_table(fam, S, m, k, ell, p["d_max"], trace=trace)
        rows.append((ell, trace.residual_T3, trace.residual_T4))
        worst3, worst4 = max(worst3, trace.residual_T3), max(worst4, trace.residual_T4)
    return Outcome(
        ok=True,
        verdict="residuals within tolerance",
        tables={"residuals": (["ell", "residual_T3", "residual_T4"], rows)},
        summary={"residual_T3": worst3, "residual_T4": worst4},
    )


def run_zaharopol(cfg: dict, seed: int) -> Outcome:
    p = cfg["params"]
    T = make_channel("stochastic", {"matrix": p["matrix"], "weights": p.get("weights")})
    rep = zaharopol_check(T, m=p.get("m", 1), N=p.get("N", 64), eps=p.get("eps", 1e-3))
    ok = rep.implication_holds and rep.decay_verified
    return Outcome(
        ok=ok,
        verdict=rep.decay.classification.name,
        tables={"norms": _report_table(rep.decay, 1)},
        summary={
            "condition_i": rep.condition_i,
            "condition_ii": rep.condition_ii,
            "implication_holds": rep.implication_holds,
            "classification": rep.decay.classification.name,
        },
        series=[_series(rep.decay, "||T^(n+1) - T^n||")],
    )


def _bundle(p: dict):
    atoms = p["atoms"]
    base = FiniteMeasureSpace([a["label"] for a in atoms], [a.get("mass", 1.0) for a in atoms])
    shapes = [_shape(a["algebra"]) for a in atoms]
    bundle = BundleAlgebra(base, shapes)
    maps = [_channel(a["channel"], s) for a, s in zip(atoms, shapes)]
    return bundle, SectionOperator(bundle, maps)


def run_bundle_disintegration(cfg: dict, seed: int) -> Outcome:
    p = cfg["params"]
    bundle, T = _bundle(p)
    glob = assemble(T)
    fibers = disintegrate(bundle, glob)
    exact = all(np.array_equal(a.matrix, b.matrix) for a, b in zip(T.maps, fibers.maps))
    exact = exact and np.array_equal(assemble(fibers).matrix, glob.matrix)
    norms, estimates = operator_center_norm(fibers, seed=seed)
    rng = np.random.default_rng(seed)
    worst_gap = -np.inf
    for _ in range(p.get("samples", 16)):
        x = Section.random(bundle, rng)
        gap = vector_norm(fibers(x)).as_array() - vector_norm(x).as_array()
        worst_gap = max(worst_gap, float(gap.max()))
    rows = [(a, e.lower, e.upper, e.exact) for a, e in zip(bundle.base.atoms, estimates)]
    return Outcome(
        ok=bool(exact) and worst_gap <= 1e-9,
        verdict="round trip exact" if exact else "round trip mismatch",
        tables={"center_norm": (["atom", "lower", "upper", "exact"], rows)},
        summary={"round_trip_exact": bool(exact), "contractivity_gap": worst_gap, "center_norm": list(norms.values)},
    )


def run_bundle_order_limit(cfg: dict, seed: int) -> Outcome:
    p = cfg["params"]
    bundle, T = _bundle(p)
    rep = order_limit_check(T, k=p.get("k", 1), eps=p.get("eps", 1e-3), N=p.get("N", 64), m=p.get("m", 1), seed=seed)
    summary = {
        "converges": rep.converges,
        "premises_ok": rep.premises_ok,
        "global_unital": rep.global_unital,
        "fibers": [
            {
                "atom": f.atom,
                "unital_dual": f.unital_dual,
                "premises_ok": f.premises_ok,
                "detail": f.premise_detail,
                "n0": f.n0,
                "classification": f.report.classification.name,
            }
            for f in rep.fibers
        ],
    }
    if not rep.premises_ok:
        bad = [f.atom for f in rep.fibers if not f.premises_ok]
        raise PremiseViolated(f"atoms {bad}", "; ".join(f.premise_detail for f in rep.fibers if not f.premises_ok))
    return Outcome(
        ok=rep.converges,
        verdict="order convergent" if rep.converges else "not convergent",
        tables={"norms": (["atom", "n", "lower", "upper", "exact"], rep.rows())},
        summary=summary,
        series=[_series(f.report, f"atom {f.atom}") for f in rep.fibers],
    )


def run_gns(cfg: dict, seed: int) -> Outcome:
    shape = _shape(cfg["algebra"])
    phi = cfg.get("params", {}).get("phi")
    g = gns(shape, phi)
    fid = g.fidelity()
    return Outcome(
        ok=fid <= 1e-10,
        verdict="faithful" if g.kernel_dim == 0 else "quotient",
        tables={"gns": (["quotient_dim", "kernel_dim", "fidelity"], [(g.quotient_dim, g.kernel_dim, fid)])},
        summary={"quotient_dim": g.quotient_dim, "kernel_dim": g.kernel_dim, "fidelity": fid},
    )


RUNNERS: dict[str, Callable[[dict, int], Outcome]] = {
    "norm": run_norm,
    "dichotomy": run_dichotomy,
    "zn0": run_zn0,
    "theorem12": run_theorem12,
    "corollary14": run_corollary14,
    "identities": run_identities,
    "zaharopol": run_zaharopol,
    "bundle-disintegration": run_bundle_disintegration,
    "bundle-order-limit": run_bundle_order_limit,
    "gns": run_gns,
}


# -- output --------------------------------------------------------------------------


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_bytes(header: list[str], rows: list[tuple]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue().encode()


def _plot(path: Path, series, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, xs, ys in series:
        ax.semilogy(xs, np.maximum(ys, 1e-17), marker=".", label=label)
    ax.set_xlabel("|n|")
    ax.set_ylabel("norm (upper estimate)")
    ax.set_title(title)
    ax.legend(fontsize="small")
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    _atomic_write(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, int) and abs(obj) > 2 ** 53:
        return str(obj)
    return obj


def run(config_path, out_dir="results", seed: int | None = None, plot: bool = False) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_SCHEMA
    seed = cfg.get("seed", 0) if seed is None else seed
    name = cfg["name"]
    out = Path(out_dir)
    start = time.perf_counter()
    result: dict[str, Any] = {"build": build_id(), "config": cfg, "seed": seed}
    try:
        outcome = RUNNERS[cfg["experiment"]](cfg, seed)
    except PremiseViolated as exc:
        result.update(status="premise-violated", premise=exc.which, detail=exc.detail)
        code = EXIT_PREMISE
        log.warning("%s: premise violated: %s", name, exc)
        outcome = None
    except (ZeroTwoError, ConfigError, KeyError, TypeError, ValueError) as exc:
        result.update(status="error", error=f"{type(exc).__name__}: {exc}")
        print(f"{name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_ERROR
        outcome = None
    else:
        code = EXIT_OK if outcome.ok else EXIT_ERROR
        result.update(status="ok" if outcome.ok else "verdict-failed", verdict=outcome.verdict, summary=outcome.summary)
        for table, (header, rows) in outcome.tables.items():
            fname = f"{name}.csv" if len(outcome.tables) == 1 else f"{name}.{table}.csv"
            _atomic_write(out / fname, csv_bytes(header, rows))
        result["tables"] = sorted(
            f"{name}.csv" if len(outcome.tables) == 1 else f"{name}.{t}.csv" for t in outcome.tables
        )
        if plot and outcome.series:
            _plot(out / f"{name}.svg", outcome.series, name)
    result["wall_clock_s"] = time.perf_counter() - start
    _atomic_write(out / f"{name}.json", (json.dumps(_jsonable(result), indent=2, sort_keys=True) + "\n").encode())
    verdict = result.get("verdict", result["status"])
    print(f"{name}: {result['status']} ({verdict}) -> {out / (name + '.json')}")
    return code


# -- examples ------------------------------------------------------------------------


def example_paths() -> list[Path]:
    root = resources.files("zerotwo").joinpath("configs")
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))


def list_examples() -> list[tuple[str, str, Path]]:
    out = []
    for path in example_paths():
        cfg = json.loads(path.read_text())
        out.append((cfg["name"], cfg.get("description", ""), path))
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="zerotwo", description="Zero-two law experiments on block algebras.")
    parser.add_argument("--version", action="version", version=f"zerotwo {build_id()}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="path to a JSON config, or the name of a bundled example")
    p_run.add_argument("--out", default="results", help="output directory (default: results)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--plot", action="store_true", help="also write an SVG decay plot")
    sub.add_parser("list-examples", help="list bundled example configs")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-examples":
        for name, desc, path in list_examples():
            print(f"{name:28s} {desc}")
        return EXIT_OK
    config = args.config
    if not Path(config).exists():
        named = {n: p for n, _, p in list_examples()}
        if config in named:
            config = named[config]
        else:
            print(f"no such config: {config}", file=sys.stderr)
            return EXIT_SCHEMA
    return run(config, args.out, args.seed, args.plot)


if __name__ == "__main__":
    sys.exit(main())
