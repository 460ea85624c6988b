"""Command-line interface: ``diskmorse <subcommand> [flags]``.

Subcommands ``minima`` and ``census`` run sampling campaigns; ``dendrogram``,
``betti`` and ``render`` turn a census file into reports; ``verify`` checks
the numerical invariants.  Flags may also come from a ``key = value`` file
given with ``--config``; flags on the command line take precedence.

Exit codes are 0 on success, 1 on runtime failure and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .census import ALL_INDICES, MINIMA_ONLY, CampaignSpec, Census, radius_histogram, radius_summary, run_campaign
from .core import DEFAULT_TOL
from .energy import EnergyParams

log = logging.getLogger("diskmorse")

DEFAULTS = {
    "n": 5,
    "samples": 1000,
    "seed": 0,
    "workers": 1,
    "hardness": 50.0,
    "eps": None,
    "tol": DEFAULT_TOL,
    "neb_cutoff": None,
    "out": ".",
}
CASTS = {
    "n": int,
    "samples": int,
    "seed": int,
    "workers": int,
    "hardness": float,
    "eps": float,
    "tol": float,
    "neb_cutoff": float,
    "out": str,
}


class UsageError(Exception):
    pass


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in CASTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CASTS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    conf = dict(DEFAULTS)
    if getattr(args, "config", None):
        conf.update(read_config_file(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            conf[key] = v
    if conf["n"] < 1:
        raise UsageError("-n must be >= 1")
    if conf["samples"] < 1:
        raise UsageError("--samples must be >= 1")
    if conf["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    if conf["hardness"] < 2:
        raise UsageError("--hardness must be >= 2")
    if conf["eps"] is not None and conf["eps"] <= 0:
        raise UsageError("--eps must be positive")
    if conf["tol"] <= 0:
        raise UsageError("--tol must be positive")
    if conf["neb_cutoff"] is not None and conf["neb_cutoff"] < 0:
        raise UsageError("--neb-cutoff must be >= 0")
    return conf


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-n", type=int, help="number of disks")
    common.add_argument("--samples", type=int, help="number of random starts")
    common.add_argument("--seed", type=int, help="base seed; sample k uses seed + k")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--hardness", type=float, help="energy exponent h (default 50)")
    common.add_argument("--eps", type=float, help="relative bond tolerance")
    common.add_argument("--tol", type=float, help="symmetry matching tolerance")
    common.add_argument(
        "--neb-cutoff", type=float, help="bands between minima closer than this (census default 0.6, 0 disables)"
    )
    common.add_argument("--out", type=str, help="output directory")
    common.add_argument("--config", type=str, help="key = value file with defaults for these flags")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="diskmorse", description="Critical points of hard disks in a square.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("minima", parents=[common], help="census of local minima (steepest descent)")
    sub.add_parser("census", parents=[common], help="census of critical points of every index")
    for name, text in (
        ("dendrogram", "component merge tree from a census"),
        ("betti", "Betti number table from a census"),
        ("render", "SVG drawings and tables from a census"),
    ):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("census", help="census JSON file")
    sp = sub.add_parser("verify", parents=[common], help="check numerical invariants")
    sp.add_argument("census", nargs="?", help="optional census JSON file to validate")
    return p


def _spec(conf: dict, pipeline: str) -> CampaignSpec:
    return CampaignSpec(
        n=conf["n"],
        samples=conf["samples"],
        base_seed=conf["seed"],
        pipeline=pipeline,
        params=EnergyParams(conf["hardness"]),
        eps=conf["eps"],
        tol=conf["tol"],
        neb_cutoff=conf["neb_cutoff"],
    )


def write_census(census: Census, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    (out / "census.json").write_text(census.to_json() + "\n")
    (out / "census.csv").write_text(census.to_csv())
    return [out / "census.json", out / "census.csv"]


def histogram_csv(census: Census) -> str:
    counts, bins = radius_histogram(census.types)
    lines = ["# " + json.dumps(census.spec.to_dict() if census.spec else {}, sort_keys=True)]
    lines.append("radius_lo,radius_hi," + ",".join(f"index{k}" for k in range(counts.shape[0])))
    for j in range(len(bins) - 1):
        lines.append(f"{bins[j]:.3f},{bins[j + 1]:.3f}," + ",".join(str(int(c)) for c in counts[:, j]))
    return "\n".join(lines) + "\n"


def cmd_campaign(conf: dict, pipeline: str) -> int:
    spec = _spec(conf, pipeline)
    log.info("campaign %s: n=%d samples=%d seed=%d workers=%d", pipeline, spec.n, spec.samples, spec.base_seed, conf["workers"])
    step = max(1, spec.samples // 20)

    def progress(done, total):
        if done % step < 256 or done == total:
            log.info("%d / %d samples", done, total)

    census = run_campaign(spec, workers=conf["workers"], progress=progress)
    out = Path(conf["out"])
    files = write_census(census, out)
    if pipeline == ALL_INDICES:
        (out / "histogram.csv").write_text(histogram_csv(census))
        (out / "histogram_summary.json").write_text(json.dumps(radius_summary(census.types), indent=1) + "\n")
        files.append(out / "histogram.csv")
    print(census.to_csv(), end="")
    log.info("wrote %s", ", ".join(map(str, files)))
    return 0


def load_census(path) -> Census:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise RuntimeError(f"cannot read census {path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}:{err.lineno}: {err.msg}") from err
    try:
        return Census.from_dict(data)
    except (KeyError, TypeError, ValueError) as err:
        raise SchemaError(f"{path}: {err}") from err


class SchemaError(Exception):
    pass


def _analysis(census: Census):
    from .census import filter_nondegenerate
    from .morse import REFERENCE_HIGHER_BETTI, betti_table, build_dendrogram

    p = EnergyParams(census.spec.params.h) if census.spec else EnergyParams()
    types = filter_nondegenerate(census.types)
    d = build_dendrogram(types, p=p)
    n = types[0].config.n if types else 0
    higher = REFERENCE_HIGHER_BETTI.get(n)
    if higher is not None and any(len(col) != len(types) for col in higher.values()):
        higher = None
    return types, d, betti_table(types, d, higher)


def cmd_report(conf: dict, command: str, census_path: str) -> int:
    from .morse import dendrogram_svg, render_report

    census = load_census(census_path)
    types, d, bt = _analysis(census)
    meta = {"command": command, "census": census.spec.to_dict() if census.spec else {}}
    out = Path(conf["out"])
    out.mkdir(parents=True, exist_ok=True)
    if command == "dendrogram":
        (out / "dendrogram.json").write_text(json.dumps({"metadata": meta, **d.to_dict()}, indent=1) + "\n")
        (out / "dendrogram.svg").write_text(dendrogram_svg(d))
        print(json.dumps(d.to_dict()["intervals"]))
    elif command == "betti":
        text = bt.to_csv(meta)
        (out / "betti.csv").write_text(text)
        (out / "betti.json").write_text(json.dumps({"metadata": meta, **bt.to_dict()}, indent=1) + "\n")
        print(text, end="")
    else:
        files = render_report(d, bt, out, census.types, meta)
        print("\n".join(str(f) for f in files))
    return 0


def cmd_verify(conf: dict, census_path: str | None) -> int:
    from .bonds import check_balance
    from .census import type_orbit
    from .energy import evaluate

    rng = np.random.default_rng(conf["seed"])
    p = EnergyParams(conf["hardness"])
    failures = []
    n = conf["n"]
    for _ in range(20):
        while True:
            x = rng.uniform(0.1, 0.9, 2 * n)
            P = x.reshape(n, 2)
            d = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1)) + np.eye(n)
            if d.min() >= 0.2:
                break
        ev = evaluate(x, p, hessian=True)
        step = 1e-6
        fd = np.array([(evaluate(x + step * e, p).value - evaluate(x - step * e, p).value) / (2 * step) for e in np.eye(2 * n)])
        err = np.abs(fd - ev.gradient).max() / max(1e-300, np.abs(ev.gradient).max())
        if err > 1e-5:
            failures.append(f"gradient mismatch {err:.2e}")
        if np.abs(ev.hessian - ev.hessian.T).max() > 1e-9 * np.abs(ev.hessian).max():
            failures.append("asymmetric Hessian")
    if census_path:
        census = load_census(census_path)
        for k, t in enumerate(census.types):
            bal = check_balance(t.representative.source_bonds, t.config)
            if not bal.balanced:
                failures.append(f"type {k} (r={t.radius:.6f}) is not balanced")
            if type_orbit(t.config, t.representative.source_bonds, t.submanifold_dim, census.spec.tol if census.spec else DEFAULT_TOL) != t.orbit:
                failures.append(f"type {k} orbit mismatch")
    for f in failures:
        print("FAIL", f)
    print("ok" if not failures else f"{len(failures)} failure(s)")
    return 0 if not failures else 1


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        conf = resolve(args)
    except UsageError as err:
        print(f"diskmorse: error: {err}", file=sys.stderr)
        return 2
    print(f"diskmorse {args.command}: seed={conf['seed']}", file=sys.stderr)
    try:
        if args.command == "minima":
            return cmd_campaign(conf, MINIMA_ONLY)
        if args.command == "census":
            return cmd_campaign(conf, ALL_INDICES)
        if args.command in ("dendrogram", "betti", "render"):
            return cmd_report(conf, args.command, args.census)
        return cmd_verify(conf, args.census)
    except SchemaError as err:
        print(f"diskmorse: schema error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # runtime failure
        print(f"diskmorse: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
