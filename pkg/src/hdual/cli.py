"""Command-line front end: ``hdual gen | dualize | verify | run | ode | sfg-sweep``.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 divergence.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Optional

import click
import numpy as np

from hdual import catalog, certify, composite, continuous
from hdual.errors import DivergenceError, FeasibilityError, IntegrationError, ShapeError
from hdual.method_lib import METHODS, anti_transpose
from hdual.testbed import CompositeOracle, load_fixture, random_box_ls, random_lasso, random_quadratic

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _emit(obj, out: Optional[str]) -> None:
    text = dumps(obj)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_USAGE, f"error: cannot read JSON from {path}: {exc}")


def resolve_seed(config_seed: Optional[int], flag_seed: Optional[int]) -> int:
    """Flag beats HDUAL_SEED, which beats the config file."""
    if flag_seed is not None:
        return int(flag_seed)
    env = os.environ.get("HDUAL_SEED")
    if env is not None and env.strip():
        return int(env)
    return int(config_seed or 0)


def builtin_fixture(name: str) -> str:
    return resources.files("hdual").joinpath("data", f"{name}.json").read_text()


def _load_problem(source: str):
    if source.startswith("builtin:"):
        return load_fixture(json.loads(builtin_fixture(source.split(":", 1)[1])))
    return load_fixture(source)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Fixed-step first-order methods, their duals and their certificates."""


# ---------------------------------------------------------------------------
# gen


@main.command()
@click.argument("method", type=click.Choice(METHODS))
@click.option("--n", "n", type=int, required=True, help="Number of steps N.")
@click.option("--h", "h", type=float, default=1.0, show_default=True, help="Step size for gd.")
@click.option("--t", "tseq", type=click.Choice(catalog.TSEQS), default=None,
              help="t-sequence for gogm, gogm-dual, gfpgm and sfg-family.")
@click.option("--alpha", type=float, default=None, help="Prox scale for sfg-family (default 4).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
def gen(method, n, h, tseq, alpha, out):
    """Write the step-size matrix of METHOD as JSON and print its certificate weights."""
    try:
        spec = catalog.build_method(method, n, h=h, tseq=tseq, alpha=alpha)
    except FeasibilityError as exc:
        _fail(EXIT_FAIL, f"infeasible parameters: condition fails at index {exc.index}: {exc.condition}")
    except (ValueError, ShapeError) as exc:
        _fail(EXIT_USAGE, f"error: {exc}")
    doc = spec.to_dict()
    if out:
        Path(out).write_text(dumps(doc))
        info = {k: doc[k] for k in ("method", "n", "weights", "weight_role", "kind", "bound")}
        click.echo(dumps(info), nl=False)
    else:
        click.echo(dumps(doc), nl=False)


# ---------------------------------------------------------------------------
# dualize


_DUAL_KIND = {"C1": "C2", "C2": "C1"}


@main.command()
@click.argument("src", type=click.Path(dir_okay=False))
@click.argument("dst", type=click.Path(dir_okay=False))
def dualize(src, dst):
    """Write the anti-transpose of the step-size matrix in SRC to DST."""
    obj = _read_json(src)
    try:
        spec = catalog.spec_from_dict(obj)
    except (KeyError, TypeError, ValueError, ShapeError) as exc:
        _fail(EXIT_USAGE, f"error: malformed step-size file: {exc}")
    doc = {"method": f"dual({spec.name})", "n": spec.n, "rows": anti_transpose(spec.H).rows(), "params": spec.params}
    if spec.kind in _DUAL_KIND and spec.weights.size == spec.n + 1:
        kind = _DUAL_KIND[spec.kind]
        doc["weights"] = [float(w) for w in 1.0 / spec.weights[::-1]]
        doc["weight_role"] = "v" if kind == "C2" else "u"
        doc["kind"] = kind
        formula = "v_0 * (f(y0)-f*)" if kind == "C2" else "(1/u_N) * (L/2) * ||x0-x*||^2"
        # 1/u_N of the primal equals v_0 of the dual and vice versa
        doc["bound"] = {"coefficient": spec.bound_coefficient, "formula": formula}
        doc["alpha"] = 1.0
    Path(dst).write_text(dumps(doc))


# ---------------------------------------------------------------------------
# verify


def _parse_weights(text: str) -> np.ndarray:
    p = Path(text)
    if p.exists():
        obj = json.loads(p.read_text())
        if isinstance(obj, dict):
            obj = obj["weights"]
        return np.asarray(obj, dtype=float)
    return np.asarray([float(x) for x in text.replace(",", " ").split()], dtype=float)


@main.command()
@click.argument("hfile", type=click.Path(dir_okay=False))
@click.option("--weights", "weights", default=None,
              help="Weights as a JSON file (list or {'weights': [...]}) or a comma-separated list.")
@click.option("--kind", type=click.Choice(["C1", "C2"]), default=None,
              help="C1: primal (weights u); C2: dual (weights v). Defaults to the file's kind.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def verify(hfile, weights, kind, out):
    """Check the certificate of a step-size file; exit 0 iff it verifies."""
    obj = _read_json(hfile)
    try:
        spec = catalog.spec_from_dict(obj)
        w = _parse_weights(weights) if weights else spec.weights
        kind = kind or (spec.kind if spec.kind in ("C1", "C2") else None)
        if kind is None:
            raise ValueError("give --kind for files without a smooth certificate kind")
        if w.size != spec.n + 1:
            raise ValueError(f"need {spec.n + 1} weights, got {w.size}")
    except (KeyError, TypeError, ValueError, ShapeError) as exc:
        _fail(EXIT_USAGE, f"error: {exc}")
    report = certify.certificate_report(spec.H, w, kind)
    _emit(json.loads(report.to_json()), out)
    sys.exit(EXIT_PASS if report.passed else EXIT_FAIL)


# ---------------------------------------------------------------------------
# run


def _instances(cfg: dict, composite_method: bool, seed: int):
    """Yield (label, problem, x0) for the configured fixtures, in order."""
    fixtures = cfg.get("fixture") or cfg.get("fixtures")
    if isinstance(fixtures, str):
        fixtures = [fixtures]
    if fixtures:
        for i, src in enumerate(fixtures):
            prob = _load_problem(src)
            rng = np.random.default_rng([seed, i])
            if isinstance(prob, CompositeOracle):
                yield src, prob, catalog.composite_start(prob, rng)
            else:
                yield src, prob, rng.normal(size=prob.dim)
        return
    count = int(cfg.get("instances", 1))
    kind = cfg.get("problem", "lasso" if composite_method else "quadratic")
    dim = int(cfg.get("dim", 50 if composite_method else 10))
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        if kind == "quadratic":
            f = random_quadratic(rng, d=dim)
            yield f"quadratic[{seed},{i}]", f, rng.normal(size=dim)
        elif kind in ("lasso", "box"):
            F = random_lasso(rng, d=dim) if kind == "lasso" else random_box_ls(rng, d=dim)
            yield f"{kind}[{seed},{i}]", F, catalog.composite_start(F, rng)
        else:
            raise ValueError(f"unknown problem kind {kind!r}")


def _method_from_config(cfg: dict) -> catalog.MethodSpec:
    m = cfg.get("method")
    if isinstance(m, dict) and "file" in m:
        return catalog.spec_from_dict(json.loads(Path(m["file"]).read_text()))
    if m is None:
        raise ValueError("config needs a method")
    return catalog.build_method(m, int(cfg["n"]), h=float(cfg.get("h", 1.0)), tseq=cfg.get("t"), alpha=cfg.get("alpha"))


def _run_one(spec, label, prob, x0):
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.composite:
            if not isinstance(prob, CompositeOracle):
                raise ValueError(f"{spec.name} needs a composite fixture")
            traj, summary = catalog.evaluate_composite(spec, prob, x0)
            csv_text = _composite_csv(traj, prob)
        else:
            if isinstance(prob, CompositeOracle):
                raise ValueError(f"{spec.name} needs a smooth fixture")
            traj, summary = catalog.evaluate_smooth(spec, prob, x0)
            csv_text = traj.to_csv()
    summary["instance"] = label
    return summary, csv_text


def _composite_csv(traj, F) -> str:
    lines = ["iter,F_prox,subgrad_norm_prox"]
    for k in range(traj.n + 1):
        lines.append(f"{k},{float(traj.Fvals[k])!r},{F.min_subgrad_norm(traj.prox_points[k])!r}")
    return "\n".join(lines) + "\n"


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON config file.")
@click.option("--method", default=None, help="Catalog method (overrides config).")
@click.option("--n", "n", type=int, default=None)
@click.option("--h", "h", type=float, default=None)
@click.option("--t", "tseq", type=click.Choice(catalog.TSEQS), default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--fixture", multiple=True, help="Fixture path or builtin:<name>; repeatable.")
@click.option("--instances", type=int, default=None, help="Random instances when no fixture is given.")
@click.option("--problem", type=click.Choice(["quadratic", "lasso", "box"]), default=None)
@click.option("--seed", type=int, default=None, help="Seed (beats HDUAL_SEED and the config).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Write CSVs and summary.json here.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True, help="Instances run in parallel.")
def run(config_path, method, n, h, tseq, alpha, fixture, instances, problem, seed, out_dir, fmt, jobs):
    """Run a method on fixtures and compare the measured quantity with its bound."""
    cfg = _read_json(config_path) if config_path else {}
    for key, val in (("method", method), ("n", n), ("h", h), ("t", tseq), ("alpha", alpha),
                     ("instances", instances), ("problem", problem)):
        if val is not None:
            cfg[key] = val
    if fixture:
        cfg["fixture"] = list(fixture)
    seed = resolve_seed(cfg.get("seed"), seed)
    try:
        spec = _method_from_config(cfg)
        insts = list(_instances(cfg, spec.composite, seed))
    except FeasibilityError as exc:
        _fail(EXIT_FAIL, f"infeasible parameters: condition fails at index {exc.index}: {exc.condition}")
    except (KeyError, TypeError, ValueError, OSError, ShapeError) as exc:
        _fail(EXIT_USAGE, f"error: {exc}")
    try:
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            results = list(pool.map(lambda item: _run_one(spec, *item), insts))
    except DivergenceError as exc:
        _fail(EXIT_DIVERGED, f"diverged: {exc}")
    except ValueError as exc:
        _fail(EXIT_USAGE, f"error: {exc}")
    summaries = [r[0] for r in results]
    doc = {"method": spec.name, "n": spec.n, "seed": seed, "params": spec.params,
           "pass": all(s["pass"] for s in summaries), "runs": summaries}
    output_dir = out_dir if out_dir is not None else cfg.get("output")
    if output_dir:
        d = Path(output_dir)
        d.mkdir(parents=True, exist_ok=True)
        for i, (_, csv_text) in enumerate(results):
            (d / f"run_{i}.csv").write_text(csv_text)
        (d / "summary.json").write_text(dumps(doc))
    if fmt == "json":
        click.echo(dumps(doc), nl=False)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["instance", "quantity", "measured", "bound", "formula", "pass"])
        for s in summaries:
            for c in s["checks"]:
                writer.writerow([s["instance"], c["quantity"], repr(c["measured"]), repr(c["bound"]), c["formula"], c["pass"]])
        click.echo(buf.getvalue(), nl=False)
    sys.exit(EXIT_PASS if doc["pass"] else EXIT_FAIL)


# ---------------------------------------------------------------------------
# ode


@main.command()
@click.option("--family", type=click.Choice(["p", "r"]), default="p", show_default=True)
@click.option("--p", "p", type=float, default=2.0, show_default=True)
@click.option("--C", "C", type=float, default=0.5, show_default=True)
@click.option("--r", "r", type=float, default=5.0, show_default=True)
@click.option("--T", "T", type=float, default=10.0, show_default=True)
@click.option("--fixture", default=None, help="Quadratic fixture path or builtin:<name>.")
@click.option("--dim", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--slack", type=float, default=0.05, show_default=True, help="Multiplicative slack on the rates.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Write primal.csv and dual.csv here.")
def ode(family, p, C, r, T, fixture, dim, seed, slack, out_dir):
    """Integrate a primal/dual ODE pair and check both continuous-time rates."""
    seed = resolve_seed(None, seed)
    rng = np.random.default_rng(seed)
    try:
        kernel = continuous.ContinuousKernel.power(p, C, T) if family == "p" else continuous.ContinuousKernel.ratio(r, T)
        f = _load_problem(fixture) if fixture else random_quadratic(rng, d=dim, cond=1e2)
        if isinstance(f, CompositeOracle):
            raise ValueError("ode needs a smooth fixture")
    except (ValueError, OSError) as exc:
        _fail(EXIT_USAGE, f"error: {exc}")
    x0 = rng.normal(size=f.dim)
    try:
        tp = continuous.integrate_primal(kernel, f, x0)
        td = continuous.integrate_dual(kernel, f, x0)
    except IntegrationError as exc:
        _fail(EXIT_DIVERGED, f"integration failed: {exc}")
    pr, dr = continuous.primal_rate(tp), continuous.dual_rate(td)
    U, V = continuous.energy_U(tp), continuous.energy_V(td)
    doc = {
        "kernel": {"family": family, "p": p, "C": C, "r": r, "T": T},
        "seed": seed,
        "primal": dict(pr.to_dict(), **{"pass": pr.holds(slack), "energy_nonincreasing": continuous.is_nonincreasing(U)}),
        "dual": dict(dr.to_dict(), **{"pass": dr.holds(slack), "energy_nonincreasing": continuous.is_nonincreasing(V)}),
    }
    if family == "r":
        doc["sos_identity"] = {side: continuous.sos_identity_check(r, T, tr, side)["residual"]
                               for side, tr in (("primal", tp), ("dual", td))}
    ok = all(doc[s]["pass"] and doc[s]["energy_nonincreasing"] for s in ("primal", "dual"))
    doc["pass"] = ok
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "primal.csv").write_text(tp.to_csv())
        (d / "dual.csv").write_text(td.to_csv())
    click.echo(dumps(doc), nl=False)
    sys.exit(EXIT_PASS if ok else EXIT_FAIL)


# ---------------------------------------------------------------------------
# sfg-sweep


@main.command("sfg-sweep")
@click.option("--alpha", "alphas", type=float, multiple=True, help="Values of alpha (repeatable).")
@click.option("--n", "ns", type=int, multiple=True, help="Values of N (repeatable).")
def sfg_sweep(alphas, ns):
    """Tabulate N^2 R(alpha, N) for the equality-case SFG family members.

    Exploratory: R is the constant in min ||dF||^2 <= R L (F(y0) - F*); nothing is asserted.
    """
    alphas = alphas or (3.0, 3.5, 3.8, 4.0, 4.5)
    ns = ns or (10, 100, 1000)
    rows = []
    try:
        for a in alphas:
            for n in ns:
                ts = composite.sfg_equality_tseq(n, a)
                R = 2.0 * (a + 1.0) ** 2 / (a * ts.T[-1])
                rows.append({"alpha": a, "n": n, "T_N": float(ts.T[-1]), "R": R, "N2R": n * n * R})
    except ValueError as exc:
        _fail(EXIT_USAGE, f"error: {exc}")
    sfg_ref = [{"n": n, "N2R": 50.0 * n * n / ((n + 2.0) * (n + 3.0))} for n in ns]
    click.echo(dumps({"experiment": "equality-case family members", "rows": rows, "sfg_alpha4": sfg_ref}), nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
