"""Command-line driver: ``legendrix <subcommand> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure (a
``diagnostic.json`` is written to the output directory).
"""

from __future__ import annotations

import functools
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import io, lie
from .checks import CHECKS, roundtrip
from .config import ConfigError, load_config
from .forward import ForwardError, spectral_curve
from .inverse import InversionError, invert_1d
from .morse import MorseConfig, QuadraticForm, genericity_sample, morse_report
from .potentials import Potential
from .quantum import ground_energy_scan, weyl_count
from .reduction import get_model

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class NumericalFailure(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


def threads() -> int:
    try:
        return max(1, int(os.environ.get("LEGENDRIX_THREADS", "1")))
    except ValueError:
        return 1


def _fail(out, command, exc, code):
    if code == EXIT_NUMERIC:
        io.write_json(Path(out) / "diagnostic.json", {
            "command": command,
            "error_type": type(exc).__name__,
            "message": str(exc),
            "report": getattr(exc, "report", {}),
        })
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def guarded(command):
    """Map configuration and numerical errors onto exit codes."""
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            out = kwargs.get("out") or "out"
            try:
                return fn(*args, **kwargs)
            except (ConfigError, io.SchemaError, click.BadParameter) as exc:
                _fail(out, command, exc, EXIT_CONFIG)
            except (NumericalFailure, ForwardError, InversionError, np.linalg.LinAlgError, FloatingPointError) as exc:
                _fail(out, command, exc, EXIT_NUMERIC)
        return wrapper
    return deco


def common(fn):
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Random seed.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="JSON experiment configuration.")(fn)
    return fn


def experiment_options(fn):
    fn = click.option("--mu-n", type=int, default=None)(fn)
    fn = click.option("--mu-hi", type=float, default=None)(fn)
    fn = click.option("--mu-lo", type=float, default=None)(fn)
    fn = click.option("--potential", default=None, help="zero | affine | arctan | cosine | table")(fn)
    fn = click.option("--model", default=None, help="sphere_s1 | cp2_su2")(fn)
    return fn


def _experiment(config_path, seed, out, inversion=False, **kw):
    cfg = load_config(config_path, seeds=seed, output_dir=out, **kw)
    cfg.validate(inversion=inversion)
    return cfg


@click.group()
def main():
    """Spectral invariants of equivariant Schrodinger operators: forward map, inversion and checks."""


@main.command()
@click.option("--algebra", "name", type=click.Choice(["su2", "su3"]), default="su2")
@common
@guarded("algebra")
def algebra(name, config_path, seed, out):
    """Structure constants, Killing form and chamber of su2/su3."""
    alg = lie.build_algebra(name)
    out = Path(out or "out")
    c = alg.structure_constants
    nz = [[int(i), int(j), int(k), float(c[i, j, k])] for i, j, k in zip(*np.nonzero(np.abs(c) > 1e-15))]
    payload = {
        "name": alg.name,
        "dim": alg.dim,
        "structure_constants_nonzero": nz,
        "killing": alg.killing,
        "cartan_indices": list(alg.cartan_indices),
        "chamber": alg.chamber,
        "jacobi_residual": lie.jacobi_residual(alg),
    }
    io.write_json(out / f"algebra_{name}.json", payload)
    click.echo(f"{name}: dim={alg.dim} killing diag={np.diag(alg.killing).tolist()} "
               f"jacobi={payload['jacobi_residual']:.1e}")


def _parse_form(spec, dim, seed):
    if spec == "identity":
        return QuadraticForm(np.eye(dim))
    if spec == "random":
        from .morse import random_form
        return random_form(dim, np.random.default_rng(seed))
    if spec.startswith("diag:"):
        vals = [float(x) for x in spec[5:].split(",")]
        if len(vals) != dim:
            raise ConfigError(f"diag form needs {dim} entries")
        try:
            return QuadraticForm(np.diag(vals))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError("form must be 'identity', 'random' or 'diag:a,b,...'")


def _parse_floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


@main.command()
@click.option("--algebra", "name", type=click.Choice(["su2", "su3"]), default="su2")
@click.option("--form", default="diag:1,2,3", help="identity | random | diag:a,b,...")
@click.option("--mu", default="1.0", help="Chamber coordinates, comma separated.")
@click.option("--seeds", type=int, default=64, help="Multistart seeds.")
@common
@guarded("morse")
def morse(name, form, mu, seeds, config_path, seed, out):
    """Critical points and Morse verdict of a quadratic form on an orbit."""
    alg = lie.build_algebra(name)
    seed = seed or 0
    if seeds < 1:
        raise ConfigError("--seeds must be >= 1")
    mu_v = _parse_floats(mu)
    if not lie.in_chamber(alg, mu_v) or len(mu_v) != alg.rank:
        raise ConfigError(f"mu={mu_v} is not strictly inside the {name} chamber")
    B = _parse_form(form, alg.dim, seed)
    rep = morse_report(alg, B, mu_v, MorseConfig(seeds=seeds, seed=seed))
    io.write_json(Path(out or "out") / "morse.json", rep)
    click.echo(f"critical points: {len(rep['records'])}  is_morse={rep['is_morse']}  "
               f"distinct_values={rep['distinct_values']}")


DEFAULT_ORBITS = {"su2": [[1.0], [2.0], [0.5]], "su3": [[1.0, 1.0], [0.5, 2.0]]}


@main.command()
@click.option("--algebra", "name", type=click.Choice(["su2", "su3"]), default="su2")
@click.option("--forms", type=int, default=100)
@click.option("--controls/--no-controls", default=True, help="Inject degenerate control forms.")
@common
@guarded("genericity")
def genericity(name, forms, controls, config_path, seed, out):
    """Fraction of random positive-definite forms that are Morse on generic orbits."""
    if forms < 1:
        raise ConfigError("--forms must be >= 1")
    alg = lie.build_algebra(name)
    ctrl = [np.eye(alg.dim)] if controls else []
    if controls and name == "su2":
        ctrl.append(np.diag([1.0, 1.0, 2.0]))
    rep = genericity_sample(alg, forms, DEFAULT_ORBITS[name], seed=seed or 0, controls=ctrl)
    io.write_json(Path(out or "out") / f"genericity_{name}.json", rep)
    click.echo(f"fraction_morse={rep['fraction_morse']} failures={len(rep['failures'])}")


@main.command()
@experiment_options
@common
@guarded("forward")
def forward(model, potential, mu_lo, mu_hi, mu_n, config_path, seed, out):
    """Compute the spectral curve F(mu) and write curve.csv / curve.json."""
    cfg = _experiment(config_path, seed, out, model=model, potential=potential, mu_lo=mu_lo, mu_hi=mu_hi, mu_n=mu_n)
    m = get_model(cfg.model)
    curve = spectral_curve(m, cfg.make_potential(), cfg.mu_values(), cfg.forward_config())
    out = Path(cfg.output_dir)
    curve.to_csv(out / "curve.csv")
    curve.to_json(out / "curve.json")
    n_ok = int(np.sum([s == "ok" for s in curve.status]))
    if n_ok == 0:
        raise NumericalFailure("no grid point converged", curve.diagnostics)
    ratio = curve.F / curve.mu**2
    click.echo(f"{cfg.model}: {n_ok}/{len(curve)} points, F/mu^2 relative spread "
               f"{np.nanmax(ratio) / np.nanmin(ratio) - 1:.3e}")


def _truth_from_curve(curve):
    try:
        return Potential(curve.potential["kind"], curve.potential.get("params") or {})
    except (KeyError, ValueError):
        return None


@main.command()
@click.option("--curve", "curve_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="curve.json written by 'forward'.")
@click.option("--route-tol", type=float, default=None)
@common
@guarded("invert")
def invert(curve_path, route_tol, config_path, seed, out):
    """Recover V_red on the visited window from a spectral curve."""
    from .forward import SpectralCurve

    curve = SpectralCurve.from_json(curve_path)
    cfg = load_config(config_path, model=curve.model, output_dir=out)
    if route_tol is not None:
        cfg.tolerances["route_tol"] = route_tol
    cfg.validate(inversion=True)
    res = invert_1d(curve, get_model(curve.model), cfg.inverse_options(), truth=_truth_from_curve(curve))
    out = Path(cfg.output_dir)
    res.to_csv(out / "reconstruction.csv")
    res.to_json(out / "reconstruction.json")
    msg = f"window=({res.window[0]:.6g}, {res.window[1]:.6g}) route_diff={res.residuals['route_max_diff']:.2e}"
    if res.comparison:
        msg += f" sup_error={res.comparison['sup_error']:.3e}"
    click.echo(msg)


@main.command("roundtrip")
@experiment_options
@common
@guarded("roundtrip")
def roundtrip_cmd(model, potential, mu_lo, mu_hi, mu_n, config_path, seed, out):
    """Forward map then inversion; exit 0 when the sup-error is within tolerance."""
    cfg = _experiment(config_path, seed, out, inversion=True, model=model, potential=potential or "affine",
                      mu_lo=mu_lo, mu_hi=mu_hi, mu_n=mu_n)
    pot = cfg.make_potential()
    if cfg.model == "cp2_su2" and potential is None and cfg.potential["kind"] == "affine":
        pot = Potential("arctan")
    g = cfg.mu_grid
    curve, res, _ = roundtrip(cfg.model, int(g["n"]), cfg.seeds, pot, (float(g["lo"]), float(g["hi"])),
                              cfg.forward_config(), cfg.inverse_options())
    out = Path(cfg.output_dir)
    curve.to_json(out / "curve.json")
    res.to_json(out / "reconstruction.json")
    res.to_csv(out / "reconstruction.csv")
    sup = res.comparison["sup_error"]
    tol = cfg.roundtrip_tol()
    click.echo(f"sup-error {sup:.3e} (tol {tol:.1e}) on window ({res.window[0]:.6g}, {res.window[1]:.6g})")
    if not sup <= tol:
        raise NumericalFailure(f"roundtrip sup-error {sup:.3e} exceeds {tol:.1e}",
                               {"comparison": res.comparison, "residuals": res.residuals})


@main.command()
@click.option("--mu", type=float, default=1.0)
@click.option("--k-list", default="20,40,80,160", help="Comma-separated k = 1/hbar values.")
@click.option("--potential", default="zero", help="zero | cosine | affine")
@click.option("--energy", "E", type=float, default=4.0, help="Energy for the Weyl count.")
@click.option("--weyl-k", default="50,100,200", help="k ladder for the Weyl count.")
@common
@guarded("quantum")
def quantum(mu, k_list, potential, E, weyl_k, config_path, seed, out):
    """Ground-energy scan and Weyl counts on the rotating sphere."""
    try:
        V = Potential(potential)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ks = [int(x) for x in _parse_floats(k_list)]
    if mu <= 0:
        raise ConfigError("--mu must be > 0")
    out = Path(out or "out")
    scan = ground_energy_scan(V, mu, ks)
    scan.to_csv(out / "quantum_scan.csv")
    rows = [weyl_count(V, mu, int(k), E) for k in _parse_floats(weyl_k)]
    io.write_csv(out / "weyl.csv", ("E", "qcount", "classical", "relerr"),
                 [(r.E, r.quantum, r.classical, r.rel_error) for r in rows])
    click.echo(f"slope={scan.slope:.4f} weyl relerr={[f'{r.rel_error:.2e}' for r in rows]}")


def _run_check(item):
    number, seed = item
    title, fn = CHECKS[number]
    summary, artifacts = fn(seed=seed)
    return number, title, summary, artifacts


def _write_artifact(path, payload):
    if isinstance(payload, tuple):
        header, rows = payload
        io.write_csv(path, header, rows)
    else:
        io.write_json(path, payload)


def _read_artifact(path):
    if path.suffix == ".csv":
        io.read_csv(path)
    else:
        io.read_json(path)


@main.command()
@click.option("--only", default=None, help="Comma-separated criterion numbers to run (default: all).")
@common
@guarded("report")
def report(only, config_path, seed, out):
    """Run the fast checks and aggregate a pass/fail summary per criterion."""
    seed = seed or 0
    out = Path(out or "out")
    art_dir = out / "artifacts"
    numbers = sorted(CHECKS) if only is None else [int(x) for x in _parse_floats(only)]
    unknown = [n for n in numbers if n not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}")

    # refuse to mix with artifacts written under another schema
    previous = None
    if (out / "report.json").exists():
        previous = io.read_json(out / "report.json")
    for p in sorted(out.glob("*.json")):
        if p.name != "report.json":
            io.read_json(p)

    items = [(n, seed) for n in numbers]
    if threads() > 1:
        with ProcessPoolExecutor(max_workers=threads()) as pool:
            results = list(pool.map(_run_check, items))
    else:
        results = [_run_check(i) for i in items]

    criteria = []
    digest = hashlib.sha256()
    for number, title, summary, artifacts in sorted(results, key=lambda r: r[0]):
        names = []
        for name, payload in sorted(artifacts.items()):
            path = art_dir / name
            _write_artifact(path, payload)
            _read_artifact(path)
            digest.update(name.encode())
            digest.update(path.read_bytes())
            names.append(f"artifacts/{name}")
        criteria.append({"criterion": number, "title": title, "passed": summary.pop("passed"),
                         "details": summary, "artifacts": names})
    checks_digest = digest.hexdigest()
    if previous is not None and previous.get("checks_digest") is not None:
        same = previous["checks_digest"] == checks_digest
        det = {"criterion": 10, "title": "determinism", "passed": same,
               "details": {"compared_with": "previous report.json"}, "artifacts": []}
    else:
        det = {"criterion": 10, "title": "determinism", "passed": None,
               "details": {"status": "pending: run report again into the same directory to compare"},
               "artifacts": []}
    criteria.append(det)
    payload = {"seed": seed, "criteria": criteria, "checks_digest": checks_digest}
    io.write_json(out / "report.json", payload)
    for c in criteria:
        status = "PENDING" if c["passed"] is None else ("PASS" if c["passed"] else "FAIL")
        click.echo(f"[{status}] {c['criterion']:>2} {c['title']}")


if __name__ == "__main__":
    main()
