"""Command-line front end tying the fiberlab modules together.

One subcommand per module area: structured inputs travel as JSON, time
series come back as CSV, and every failure is serialized to standard error
as ``{"error": code, "message": ...}`` with exit status 2.  Floats print
through ``%.17g`` so identical seeds and flags reproduce output files byte
for byte.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import click
import numpy as np

from . import cech
from .circle_diffeo import random_diffeo, retract, rotation, compose
from .csf import CurveState, flow_fibering, flow_until
from .errors import (
    BadConfig,
    FiberlabError,
    SelftestFailure,
    UnknownSubcommand,
)
from .fields import (
    FieldGrid,
    field_from_function,
    is_projectable,
    l2_inner,
    l2_norm,
    model_points,
    split_field,
)
from .geometry import get_model, qconj, qmul, qnormalize
from .moduli import (
    Fibering,
    arclength_weights,
    brute_center,
    core_membership,
    fiber_center,
    model_fibering,
    refine,
    slope,
    slope_fibering,
)

__all__ = ["main", "entrypoint"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _emit_csv(header, rows, out_path: Optional[str]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out_path is None:
        click.echo(text, nl=False)
    else:
        Path(out_path).write_text(text)


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BadConfig(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadConfig(f"{path} is not valid JSON: {exc}") from exc


def _write_json(payload, out_path: Optional[str]) -> None:
    text = json.dumps(payload)
    if out_path is None:
        click.echo(text)
    else:
        Path(out_path).write_text(text + "\n")


@click.group(name="fiberlab")
def cli() -> None:
    """Numerical toolkit for circle fiberings of low-dimensional spaces."""


# --- circle diffeomorphisms --------------------------------------------------------


@cli.command("heatflow")
@click.option("--grid", default=256, show_default=True, type=click.IntRange(min=16),
              help="Displacement samples; a power of two.")
@click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--amplitude", default=0.1, show_default=True, type=float)
@click.option("--t-samples", default=11, show_default=True, type=click.IntRange(min=2))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="CSV destination; stdout when omitted.")
def heatflow_cmd(grid, seed, amplitude, t_samples, out_path):
    """Trace the heat retraction of one seeded random circle diffeomorphism."""
    rng = np.random.default_rng(seed)
    f = random_diffeo(rng, n=grid, amplitude=amplitude)
    rows = []
    for t in np.linspace(0.0, 1.0, t_samples):
        g = retract(f, float(t))
        rows.append((float(t), float(np.abs(g.disp).max()), g.min_derivative()))
    _emit_csv(("t", "sup_displacement", "min_derivative"), rows, out_path)


# --- cocycles and classification ----------------------------------------------------


@cli.command("euler")
@click.option("--cocycle", "cocycle_path", required=True,
              type=click.Path(dir_okay=False))
def euler_cmd(cocycle_path):
    """Euler number of transition data on the two-cap sphere cover."""
    try:
        text = Path(cocycle_path).read_text()
    except OSError as exc:
        raise BadConfig(f"cannot read {cocycle_path}: {exc}") from exc
    tau = cech.cocycle_from_json(text)
    click.echo(str(cech.euler_class(tau)))


@cli.command("classify")
@click.option("--base", required=True, help="One of S1, T2, S2.")
@click.option("--euler", "euler_number", required=True, type=int)
def classify_cmd(base, euler_number):
    """Total space and core of the fibering with this base and twisting."""
    rec = cech.classify(base, euler_number)
    click.echo(f"total {rec.total_space}")
    click.echo(f"core {rec.core}")


# --- fibration geometry ---------------------------------------------------------------


@cli.command("transport")
@click.option("--model", "model_name", required=True,
              help="flat2, flat3, hopf, or lensE.")
@click.option("--from", "from_path", required=True, type=click.Path(dir_okay=False),
              help="JSON array: the total-space start point.")
@click.option("--to", "to_path", required=True, type=click.Path(dir_okay=False),
              help="JSON array: the target base point.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def transport_cmd(model_name, from_path, to_path, out_path):
    """Horizontally transport a point over the base geodesic to a target."""
    model = get_model(model_name)
    start = np.asarray(_load_json(from_path), dtype=float)
    target = np.asarray(_load_json(to_path), dtype=float)
    if start.shape != (model.ambient_dim,):
        raise BadConfig(
            f"{model.name} start points need {model.ambient_dim} coordinates"
        )
    if target.shape != (model.base_ambient_dim,):
        raise BadConfig(
            f"{model.name} base points need {model.base_ambient_dim} coordinates"
        )
    if not model.name.startswith("flat"):
        if abs(float(np.linalg.norm(start)) - 1.0) > 1e-6:
            raise BadConfig("total-space point must lie on the unit sphere")
        if abs(float(np.linalg.norm(target)) - 1.0) > 1e-6:
            raise BadConfig("base point must lie on the unit two-sphere")
    start = model.canonicalize(start)
    target = model.base_canonicalize(target)
    moved = model.horizontal_transport(start, target)
    _write_json([float(v) for v in moved], out_path)


# --- vector fields -----------------------------------------------------------------------


@cli.command("split-field")
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--shadow-out", "shadow_path", default=None,
              type=click.Path(dir_okay=False))
@click.option("--fair-out", "fair_path", default=None,
              type=click.Path(dir_okay=False))
@click.option("--report", is_flag=True, help="Print norms and the cross pairing.")
def split_field_cmd(in_path, shadow_path, fair_path, report):
    """Split a sampled field into its projectable shadow and fair remainder."""
    grid = FieldGrid.from_json(_load_json(in_path))
    shadow, fair = split_field(grid)
    if shadow_path:
        _write_json(shadow.to_json(), shadow_path)
    if fair_path:
        _write_json(fair.to_json(), fair_path)
    if report or (shadow_path is None and fair_path is None):
        n_in, n_sh, n_fair = l2_norm(grid), l2_norm(shadow), l2_norm(fair)
        denom = max(n_sh * n_fair, 1e-300)
        ok, spread = is_projectable(shadow)
        for key, val in (
            ("input_norm", n_in),
            ("shadow_norm", n_sh),
            ("fair_norm", n_fair),
            ("cross_normalized", l2_inner(shadow, fair) / denom),
            ("shadow_spread", spread),
            ("shadow_projectable", ok),
        ):
            click.echo(f"{key} {_fmt(val)}")


# --- moduli -------------------------------------------------------------------------------


@cli.command("straighten")
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False),
              help="Fibering JSON: {\"model\": id, \"fibers\": [[...]]}.")
@click.option("--model", "model_name", default=None,
              help="Consistency check against the file's model id.")
@click.option("--passes", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--measure", default="arclength", show_default=True,
              type=click.Choice(["arclength", "uniform"]))
@click.option("--report", "report_path", default=None,
              type=click.Path(dir_okay=False), help="Residual CSV per pass.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Straightened fibering JSON.")
def straighten_cmd(in_path, model_name, passes, measure, report_path, out_path):
    """Iteratively replace each fiber by the model fiber over its center."""
    fib = Fibering.from_json(_load_json(in_path))
    if model_name is not None and model_name != fib.model_name:
        raise BadConfig(
            f"--model {model_name} disagrees with the file's {fib.model_name}"
        )
    result = refine(fib, passes=passes, measure=measure)
    rows = [(i + 1, r) for i, r in enumerate(result.residuals)]
    _emit_csv(("pass", "residual"), rows, report_path)
    if out_path:
        _write_json(result.fibering.to_json(), out_path)


@cli.command("slope")
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--model", "model_name", default=None,
              help="Required when the input is a bare sample array.")
def slope_cmd(in_path, model_name):
    """Primitive winding vector of a flat fibering or one fiber loop."""
    doc = _load_json(in_path)
    if isinstance(doc, dict) and "fibers" in doc:
        result = slope(Fibering.from_json(doc))
    elif isinstance(doc, dict) and "samples" in doc:
        name = doc.get("model", model_name)
        result = slope(np.asarray(doc["samples"], dtype=float), name)
    elif isinstance(doc, list):
        result = slope(np.asarray(doc, dtype=float), model_name)
    else:
        raise BadConfig("slope input must be a fibering, a shape, or an array")
    click.echo(",".join(str(int(v)) for v in result))


@cli.command("karcher")
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--model", "model_name", default=None,
              help="Required when the input is a bare sample array.")
@click.option("--measure", default="arclength", show_default=True,
              type=click.Choice(["arclength", "uniform"]))
@click.option("--brute", is_flag=True, help="Cross-check with the grid search.")
@click.option("--nodes", default=400, show_default=True,
              type=click.IntRange(min=16))
def karcher_cmd(in_path, model_name, measure, brute, nodes):
    """Karcher center of a sampled fiber loop's base projection."""
    doc = _load_json(in_path)
    samples = None
    if isinstance(doc, dict):
        model_name = doc.get("model", model_name)
        if "samples" in doc:
            samples = np.asarray(doc["samples"], dtype=float)
    elif isinstance(doc, list):
        samples = np.asarray(doc, dtype=float)
    if samples is None or model_name is None:
        raise BadConfig("karcher needs loop samples plus a model id")
    model = get_model(model_name)
    center = fiber_center(model, samples, measure=measure)
    payload = {"center": [float(v) for v in center]}
    if brute:
        pts = model.project(samples)
        w = arclength_weights(model, samples) if measure == "arclength" else None
        bc = brute_center(model, pts, w, nodes=nodes)
        payload["brute"] = [float(v) for v in bc]
        payload["distance"] = float(model.base_distance(center[None], bc[None])[0])
    click.echo(json.dumps(payload))


# --- curve-shortening flow ------------------------------------------------------------------


def _parse_slope(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise BadConfig(f"slope must be 'p,q', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise BadConfig(f"slope must be two integers, got {text!r}") from exc


@cli.command("csf")
@click.option("--slope", "slope_text", default="1,2", show_default=True,
              help="Primitive winding vector p,q of the fibers.")
@click.option("--fibers", default=16, show_default=True, type=click.IntRange(min=2))
@click.option("--points", default=512, show_default=True, type=click.IntRange(min=8))
@click.option("--amp", default=0.1, show_default=True, type=float,
              help="Shear displacement amplitude of the initial fibering.")
@click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0),
              help="Draws the shear phase.")
@click.option("--cfl", default=0.2, show_default=True, type=float)
@click.option("--kappa-tol", default=1e-3, show_default=True, type=float,
              help="Stop once every curvature sample is below this.")
@click.option("--t-final", default=1.0, show_default=True, type=float)
@click.option("--record-every", default=500, show_default=True,
              type=click.IntRange(min=1))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="CSV destination; stdout when omitted.")
def csf_cmd(slope_text, fibers, points, amp, seed, cfl, kappa_tol, t_final,
            record_every, out_path):
    """Relax a sheared slope fibering by curve-shortening flow."""
    p, q = _parse_slope(slope_text)
    phase = float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi))
    fib = slope_fibering(p, q, fibers, points, amp=amp, phase=phase)
    _, records = flow_fibering(fib, t_final, cfl=cfl, record_every=record_every,
                               kappa_tol=kappa_tol)
    rows = [(r.t, r.length, r.max_kappa, r.min_pair_dist) for r in records]
    _emit_csv(("t", "length", "max_kappa", "min_pair_dist"), rows, out_path)


# --- selftest ----------------------------------------------------------------------------


def _check_heatflow(seed: int) -> None:
    rng = np.random.default_rng(seed)
    f = random_diffeo(rng, n=256, amplitude=0.25)
    end = retract(f, 1.0)
    if abs(end.disp.mean() - f.disp.mean()) > 1e-10 or end.oscillation() > 1e-10:
        raise AssertionError("retraction endpoint is not the mean rotation")
    rot = rotation(0.23, n=256)
    a = retract(compose(rot, f), 0.5)
    b = compose(rot, retract(f, 0.5))
    if float(np.abs(a.disp - b.disp).max()) > 1e-8:
        raise AssertionError("retraction fails rotation equivariance")
    for t in (0.0, 0.3, 0.7, 1.0):
        if retract(f, t).min_derivative() <= 0.0:
            raise AssertionError("retraction broke orientation")


def _check_cech(seed: int) -> None:
    rng = np.random.default_rng(seed)
    cover = cech.model_cover("S2", 64)
    tau = cech.clutching_cocycle(cover, 2, perturbation=0.05)
    if cech.euler_class(tau) != 2:
        raise AssertionError("clutching degree misread")
    for _ in range(5):
        tau2 = cech.coboundary_act(tau, cech.random_cochain(cover, rng))
        if cech.euler_class(tau2) != 2:
            raise AssertionError("euler class moved under a coboundary")
    rows = [
        ("S1", 0, "T2"), ("T2", 0, "T3"), ("T2", 3, "MT_3"),
        ("S2", 0, "S2 x S1"), ("S2", 2, "L(2,1)"), ("S2", 5, "L(5,1)"),
    ]
    for base, e, total in rows:
        if cech.classify(base, e).total_space != total:
            raise AssertionError(f"classification row ({base}, {e}) wrong")


def _check_submersion(seed: int) -> None:
    rng = np.random.default_rng(seed)
    for name in ("flat2", "flat3", "hopf", "lens3"):
        model = get_model(name)
        for _ in range(50):
            p = model.random_point(rng)
            v = model.random_base_tangent(rng, model.project(p))
            h = model.horizontal_lift_vec(p, v).horizontal
            up = float(model.total_norm(p, h))
            down = float(model.base_norm(model.project(p), v))
            if abs(up - down) > 1e-8 * max(1.0, down):
                raise AssertionError(f"submersion norm equality fails on {name}")


def _check_transport(seed: int) -> None:
    rng = np.random.default_rng(seed)
    model = get_model("hopf")
    for _ in range(10):
        p = model.random_point(rng)
        x = model.project(p)
        v = model.random_base_tangent(rng, x)
        v = v / float(model.base_norm(x, v)) * 0.5
        target = model.base_geodesic(x, v)
        moved = model.horizontal_transport(p, target)
        err = float(np.linalg.norm(model.project(moved) - target))
        if err > 1e-9:
            raise AssertionError("transport missed its base target")


def _check_splitting(seed: int) -> None:
    rng = np.random.default_rng(seed)
    pts = model_points("flat2", 16, 32)
    vecs = rng.normal(size=pts.shape)
    grid = FieldGrid("flat2", pts, vecs)
    shadow, fair = split_field(grid)
    recon = float(np.abs(shadow.vectors + fair.vectors - grid.vectors).max())
    if recon > 1e-12:
        raise AssertionError("splitting does not recompose")
    ok, _ = is_projectable(shadow)
    if not ok:
        raise AssertionError("shadow is not projectable")
    denom = max(l2_norm(shadow) * l2_norm(fair), 1e-300)
    if abs(l2_inner(shadow, fair)) / denom > 1e-8:
        raise AssertionError("shadow and fair parts are not orthogonal")


def _check_karcher(seed: int) -> None:
    rng = np.random.default_rng(seed)
    model = get_model("hopf")
    q0 = model.random_point(rng)
    theta = 2.0 * np.pi * np.arange(24) / 24
    ring = qmul(q0, np.stack([np.cos(theta), np.sin(theta),
                              np.zeros(24), np.zeros(24)], axis=-1))
    ring = qnormalize(ring + 0.05 * rng.normal(size=ring.shape))
    center = fiber_center(model, ring)
    pts = model.project(ring)
    w = arclength_weights(model, ring)
    bc = brute_center(model, pts, w, nodes=120)
    spread = float(np.max(model.base_distance(center[None], pts)))
    cell = 2.0 * (1.05 * spread + 1e-6) / 119
    if float(model.base_distance(center[None], bc[None])[0]) > 2.0 * cell:
        raise AssertionError("fixed-point and grid centers disagree")


def _check_straighten(seed: int) -> None:
    fib = model_fibering("flat2", 8, 64)
    result = refine(fib, passes=2)
    if result.residuals[-1] > 1e-12:
        raise AssertionError("model fibering is not a straightening fixed point")
    if slope(result.fibering) != (0, 1):
        raise AssertionError("straightening changed the slope")


def _check_csf(seed: int) -> None:
    r0, t_final = 0.25, 0.02
    t = 2.0 * np.pi * np.arange(128) / 128
    pts = np.stack([0.5 + r0 * np.cos(t), 0.5 + r0 * np.sin(t)], axis=-1)
    final, _ = flow_until(CurveState(pts, np.zeros(2)), t_final)
    radii = np.linalg.norm(final.points - 0.5, axis=1)
    expected = math.sqrt(r0 * r0 - 2.0 * t_final)
    if abs(float(radii.mean()) - expected) / expected > 1e-2:
        raise AssertionError("shrinking circle misses the exact radius law")


def _check_core_orbit(seed: int) -> None:
    rng = np.random.default_rng(seed)
    model = get_model("hopf")
    fib = model_fibering("hopf", 4, 32)
    q1 = model.random_point(rng)
    q2 = model.random_point(rng)
    pushed = qmul(q1, qmul(fib.fibers, qconj(q2)))
    family = core_membership("hopf", pushed)
    if family is None or family.chirality != "right":
        raise AssertionError("pushed family lost its right coset structure")
    want = qmul(q2, qmul(np.array([0.0, 1.0, 0.0, 0.0]), qconj(q2)))[1:]
    if float(np.linalg.norm(family.direction - want)) > 1e-8:
        raise AssertionError("core direction disagrees with the quaternion law")


_SELFTESTS: list[tuple[str, Callable[[int], None]]] = [
    ("heatflow retraction", _check_heatflow),
    ("cocycle euler class", _check_cech),
    ("riemannian submersion", _check_submersion),
    ("horizontal transport", _check_transport),
    ("field splitting", _check_splitting),
    ("karcher agreement", _check_karcher),
    ("straightening fixed point", _check_straighten),
    ("curve shortening benchmark", _check_csf),
    ("core orbit direction", _check_core_orbit),
]


@cli.command("selftest")
@click.option("--seed", default=7, show_default=True, type=click.IntRange(min=0))
def selftest_cmd(seed):
    """Run one headline invariant per module and print a pass/fail table."""
    failed = 0
    for name, check in _SELFTESTS:
        try:
            check(seed)
        except Exception as exc:
            failed += 1
            click.echo(f"FAIL  {name}  ({exc})")
        else:
            click.echo(f"PASS  {name}")
    if failed:
        raise SelftestFailure(f"{failed} of {len(_SELFTESTS)} checks failed")
    click.echo(f"all {len(_SELFTESTS)} checks passed")


# --- entry points -----------------------------------------------------------------------


def main(argv: Optional[list] = None) -> int:
    """Run the CLI; returns the exit code instead of raising SystemExit."""
    try:
        cli.main(args=argv, prog_name="fiberlab", standalone_mode=False)
    except FiberlabError as exc:
        click.echo(json.dumps(exc.to_json()), err=True)
        return 2
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        message = exc.format_message()
        if isinstance(exc, click.UsageError) and "No such command" in message:
            wrapped: FiberlabError = UnknownSubcommand(message)
        else:
            wrapped = BadConfig(message)
        click.echo(json.dumps(wrapped.to_json()), err=True)
        return 2
    except click.Abort:
        return 2
    return 0


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
