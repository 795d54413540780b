"""Scenario runner: ``fredfam run <config> [--out FILE] [--plot FILE]``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .calc import fredholm_spectrum, index_via_roots, poly_apply, spectral_map_check
from .errors import FredfamError, HypothesisViolation, InconclusiveError, SchemaError
from .family import (
    ClosureReport,
    IndexVector,
    family_index,
    homotopy_invariance_check,
    ideal_closure_check,
    linear_path,
)
from .schema import (
    build_family,
    build_grid,
    build_poly,
    build_sequence,
    build_tolerances,
    read_config,
    parse_scenario,
)
from .weyl import (
    GridSet,
    essential_spectrum_family,
    limit_scenario_check,
    semicontinuity_check,
    weyl_spectrum_family,
)

SCHEMA_VERSION = 1
EXIT_CODES = {"pass": 0, "fail": 1, "inconclusive": 2, "error": 3}


@dataclass
class RunResult:
    scenario: str
    kind: str
    status: str
    payload: dict = field(default_factory=dict)
    detail: str = ""
    provenance: dict = field(default_factory=dict)
    plot: object = None  # GridSet or complex ndarray, never serialized

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "kind": self.kind,
            "status": self.status,
            "detail": self.detail,
            "payload": self.payload,
            "provenance": self.provenance,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def _index_payload(iv: IndexVector) -> dict:
    return {str(k): v for k, v in iv.entries.items()}


def _pair(z: complex) -> list[float]:
    return [round(float(z.real), 12) + 0.0, round(float(z.imag), 12) + 0.0]


def rle_mask(gs: GridSet) -> list[list[int]]:
    """Run-length encoding of the membership mask in row-major order: [[value, run], ...]."""
    flat = gs.mask().ravel().astype(int)
    runs: list[list[int]] = []
    for v in flat:
        if runs and runs[-1][0] == v:
            runs[-1][1] += 1
        else:
            runs.append([int(v), 1])
    return runs


def _gridset_payload(gs: GridSet) -> dict:
    g = gs.grid
    return {
        "grid": {"re": [g.re_min, g.re_max], "im": [g.im_min, g.im_max], "h": g.h, "shape": list(g.shape)},
        "points": [_pair(z) for z in gs.complex_points()],
        "count": len(gs),
        "mask_rle": rle_mask(gs),
    }


def _status(ok: bool, expect_failure: bool) -> str:
    return "pass" if ok != expect_failure else "fail"


def _run_index(cfg, tol, eps):
    fam = build_family(cfg.family)
    iv = family_index(fam, complex(*cfg.lam), tol)
    payload = {"index": _index_payload(iv)}
    ok = cfg.expect is None or {int(k): v for k, v in cfg.expect.items()} == iv.entries
    return _status(ok, cfg.expect_failure), payload, None


def _run_index_poly(cfg, tol, eps):
    fam, p = build_family(cfg.family), build_poly(cfg.poly)
    via_roots = index_via_roots(fam, p, tol)
    direct = family_index(poly_apply(fam, p), 0.0, tol)
    payload = {"via_roots": _index_payload(via_roots), "via_family_index": _index_payload(direct)}
    ok = via_roots == direct
    if cfg.expect is not None:
        ok = ok and {int(k): v for k, v in cfg.expect.items()} == via_roots.entries
    return _status(ok, cfg.expect_failure), payload, None


def _run_spectral_map(cfg, tol, eps, theta_samples):
    fam, p = build_family(cfg.family), build_poly(cfg.poly)
    n = theta_samples or 2048
    res = spectral_map_check(fam, p, n)
    payload = {"hausdorff": res.distance, "tolerance": res.tolerance, "theta_samples": n}
    curve = fredholm_spectrum(poly_apply(fam, p), n)
    return _status(res.passed, cfg.expect_failure), payload, curve


def _run_weyl(cfg, tol, eps):
    fam, grid = build_family(cfg.family), build_grid(cfg.grid)
    weyl = weyl_spectrum_family(fam, grid, tol)
    ess = essential_spectrum_family(fam, grid, tol)
    payload = {"weyl": _gridset_payload(weyl), "essential_count": len(ess)}
    return _status(ess.issubset(weyl), cfg.expect_failure), payload, weyl


def _run_homotopy(cfg, tol, eps):
    if cfg.path is not None:
        path = [build_family(f) for f in cfg.path]
        fam0, fam1 = path[0], path[-1]
    else:
        fam0, fam1 = build_family(cfg.start), build_family(cfg.end)
        path = linear_path(fam0, fam1, cfg.t)
    rep = homotopy_invariance_check(fam0, fam1, path, cfg.t, complex(*cfg.lam), tol)
    payload = {"fredholm_path": rep.fredholm_path}
    if rep.fredholm_path:
        payload["index_start"] = _index_payload(rep.index_start)
        payload["index_end"] = _index_payload(rep.index_end)
        return _status(rep.invariant, cfg.expect_failure), payload, None
    w = dict(rep.witness)
    w["point"] = [str(x) for x in w["point"]]
    payload["witness"] = w
    if cfg.expect_failure:
        return "pass", payload, None
    return "inconclusive", payload, None


def _run_semicontinuity(cfg, tol, eps):
    grid = build_grid(cfg.grid)
    seq = build_sequence(cfg.sequence)
    limit = build_family(cfg.limit) if cfg.limit is not None else build_family(cfg.sequence.base)
    eps = 2 * grid.h if eps is None else eps
    res = semicontinuity_check(seq, limit, grid, eps, tol)
    payload = {
        "inclusion": res.holds,
        "witness": None if res.witness is None else _pair(res.witness),
        "epsilon": eps,
        "limsup": _gridset_payload(res.limsup),
    }
    return _status(res.holds, cfg.expect_failure), payload, res.limsup


def _run_limits(cfg, tol, eps):
    grid = build_grid(cfg.grid)
    seq = build_sequence(cfg.sequence)
    limit = build_family(cfg.limit) if cfg.limit is not None else build_family(cfg.sequence.base)
    eps = 2 * grid.h if eps is None else eps
    res = limit_scenario_check(cfg.scenario, seq, limit, grid, eps, tol)
    payload = {
        "scenario": cfg.scenario,
        "converged": res.report.converged,
        "epsilon": eps,
        "tail_policy": res.report.tail_policy,
        "liminf": _gridset_payload(res.report.liminf),
        "limsup_count": len(res.report.limsup),
        "target_count": len(res.target),
    }
    return _status(res.holds, cfg.expect_failure), payload, res.report.liminf


def _run_ideal(cfg, tol, eps):
    seq = build_sequence(cfg.sequence)
    limit = build_family(cfg.limit) if cfg.limit is not None else build_family(cfg.sequence.base)
    probes = [build_family(p) for p in cfg.probes] if cfg.probes else None
    rep: ClosureReport = ideal_closure_check(seq, limit, probes)
    payload = {
        "limit_compact": rep.limit_compact,
        "ideal_ok": rep.ideal_ok,
        "final_distance": rep.distances[-1],
        "reason": rep.reason,
    }
    return _status(rep.passed, cfg.expect_failure), payload, None


def run_scenario(data: dict, grid_h: float | None = None, theta_samples: int | None = None) -> RunResult:
    """Validate a parsed config and dispatch it; never raises for scenario-level problems."""
    name, kind = str(data.get("name", "?")), str(data.get("kind", "?"))
    try:
        cfg = parse_scenario(data)
    except SchemaError as err:
        return RunResult(name, kind, "error", detail=f"schema: {err}")
    if grid_h is not None and cfg.grid is not None:
        cfg.grid.h = grid_h
    tol = build_tolerances(cfg.tolerances)
    if theta_samples is not None:
        tol = tol.with_overrides(theta_samples=theta_samples)
    eps = cfg.tolerances.epsilon
    canonical = json.dumps(cfg.model_dump(mode="json", by_alias=True), sort_keys=True)
    provenance = {
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "tolerances": {**tol.as_dict(), "epsilon": eps},
        "tool_version": __version__,
    }
    runners = {
        "index": _run_index,
        "index-poly": _run_index_poly,
        "weyl": _run_weyl,
        "homotopy": _run_homotopy,
        "semicontinuity": _run_semicontinuity,
        "limits": _run_limits,
        "ideal-check": _run_ideal,
    }
    try:
        if cfg.kind == "spectral-map":
            status, payload, plot = _run_spectral_map(cfg, tol, eps, theta_samples or cfg.tolerances.theta_samples)
        else:
            status, payload, plot = runners[cfg.kind](cfg, tol, eps)
    except (HypothesisViolation, InconclusiveError) as err:
        return RunResult(cfg.name, cfg.kind, "inconclusive", detail=f"{type(err).__name__}: {err}", provenance=provenance)
    except FredfamError as err:
        return RunResult(
            cfg.name, cfg.kind, "error", detail=f"scenario {cfg.name!r}: {type(err).__name__}: {err}", provenance=provenance
        )
    return RunResult(cfg.name, cfg.kind, status, payload, provenance=provenance, plot=plot)


def emit_plot_data(result: RunResult, path) -> None:
    """Write plot CSV: ``re,im,member`` for grid payloads, ``re,im`` for curves."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(result.plot, GridSet):
        gs = result.plot
        mask = gs.mask()
        writer.writerow(["re", "im", "member"])
        ni, nj = gs.grid.shape
        for i in range(ni):
            for j in range(nj):
                z = gs.grid.point(i, j)
                writer.writerow([repr(round(z.real, 12) + 0.0), repr(round(z.imag, 12) + 0.0), int(mask[i, j])])
    elif isinstance(result.plot, np.ndarray):
        writer.writerow(["re", "im"])
        for z in result.plot:
            writer.writerow([repr(float(z.real)), repr(float(z.imag))])
    else:
        raise SchemaError(f"payload of scenario kind {result.kind!r} is not plottable")
    _atomic_write(path, buf.getvalue())


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fredfam-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fredfam", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario config")
    run.add_argument("config")
    run.add_argument("--out", help="write JSON result here instead of stdout")
    run.add_argument("--plot", help="write plot CSV here")
    run.add_argument("--grid-h", type=float, help="override the grid step")
    run.add_argument("--theta-samples", type=int, help="override the number of theta samples")
    args = parser.parse_args(argv)

    try:
        raw = read_config(args.config)
    except (OSError, ValueError) as err:
        print(f"fredfam: cannot read {args.config}: {err}", file=sys.stderr)
        return EXIT_CODES["error"]
    result = run_scenario(raw, grid_h=args.grid_h, theta_samples=args.theta_samples)
    if args.out:
        _atomic_write(args.out, result.to_json())
    else:
        sys.stdout.write(result.to_json())
    if result.status == "error":
        print(f"fredfam: {result.detail}", file=sys.stderr)
    if args.plot:
        try:
            emit_plot_data(result, args.plot)
        except SchemaError as err:
            print(f"fredfam: {err}", file=sys.stderr)
            return EXIT_CODES["error"]
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
