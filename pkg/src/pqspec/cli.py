"""Batch front door: ``python -m pqspec <subcommand> --config run.json``.

Exit codes: 0 classified/ok, 1 usage or configuration error, 2 numerical
non-convergence (or, for ``check``, a failed bound).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .eigensolver import SolverOptions, compute_lambda1, scan_spectrum, solve_at_lambda
from .energy import Params, QuadratureRule
from .exceptions import PQSpecError
from .exterior import degiorgi_sequence, extend_exterior, linf_report, neumann_residual
from .grid import Grid
from .io import (gridfunction_from_csv, svg_plot, write_gridfunction_csv, write_json,
                 write_rows_csv)
from .oracle import dense_eigensolve_q2, multistart_bruteforce

log = logging.getLogger("pqspec")

EXIT_OK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2


class ConfigError(PQSpecError, ValueError):
    """Unreadable or invalid run configuration."""


_PARAM_KEYS = {"s1", "s2", "p", "q", "lambda", "rhs_exp"}
_GRID_KEYS = {"a", "b", "n_int", "L", "n_ext"}
_QUAD_KEYS = {"panels", "gauss"}
_OPT_KEYS = {f.name for f in dataclasses.fields(SolverOptions)}
_OTHER_KEYS = {"out_dir", "oracle", "n_starts", "n_eigs", "degiorgi_n_max"}
_REQUIRED = {"s1", "s2", "p", "q"}


@dataclass
class RunConfig:
    params: Params
    grid: Grid
    rule: QuadratureRule
    opts: SolverOptions
    out_dir: Path
    oracle: str = "dense"
    n_starts: int = 64
    n_eigs: int = 8
    degiorgi_n_max: int = 40
    raw: Optional[dict] = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - (_PARAM_KEYS | _GRID_KEYS | _QUAD_KEYS | _OPT_KEYS | _OTHER_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = _REQUIRED - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        prm = Params(d["s1"], d["s2"], d["p"], d["q"], d.get("lambda", 0.0), d.get("rhs_exp", "q"))
        g = {"a": 0.0, "b": 1.0, "n_int": 64, "L": 2.0, "n_ext": 128}
        g.update({k: d[k] for k in _GRID_KEYS & set(d)})
        rule = QuadratureRule(**{k: d[k] for k in _QUAD_KEYS & set(d)})
        opts = SolverOptions(**{k: d[k] for k in _OPT_KEYS & set(d)})
        oracle = d.get("oracle", "dense")
        if oracle not in ("dense", "brute", "both"):
            raise ConfigError(f"oracle must be dense, brute or both, got {oracle!r}")
        return cls(prm, Grid.from_dict(g), rule, opts, Path(d.get("out_dir", "out")), oracle,
                   int(d.get("n_starts", 64)), int(d.get("n_eigs", 8)),
                   int(d.get("degiorgi_n_max", 40)), dict(d))

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = {"s1": self.params.s1, "s2": self.params.s2, "p": self.params.p, "q": self.params.q,
             "lambda": self.params.lam, "rhs_exp": self.params.rhs_exp}
        d.update(self.grid.to_dict())
        d.update(dataclasses.asdict(self.rule))
        d.update(dataclasses.asdict(self.opts))
        d.update({"out_dir": str(self.out_dir), "oracle": self.oracle, "n_starts": self.n_starts,
                  "n_eigs": self.n_eigs, "degiorgi_n_max": self.degiorgi_n_max})
        return d


def _metadata() -> dict:
    return {"timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "version": __version__}


def _emit(cfg: RunConfig, name: str, body: dict) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    write_json(path, {"config": cfg.to_dict(), "result": body, "metadata": _metadata()})
    log.info("wrote %s", path)
    return path


def _eigen_svg(cfg: RunConfig, u, title: str, name: str):
    svg = svg_plot([("u", np.asarray(cfg.grid.nodes), u.values)], title,
                   vlines=[("a", cfg.grid.a), ("b", cfg.grid.b)])
    (cfg.out_dir / name).write_text(svg)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------
def cmd_lambda1(cfg: RunConfig) -> int:
    s2, q = cfg.params.rhs_pair
    res = compute_lambda1(s2, q, cfg.grid, cfg.opts, cfg.rule)
    body = {"lambda1": res.lam, "energies": res.energies.to_dict(), "residual_inf": res.residual_inf,
            "iterations": res.iterations, "converged": res.converged, "s": s2, "r": q}
    _emit(cfg, "result.json", body)
    write_gridfunction_csv(cfg.out_dir / "u1.csv", res.u)
    _eigen_svg(cfg, res.u, f"first eigenfunction, lambda1 = {res.lam:.8g}", "u1.svg")
    print(f"lambda1 = {res.lam:.12g}  residual = {res.residual_inf:.3e}  converged = {res.converged}")
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_solve(cfg: RunConfig, lam: float) -> int:
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    res = solve_at_lambda(cfg.params.with_lambda(lam), cfg.grid, cfg.opts, rule=cfg.rule)
    _emit(cfg, "result.json", res.to_dict())
    write_gridfunction_csv(cfg.out_dir / "u.csv", res.u)
    _eigen_svg(cfg, res.u, f"lambda = {lam:.8g}: {res.classification}", "u.svg")
    print(f"lambda = {lam:.12g}  {res.classification}  residual = {res.residual_inf:.3e}")
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_scan(cfg: RunConfig, lam_min: float, lam_max: float, steps: int) -> int:
    if not (0 < lam_min < lam_max) or steps < 2:
        raise ConfigError("scan needs 0 < min < max and steps >= 2")
    lams = np.linspace(lam_min, lam_max, steps)
    rep = scan_spectrum(cfg.params, cfg.grid, lams, cfg.opts, rule=cfg.rule)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_rows_csv(cfg.out_dir / "scan.csv", ["lambda", "classification", "residual", "f_min"], rep.rows)
    _emit(cfg, "scan.json", rep.to_dict())
    x = np.array([r[0] for r in rep.rows])
    y = np.array([1.0 if r[1] == "eigenpair" else 0.0 for r in rep.rows])
    svg = svg_plot([("eigenpair (1) / none (0)", x, y)], "classification against lambda",
                   vlines=[("lambda1_h", rep.lambda1_h)], markers=True)
    (cfg.out_dir / "scan.svg").write_text(svg)
    for lam, cls, r, _ in rep.rows:
        print(f"{lam:14.8g}  {cls:24s}  {r:.3e}")
    print(f"lambda1_h = {rep.lambda1_h:.12g}  threshold = {rep.threshold}  monotone = {rep.monotone}")
    return EXIT_OK


def cmd_check(cfg: RunConfig, input_csv) -> int:
    u = gridfunction_from_csv(input_csv, cfg.grid)
    prm = cfg.params
    ext = extend_exterior(u, prm, cfg.grid, cfg.rule)
    nres_in = neumann_residual(u, prm, cfg.grid, cfg.rule)
    nres_ext = neumann_residual(ext, prm, cfg.grid, cfg.rule)
    lin_in, lin_ext = linf_report(u, cfg.grid), linf_report(ext, cfg.grid)
    dg = degiorgi_sequence(u, prm.m, cfg.degiorgi_n_max)
    ok = bool(lin_in.bound_ok and lin_ext.bound_ok and lin_ext.exterior_ok and dg.monotone)
    body = {"ok": ok,
            "neumann_residual_input": float(np.abs(nres_in.values).max()),
            "neumann_residual_extended": float(np.abs(nres_ext.values).max()),
            "linf_input": lin_in.to_dict(), "linf_extended": lin_ext.to_dict(),
            "degiorgi": dg.to_dict()}
    _emit(cfg, "check.json", body)
    (cfg.out_dir / "degiorgi.csv").write_text(dg.to_csv())
    write_gridfunction_csv(cfg.out_dir / "u_extended.csv", ext)
    print(f"bounds {'pass' if ok else 'FAIL'}: sup_int = {lin_ext.sup_interior:.6g}, "
          f"sup_ext = {lin_ext.sup_exterior:.6g}, De Giorgi monotone = {dg.monotone}")
    return EXIT_OK if ok else EXIT_NOCONV


def cmd_oracle(cfg: RunConfig) -> int:
    body = {}
    if cfg.oracle in ("dense", "both"):
        s2 = cfg.params.rhs_pair[0]
        pairs = dense_eigensolve_q2(s2, cfg.grid, cfg.rule)
        body["dense_q2"] = {"s": s2, "eigenvalues": [lam for lam, _ in pairs[:cfg.n_eigs]],
                            "lambda1": pairs[1][0]}
        print(f"dense q=2 lambda1 = {pairs[1][0]:.12g}")
    if cfg.oracle in ("brute", "both"):
        b1 = multistart_bruteforce(cfg.params, cfg.grid, cfg.n_starts, cfg.opts, cfg.rule, "lambda1")
        body["brute_lambda1"] = {"lambda1": b1.lam, "u": b1.u.values.tolist()}
        print(f"brute-force lambda1 = {b1.lam:.12g}")
        if cfg.params.lam > 0:
            be = multistart_bruteforce(cfg.params, cfg.grid, cfg.n_starts, cfg.opts, cfg.rule)
            body["brute_energy"] = be.to_dict()
            print(f"brute-force F at lambda = {cfg.params.lam:.8g}: {be.energies.f_lambda:.12g} "
                  f"({be.classification})")
    _emit(cfg, "oracle.json", body)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="python -m pqspec",
                                 description="Fractional (p,q)-Laplacian Neumann eigenvalue solver.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="flat JSON run configuration")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        return p

    add("lambda1", "first nonzero eigenvalue of the rhs operator")
    p = add("solve", "look for an eigenfunction at a given lambda")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p = add("scan", "classify an evenly spaced range of lambdas")
    p.add_argument("--min", dest="lam_min", type=float, required=True)
    p.add_argument("--max", dest="lam_max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p = add("check", "exterior and sup-bound diagnostics of a nodal CSV")
    p.add_argument("--input", required=True)
    add("oracle", "dense q=2 pencil and/or brute-force references")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig.load(args.config)
        if args.out:
            cfg.out_dir = Path(args.out)
        if args.command == "lambda1":
            return cmd_lambda1(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, args.lam)
        if args.command == "scan":
            return cmd_scan(cfg, args.lam_min, args.lam_max, args.steps)
        if args.command == "check":
            return cmd_check(cfg, args.input)
        return cmd_oracle(cfg)
    except (PQSpecError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
