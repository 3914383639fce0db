"""Batch command-line front end.

One entry point with a --command switch (expand | symbols | oracle |
invariants | detect | validate).  Input is flags or a JSON config file,
output is a directory of JSON/CSV files; every run writes a manifest
echoing the fully resolved configuration.  Exit codes: 0 success,
1 config error, 2 check failure, 3 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, invariants, oracle, symbolcalc
from .fixtures import SYMBOLIC_FIXTURES, RadialBump, symbolic_fixture
from .kantorovitz import defect_expansion, operator_chain
from .poly import Polynomial
from .serialize import gaussian_laurent_to_json, poly_from_json
from .validate import ALL_GROUPS, report_dict, run_checks

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RESOURCE = 0, 1, 2, 3

MAX_SYMBOLIC_ORDER = 3
MAX_BASIS = 1200


class ResourceLimit(RuntimeError):
    pass


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": ["expand", "symbols", "oracle", "invariants",
                             "detect", "validate"]},
        "potential": {"type": "string"},
        "n": {"type": "integer", "minimum": 1, "maximum": 3},
        "order": {"type": "integer", "minimum": 0},
        "basis": {"type": "integer", "minimum": 16},
        "hbar": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                 "minItems": 1},
        "s": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
              "minItems": 1},
        "points": {"type": "array", "items": {"type": "number"}},
        "r_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "out": {"type": "string"},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "checks": {"type": ["array", "null"], "items": {"enum": list(ALL_GROUPS)}},
        "inject_fault": {"type": ["string", "null"]},
        "jobs": {"type": "integer", "minimum": 1},
    },
    "required": ["command", "out"],
    "additionalProperties": False,
}


@dataclass
class JobConfig:
    command: str
    potential: str = "quadratic"
    n: int = 1
    order: int = 1
    basis: int = 400
    hbar: list[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    s: list[float] = field(default_factory=lambda: [0.5])
    points: list[float] = field(default_factory=lambda: [0.0, 0.5, 1.0])
    r_grid: list[float] = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    out: str = "semiheat_out"
    tol: float = 1e-10
    checks: list[str] | None = None
    inject_fault: str | None = None
    jobs: int = 1

    def validated(self) -> "JobConfig":
        jsonschema.validate(asdict(self), CONFIG_SCHEMA)
        return self


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="semiheat",
        description="Heat-defect expansion of the perturbed harmonic "
                    "oscillator: exact engine, spectral oracle, invariants.",
    )
    p.add_argument("--command", required=True,
                   choices=["expand", "symbols", "oracle", "invariants",
                            "detect", "validate"])
    p.add_argument("--config", help="JSON file with JobConfig fields (flags win)")
    p.add_argument("--potential",
                   help=f"builtin name {SYMBOLIC_FIXTURES + ('radial-bump',)} "
                        "or a Polynomial JSON file")
    p.add_argument("--n", type=int, help="ambient dimension (1..3)")
    p.add_argument("--order", type=int, help="expansion order K (K <= 3 symbolic)")
    p.add_argument("--basis", type=int, help="oracle basis size per axis")
    p.add_argument("--hbar", type=_parse_floats, help="comma list, e.g. 0.2,0.1,0.05")
    p.add_argument("--s", type=_parse_floats, help="comma list of s values")
    p.add_argument("--points", type=_parse_floats, help="comma list of x points")
    p.add_argument("--r-grid", dest="r_grid", type=_parse_floats,
                   help="comma list of radii")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tol", type=float, help="detector tolerance override")
    p.add_argument("--checks", help="comma list of validate groups "
                                    f"{ALL_GROUPS}")
    p.add_argument("--inject-fault", dest="inject_fault",
                   help="test hook: corrupt an internal table (cmu)")
    p.add_argument("--jobs", type=int, help="worker threads for sweeps")
    return p


def resolve_config(argv: list[str]) -> JobConfig:
    args = build_parser().parse_args(argv)
    base: dict = {}
    if args.config:
        base.update(json.loads(Path(args.config).read_text()))
    for key in ("command", "potential", "n", "order", "basis", "hbar", "s",
                "points", "r_grid", "out", "tol", "inject_fault", "jobs"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    if args.checks is not None:
        base["checks"] = [c for c in args.checks.split(",") if c]
    cfg = JobConfig(**base)
    return cfg.validated()


def load_polynomial(cfg: JobConfig) -> Polynomial:
    if cfg.potential in SYMBOLIC_FIXTURES:
        return symbolic_fixture(cfg.potential, cfg.n)
    if cfg.potential == "radial-bump":
        raise ValueError("radial-bump is a numeric fixture; this command "
                         "needs a polynomial potential")
    path = Path(cfg.potential)
    if not path.exists():
        raise ValueError(f"unknown potential {cfg.potential!r}")
    return poly_from_json(json.loads(path.read_text()))


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _prepare_out(cfg: JobConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": asdict(cfg), "version": __version__}
    _write_json(out / "manifest.json", manifest)
    return out


# ----------------------------------------------------------------------
# commands

def cmd_expand(cfg: JobConfig) -> int:
    if cfg.order > MAX_SYMBOLIC_ORDER:
        raise ResourceLimit(f"symbolic expansion supports order <= {MAX_SYMBOLIC_ORDER}")
    v = load_polynomial(cfg)
    out = _prepare_out(cfg)
    coeffs = defect_expansion(v, cfg.order)
    _write_json(out / "upsilon_k.json", {
        "dim": v.dim,
        "order": cfg.order,
        "normalization": "[free kernel - perturbed kernel] / "
                         "[(4 pi hbar^2 s)^(-n/2) (1 + hbar s)^n] "
                         "= sum_k hbar^(2k+2) U_k(s, x)",
        "coefficients": [gaussian_laurent_to_json(g) for g in coeffs],
    })
    lines = [f"U_{k}(s, x) = {g}" for k, g in enumerate(coeffs)]
    (out / "upsilon.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'upsilon_k.json'}")
    return EXIT_OK


def cmd_symbols(cfg: JobConfig) -> int:
    v = load_polynomial(cfg)
    out = _prepare_out(cfg)
    m_max = min(6, 2 * cfg.order + 1) if cfg.order else 6
    chain = operator_chain(v, m_max)
    fulls = symbolcalc.full_symbol_chain(v, m_max)
    prins = symbolcalc.principal_chain(v, m_max)
    rows = []
    for m in range(1, m_max + 1):
        rows.append({
            "m": m,
            "full_symbol_matches": symbolcalc.graded_full_symbol(chain[m]) == fulls[m],
            "principal_matches": symbolcalc.principal_part(chain[m], m) == prins[m],
        })
    passed = all(r["full_symbol_matches"] and r["principal_matches"] for r in rows)
    _write_json(out / "report.json", {"passed": passed, "per_m": rows})
    return EXIT_OK if passed else EXIT_CHECK


def cmd_oracle(cfg: JobConfig) -> int:
    v = load_polynomial(cfg)
    if v.dim != 1:
        raise ResourceLimit("oracle defect fits are restricted to dimension 1")
    if cfg.basis > MAX_BASIS:
        raise ResourceLimit(f"basis size limited to {MAX_BASIS}")
    out = _prepare_out(cfg)
    s = cfg.s[0]
    fit = oracle.fit_expansion(v, s, cfg.points, cfg.hbar,
                               basis_size=cfg.basis, jobs=cfg.jobs)
    with (out / "sweep.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hbar", "x", "s", "defect"])
        for i, hbar in enumerate(fit.hbars):
            for j, x in enumerate(fit.points):
                writer.writerow([repr(hbar), repr(x), repr(s), repr(fit.defects[i, j])])
    _write_json(out / "report.json", {
        "s": s,
        "points": list(fit.points),
        "hbars": list(fit.hbars),
        "c1": list(fit.c1),
        "c2": list(fit.c2),
        "residual_rms": [float(r) for r in fit.residuals],
        "condition_number": fit.condition_number,
        "tail_fractions": list(fit.tail_fractions),
    })
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_invariants(cfg: JobConfig) -> int:
    v = load_polynomial(cfg)
    out = _prepare_out(cfg)
    report = invariants.invariant_report(v, cfg.s, cfg.r_grid)
    _write_json(out / "invariants.json", asdict(report))
    with (out / "invariants.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "parameter", "value"])
        for s, a, b, c in zip(report.s_grid, report.i1, report.i2, report.i3):
            writer.writerow(["I1", repr(s), repr(a)])
            writer.writerow(["I2", repr(s), repr(b)])
            writer.writerow(["I3", repr(s), repr(c)])
        for r, a, b in zip(report.r_grid, report.m1, report.m2):
            writer.writerow(["M1", repr(r), repr(a)])
            writer.writerow(["M2", repr(r), repr(b)])
    return EXIT_OK


def cmd_detect(cfg: JobConfig) -> int:
    out = _prepare_out(cfg)
    report: dict = {"potential": cfg.potential, "r_grid": list(cfg.r_grid)}
    if cfg.potential == "radial-bump":
        bump = RadialBump()
        grid = np.asarray(cfg.r_grid, dtype=float)
        if len(grid) < 8:
            grid = np.arange(0.05, 2.5, 0.025)
        annulus = invariants.support_annulus(bump, grid, n=max(cfg.n, 2))
        report["support_annulus"] = list(annulus) if annulus else None
        report["true_annulus"] = [bump.a, bump.b]
    else:
        v = load_polynomial(cfg)
        rows = []
        for r in cfg.r_grid:
            verdict = invariants.constancy_detector(v, r, cfg.tol)
            row = {"r": r, "constant": verdict.constant, "value": verdict.value,
                   "defect": verdict.defect}
            if v.dim >= 2 and v.is_odd() and v:
                odd = invariants.odd_linear_detector(v, r, cfg.tol)
                row["odd_linear"] = {"in_class": odd.in_class, "chi": odd.chi,
                                     "gap": odd.gap}
            rows.append(row)
        report["verdicts"] = rows
    _write_json(out / "report.json", report)
    return EXIT_OK


def cmd_validate(cfg: JobConfig) -> int:
    out = _prepare_out(cfg)
    groups = tuple(cfg.checks) if cfg.checks else None
    results, passed = run_checks(groups, cfg.inject_fault)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.group}/{r.name} "
              f"(measure {r.measure:.3e}) {r.detail}")
    _write_json(out / "report.json", report_dict(results, passed))
    if not passed:
        first = next(r.name for r in results if not r.passed)
        print(f"validation failed: first failing check is {first!r}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


_COMMANDS = {
    "expand": cmd_expand,
    "symbols": cmd_symbols,
    "oracle": cmd_oracle,
    "invariants": cmd_invariants,
    "detect": cmd_detect,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve_config(argv)
    except SystemExit as exc:  # argparse error
        return EXIT_CONFIG if exc.code else EXIT_OK
    except (ValueError, KeyError, OSError, TypeError,
            jsonschema.ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[cfg.command](cfg)
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
