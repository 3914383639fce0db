"""JSON interchange for the exact types.

Formats (all coefficients as exact numerator/denominator pairs):

  Polynomial      {"dim": n, "terms": [{"alpha": [...], "num": p, "den": q}, ...]}
  DiffOp          {"dim": n, "terms": [{"alpha": [...], "coeff": <Polynomial>}, ...]}
  GaussianLaurent {"dim": n, "gaussian": true,
                   "terms": [{"s_exp": j, "poly": <Polynomial>}, ...]}
  PhaseSymbol     {"dim": n, "terms": [{"xi": [...], "x": [...],
                                        "num": p, "den": q, "ipow": 0..3}, ...]}

Term lists are sorted, so serialization is deterministic and round-trips
preserve every coefficient bit for bit.
"""

from __future__ import annotations

from fractions import Fraction

from .diffop import DiffOp
from .gaussian import GaussianLaurent
from .poly import Polynomial
from .symbolcalc import GaussRat, PhaseSymbol


def poly_to_json(p: Polynomial) -> dict:
    return {
        "dim": p.dim,
        "terms": [
            {"alpha": list(mono), "num": c.numerator, "den": c.denominator}
            for mono, c in sorted(p.terms.items())
        ],
    }


def poly_from_json(data: dict) -> Polynomial:
    dim = int(data["dim"])
    terms = {
        tuple(t["alpha"]): Fraction(int(t["num"]), int(t["den"]))
        for t in data.get("terms", [])
    }
    return Polynomial(dim, terms)


def diffop_to_json(d: DiffOp) -> dict:
    return {
        "dim": d.dim,
        "terms": [
            {"alpha": list(alpha), "coeff": poly_to_json(coeff)}
            for alpha, coeff in sorted(d.terms.items())
        ],
    }


def diffop_from_json(data: dict) -> DiffOp:
    dim = int(data["dim"])
    terms = {
        tuple(t["alpha"]): poly_from_json(t["coeff"])
        for t in data.get("terms", [])
    }
    return DiffOp(dim, terms)


def gaussian_laurent_to_json(g: GaussianLaurent) -> dict:
    return {
        "dim": g.dim,
        "gaussian": True,
        "terms": [
            {"s_exp": j, "poly": poly_to_json(p)}
            for j, p in sorted(g.terms.items())
        ],
    }


def gaussian_laurent_from_json(data: dict) -> GaussianLaurent:
    dim = int(data["dim"])
    terms = {int(t["s_exp"]): poly_from_json(t["poly"]) for t in data.get("terms", [])}
    return GaussianLaurent(dim, terms)


def phase_symbol_to_json(sym: PhaseSymbol) -> dict:
    entries = []
    for (xi, x), z in sorted(sym.terms.items()):
        # every stored coefficient is purely real or purely imaginary;
        # emit one entry per nonzero part so the format stays rational
        for part, ipow in ((z.re, 0), (z.im, 1)):
            if part:
                entries.append({
                    "xi": list(xi), "x": list(x),
                    "num": part.numerator, "den": part.denominator,
                    "ipow": ipow,
                })
    return {"dim": sym.dim, "terms": entries}


def phase_symbol_from_json(data: dict) -> PhaseSymbol:
    dim = int(data["dim"])
    terms: dict = {}
    for t in data.get("terms", []):
        key = (tuple(t["xi"]), tuple(t["x"]))
        c = Fraction(int(t["num"]), int(t["den"]))
        z = GaussRat.i_power(int(t["ipow"])) * c
        terms[key] = terms[key] + z if key in terms else z
    return PhaseSymbol(dim, terms)
