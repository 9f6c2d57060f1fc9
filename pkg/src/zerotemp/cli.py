"""Command-line front end: ``zerotemp analyze|limit|table|check SPEC.json``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import finite_beta as fb
from .perron import DivergentSeries, NotIrreducible
from .potentials import NoCircuit, Potential, PotentialError, maximize, normalize, recode
from .renorm import RenormalizedNotIrreducible, ZeroTemperatureLimit, zero_temperature_limit
from .sft import Digraph, SFTError

EXIT_OK, EXIT_PARSE, EXIT_NO_CIRCUIT, EXIT_IRREDUCIBLE, EXIT_PROPERTY = 0, 2, 3, 4, 5

EXAMPLES = ("example1", "example2", "example3")


class SpecError(ValueError):
    """Malformed system description."""


def _parse_rational(key: str, raw) -> Fraction:
    if isinstance(raw, bool):
        raise SpecError(f"phi[{key!r}]: expected a rational literal, got {raw!r}")
    try:
        if isinstance(raw, int):
            return Fraction(raw)
        if isinstance(raw, float):
            return Fraction(repr(raw))
        if isinstance(raw, str):
            return Fraction(raw.strip().replace("−", "-"))
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"phi[{key!r}]: bad rational literal {raw!r} ({exc})") from None
    raise SpecError(f"phi[{key!r}]: expected a rational literal, got {type(raw).__name__}")


def _parse_real(key: str, raw) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
        raise SpecError(f"psi[{key!r}]: expected a number, got {raw!r}")
    try:
        x = float(raw.replace("−", "-")) if isinstance(raw, str) else float(raw)
    except ValueError:
        raise SpecError(f"psi[{key!r}]: bad number {raw!r}") from None
    if not math.isfinite(x):
        raise SpecError(f"psi[{key!r}]: value must be finite")
    return x


@dataclass(frozen=True)
class SystemSpec:
    """Alphabet, locality and potentials keyed by admissible ``(r+1)``-words."""

    alphabet: tuple[str, ...]
    r: int
    phi: Mapping[tuple[str, ...], Fraction]
    psi: Mapping[tuple[str, ...], float] = field(default_factory=dict)

    @property
    def compact(self) -> bool:
        return all(len(s) == 1 for s in self.alphabet)

    def word_key(self, word: Sequence[str]) -> str:
        return ("" if self.compact else " ").join(word)

    def split_key(self, key: str) -> tuple[str, ...]:
        return tuple(key) if self.compact else tuple(key.split())

    @classmethod
    def from_dict(cls, data) -> "SystemSpec":
        if not isinstance(data, dict):
            raise SpecError("top level must be a JSON object")
        unknown = set(data) - {"alphabet", "r", "phi", "psi"}
        if unknown:
            raise SpecError(f"unknown keys {sorted(unknown)}")
        if "alphabet" not in data:
            raise SpecError("missing key 'alphabet'")
        alpha = data["alphabet"]
        if not isinstance(alpha, list) or not all(isinstance(s, str) and s for s in alpha):
            raise SpecError("'alphabet' must be a list of nonempty strings")
        r = data.get("r", 1)
        if isinstance(r, bool) or not isinstance(r, int) or r < 1:
            raise SpecError(f"'r' must be an integer >= 1, got {r!r}")
        if "phi" not in data or not isinstance(data["phi"], dict):
            raise SpecError("missing or malformed key 'phi'")
        psi_raw = data.get("psi", {})
        if not isinstance(psi_raw, dict):
            raise SpecError("'psi' must be an object")
        proto = cls(tuple(alpha), r, {})
        phi = {proto.split_key(k): _parse_rational(k, v) for k, v in data["phi"].items()}
        psi = {proto.split_key(k): _parse_real(k, v) for k, v in psi_raw.items()}
        if not phi:
            raise SpecError("'phi' lists no admissible word")
        return cls(tuple(alpha), r, phi, psi)

    def to_dict(self) -> dict:
        out = {
            "alphabet": list(self.alphabet),
            "r": self.r,
            "phi": {self.word_key(w): str(v) for w, v in self.phi.items()},
        }
        if self.psi:
            out["psi"] = {self.word_key(w): v for w, v in self.psi.items()}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def system(self) -> tuple[Digraph, Potential, Potential]:
        return recode(self.alphabet, self.r, self.phi, self.psi)


def parse_spec(text: str) -> SystemSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None
    return SystemSpec.from_dict(data)


def load_spec(path: str) -> SystemSpec:
    """Read a spec file; the bundled names ``example1..3`` are also accepted."""
    if path in EXAMPLES and not Path(path).exists():
        text = resources.files("zerotemp").joinpath("data", f"{path}.json").read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    return parse_spec(text)


def _names(g: Digraph, verts) -> list[str]:
    return [g.names[v] for v in verts]


def analysis_report(g: Digraph, phi, psi, eps_rho: float) -> dict:
    raw = maximize(g, phi, True)
    sys_n = normalize(g, phi, psi, eps_rho)
    comps = []
    for c, P in zip(sys_n.components, sys_n.component_pressures()):
        comps.append({
            "vertices": _names(g, c.vertices),
            "period": c.period,
            "pressure": P,
            "heavy": P >= -eps_rho,
        })
    return {
        "phi_bar": str(raw.phi_bar),
        "E_phi": None if raw.E_phi is None else [str(m) for m in raw.E_phi],
        "phi_g": None if raw.phi_g is None else str(raw.phi_g),
        "maximizing_arrows": sorted([g.names[a], g.names[b]] for a, b in raw.maximizing_arrows),
        "components": comps,
        "psi_pressure": sys_n.psi_pressure_on_xbar,
        "warnings": list(sys_n.warnings),
    }


def limit_report(L: ZeroTemperatureLimit) -> dict:
    g = L.graph
    heavy = []
    for J, comp in enumerate(L.heavy.heavy):
        m = comp.measure
        heavy.append({
            "vertices": _names(g, comp.vertices),
            "alpha": L.alpha[J],
            "alpha_exact": None if L.alpha_exact[J] is None else str(L.alpha_exact[J]),
            "transition_matrix": m.transition_probabilities.tolist(),
            "stationary": m.marginals.tolist(),
        })
    ladder = []
    for i, lvl in enumerate(L.levels):
        G = lvl.system.graph
        entry = {
            "level": i,
            "alphabet": list(G.names),
            "heavy": [_names(G, c.vertices) for c in lvl.heavy.heavy],
            "pressures": [c.pressure for c in lvl.heavy.components],
        }
        rs = lvl.renormalized
        if rs is not None:
            H = rs.graph
            entry["renormalized"] = {
                "arrows": [[H.names[a], H.names[b]] for a, b in H.sorted_arrows],
                "phi": {f"{H.names[a]} {H.names[b]}": str(rs.phi[(a, b)]) for a, b in H.sorted_arrows},
                "psi": {f"{H.names[a]} {H.names[b]}": rs.psi[(a, b)] for a, b in H.sorted_arrows},
            }
        ladder.append(entry)
    warnings = [w for lvl in L.levels for w in lvl.system.warnings]
    masses = L.symbol_masses()
    return {
        "heavy_components": heavy,
        "ladder": ladder,
        "symbol_masses": {g.names[v]: float(masses[v]) for v in range(g.n)},
        "warnings": warnings,
    }


def parse_betas(text: str) -> list[float]:
    text = text.strip()
    if text.startswith("log2:"):
        lo, sep, hi = text[5:].partition("..")
        try:
            k1, k2 = int(lo), int(hi)
        except ValueError:
            raise SpecError(f"bad --betas range {text!r}; expected log2:k1..k2") from None
        if not sep or k2 < k1:
            raise SpecError(f"bad --betas range {text!r}; expected log2:k1..k2")
        return [k * math.log(2) for k in range(k1, k2 + 1)]
    try:
        out = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SpecError(f"bad --betas list {text!r}") from None
    if not out or any(b < 0 or not math.isfinite(b) for b in out):
        raise SpecError("--betas must list finite nonnegative values")
    return out


def parse_window(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    try:
        w = (float(lo), float(hi))
    except ValueError:
        raise SpecError(f"bad --beta-window {text!r}; expected lo:hi") from None
    if not sep or not 0 <= w[0] < w[1]:
        raise SpecError(f"bad --beta-window {text!r}; expected 0 <= lo < hi")
    return w


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_checks(g: Digraph, phi, psi, limit: ZeroTemperatureLimit,
               window: tuple[float, float] = (5.0, 30.0)) -> list[CheckResult]:
    """Empirical property suite comparing finite-beta measures with ``limit``.

    ``limit`` is taken as given, so a corrupted one can be injected to confirm
    the suite detects it.
    """
    results = []
    lo, hi = window
    dr = fb.decay_report(g, phi, psi, limit, window)
    bad = []
    for c, f in dr.fits.items():
        if f.slope is None:
            continue
        ok = f.slope < 0 and (f.last_error <= fb.ERROR_FLOOR or f.last_error <= 0.5 * f.first_error)
        if not ok:
            bad.append(f"{c}: slope {f.slope:.4g}, error {f.first_error:.3g} -> {f.last_error:.3g}")
    slopes = ", ".join(f"{c}:{'exact' if f.slope is None else format(f.slope, '.3f')}" for c, f in dr.fits.items())
    results.append(CheckResult("decay", not bad, "; ".join(bad) or f"slopes {slopes}"))

    sys0 = limit.levels[0].system
    phi_g = sys0.report.phi_g
    betas = [b for b in (20.0, 25.0, 30.0, 35.0, 40.0)]
    sc = fb.spectral_radius_check(sys0, betas)
    if phi_g is None:
        results.append(CheckResult("spectral", True, "single circuit class; no second mean"))
    else:
        results.append(CheckResult("spectral", sc.holds_from(20.0),
                                   "rho-1 vs bound: " + ", ".join(f"b={b:g}:{x:.3g}<={y:.3g}"
                                                                  for b, x, y in zip(sc.betas, sc.excess, sc.bound))))

    heavy_v = limit.heavy.heavy_vertices
    grid = list(np.linspace(lo, hi, 6))
    if phi_g is None or len(heavy_v) == g.n:
        results.append(CheckResult("concentration", True, "every symbol is heavy or phi_g undefined"))
    else:
        out = fb.concentration_check(g, sys0.phi, sys0.psi, heavy_v, grid)
        env = np.exp(np.array(grid) * float(phi_g) / 4)
        C = out[0] / env[0]
        ok = bool(np.all(out <= C * env * (1 + 1e-9) + fb.ERROR_FLOOR))
        results.append(CheckResult("concentration", ok, "outside mass " + ", ".join(f"{x:.3g}" for x in out)))

    H_arrows = limit.heavy.heavy_arrow_union
    diffs = {}
    try:
        for b in (grid[0], grid[-1]):
            for a, (s_b, s_0) in fb.excursion_series_check(sys0, heavy_v, H_arrows, b).items():
                diffs.setdefault(a, []).append(abs(s_b - s_0))
        bad = [g.names[a] for a, (d0, d1) in diffs.items() if not (d1 <= d0 or d1 <= 1e-12)]
        results.append(CheckResult("excursion", not bad,
                                   "; ".join(f"{g.names[a]}: {d[0]:.3g} -> {d[1]:.3g}" for a, d in diffs.items())
                                   or "no non-heavy vertex"))
    except DivergentSeries as exc:
        results.append(CheckResult("excursion", False, str(exc)))
    return results


def _print_table(cols: Sequence[str], rows) -> None:
    print("beta".ljust(10) + "".join(c.rjust(12) for c in cols))
    for b, row in rows:
        label = b if isinstance(b, str) else f"{b:.6f}"
        print(label.ljust(10) + "".join(f"{x:12.6f}" for x in row))


def _load(args):
    spec = load_spec(args.spec)
    g, phi, psi = spec.system()
    return spec, g, phi, psi


def cmd_analyze(args) -> int:
    _, g, phi, psi = _load(args)
    rep = analysis_report(g, phi, psi, args.tol)
    if args.json:
        print(json.dumps(rep, sort_keys=True, indent=2))
        return EXIT_OK
    print(f"maximal cycle mean: {rep['phi_bar']}")
    print(f"second largest mean: {rep['phi_g'] if rep['phi_g'] is not None else 'none'}")
    print(f"circuit means: {', '.join(rep['E_phi'])}")
    print(f"maximizing arrows: {' '.join(a + b if len(a + b) == 2 else a + '>' + b for a, b in rep['maximizing_arrows'])}")
    heavy = sum(c["heavy"] for c in rep["components"])
    print(f"components of the maximizing subshift: {len(rep['components'])} ({heavy} heavy)")
    for c in rep["components"]:
        tag = "heavy" if c["heavy"] else "light"
        print(f"  {{{', '.join(c['vertices'])}}} period {c['period']} pressure {c['pressure']:.6f} {tag}")
    for w in rep["warnings"]:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_limit(args) -> int:
    _, g, phi, psi = _load(args)
    maximize(g, phi, False)
    L = zero_temperature_limit(g, phi, psi, eps_rho=args.tol)
    rep = limit_report(L)
    if args.json:
        print(json.dumps(rep, sort_keys=True, indent=2))
        return EXIT_OK
    print(f"renormalization levels: {len(L.levels)}")
    for J, h in enumerate(rep["heavy_components"], 1):
        exact = f"  (= {h['alpha_exact']})" if h["alpha_exact"] is not None else ""
        print(f"alpha_{J} = {h['alpha']:.6f}{exact}  on {{{', '.join(h['vertices'])}}}")
    print("limit symbol masses:")
    for name, m in rep["symbol_masses"].items():
        print(f"  {name}: {m:.6f}")
    for w in rep["warnings"]:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_table(args) -> int:
    _, g, phi, psi = _load(args)
    maximize(g, phi, False)
    L = zero_temperature_limit(g, phi, psi, eps_rho=args.tol)
    betas = parse_betas(args.betas)
    cyl = [c.strip() for c in args.cylinders.split(",") if c.strip()] if args.cylinders else list(g.names)
    sweep = fb.beta_sweep(g, phi, psi, betas, cyl, L)
    text = sweep.to_csv()
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    if args.json:
        print(json.dumps({"betas": list(sweep.betas), "cylinders": list(sweep.cylinders),
                          "values": sweep.values.tolist(), "limit": sweep.limit_row.tolist()},
                         sort_keys=True, indent=2))
    elif not args.csv:
        _print_table(sweep.cylinders, sweep.rows())
    else:
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_check(args, limit_hook=None) -> int:
    _, g, phi, psi = _load(args)
    maximize(g, phi, False)
    L = zero_temperature_limit(g, phi, psi, eps_rho=args.tol)
    if limit_hook is not None:
        L = limit_hook(L)
    results = run_checks(g, phi, psi, L, parse_window(args.beta_window))
    if args.json:
        print(json.dumps([r.__dict__ for r in results], sort_keys=True, indent=2))
    else:
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zerotemp", description="Zero-temperature limits of Gibbs measures on SFTs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("spec", help="JSON system description, or example1/example2/example3")
        sp.add_argument("--tol", type=float, default=1e-9, help="relative tolerance for tied pressures")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    common(sub.add_parser("analyze", help="maximizing subshift and its components"))
    common(sub.add_parser("limit", help="weights of the zero-temperature limit"))
    t = sub.add_parser("table", help="finite-beta cylinder masses against the limit")
    common(t)
    t.add_argument("--betas", default="log2:1..6")
    t.add_argument("--cylinders", default=None, help="comma-separated words (default: every symbol)")
    t.add_argument("--csv", default=None, metavar="PATH")
    c = sub.add_parser("check", help="empirical convergence checks")
    common(c)
    c.add_argument("--beta-window", default="5:30")
    return p


def main(argv: Sequence[str] | None = None, limit_hook=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"analyze": cmd_analyze, "limit": cmd_limit, "table": cmd_table}
    try:
        if args.command == "check":
            return cmd_check(args, limit_hook)
        return handlers[args.command](args)
    except (SpecError, SFTError, PotentialError) as exc:
        if isinstance(exc, NoCircuit):
            print(f"error: no circuit: {exc}", file=sys.stderr)
            return EXIT_NO_CIRCUIT
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RenormalizedNotIrreducible as exc:
        print(f"error: {exc}", file=sys.stderr)
        for i, lvl in enumerate(exc.ladder):
            G = lvl.system.graph
            print(f"  level {i}: alphabet {list(G.names)}", file=sys.stderr)
        return EXIT_IRREDUCIBLE
    except NotIrreducible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IRREDUCIBLE
    except fb.DegenerateWindow as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
