"""Command-line interface: one subcommand per operation, JSON in / JSON out.

Input is a single JSON document (--input FILE or standard input) that may
carry a gap system, a divisor, a character, a box, or a comb, as the
subcommand requires.  Output is a single JSON document echoing the resolved
run configuration in a "meta" field; sequence outputs can be exported as CSV.

Exit codes: 0 success, 1 verification failure, 2 malformed input,
3 numeric failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import abel, comb as comb_mod, jacobi_cf
from .errors import SolverError, ValidationError
from .herglotz import Divisor, r00, reflectionless_residual, split_resolvents
from .spectral_set import (
    GapSystem,
    critical_points,
    dos_cdf,
    dos_density,
    frequencies,
    green,
    harmonic_measure,
)

_BASE_POINT_NOTE = "divisor base point {(a_k, +1)}; characters are relative to it"


@dataclass(frozen=True)
class RunConfig:
    """Resolved run options; echoed verbatim in every output document."""

    precision: int = 128
    qtol: float = 1e-12
    seed: int = 0
    fmt: str = "json"

    def __post_init__(self):
        if self.precision < 53:
            raise ValidationError("precision must be at least 53 bits")
        if self.qtol <= 0:
            raise ValidationError("qtol must be positive")
        if self.fmt not in ("json", "csv"):
            raise ValidationError("format must be json or csv")

    def meta(self):
        doc = asdict(self)
        doc["base_point"] = _BASE_POINT_NOTE
        return doc


def _default_precision():
    env = os.environ.get("WIDOMSPEC_PREC")
    if env is None:
        return 128
    try:
        return int(env)
    except ValueError:
        raise ValidationError(f"WIDOMSPEC_PREC must be an integer, got {env!r}")


def _parser():
    p = argparse.ArgumentParser(prog="finitegap", description=__doc__)
    p.add_argument("command", choices=[
        "critical", "green", "harmonic", "dos", "resolvents", "coeffs", "transfer",
        "abel", "invert", "shift-check", "kernel0", "measure", "measure-mc",
        "comb", "truncate", "verify",
    ])
    p.add_argument("--input", help="input JSON file (default: standard input)")
    p.add_argument("--prec", type=int, default=None, help="working precision in bits")
    p.add_argument("--qtol", type=float, default=1e-12, help="quadrature tolerance")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--csv", action="store_true", help="CSV output for sequences")
    p.add_argument("--z", help="evaluation point RE,IM (IM optional)")
    p.add_argument("--k", type=int, default=1, help="gap index for harmonic measure")
    p.add_argument("--from", dest="n0", type=int, default=0, help="first index of a window")
    p.add_argument("--to", dest="n1", type=int, default=0, help="last index of a window")
    p.add_argument("--n", type=int, default=None, help="matrix index / truncation parameter")
    p.add_argument("--steps", type=int, default=1, help="shift steps for shift-check")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=100_000)
    return p


def _load_doc(args, needed):
    if not needed:
        return {}
    if args.input:
        with open(args.input) as fh:
            return json.load(fh)
    return json.load(sys.stdin)


def _parse_z(args, default=None):
    if args.z is None:
        if default is None:
            raise ValidationError("this command needs an evaluation point: --z RE[,IM]")
        return default
    parts = args.z.split(",")
    try:
        re = float(parts[0])
        im = float(parts[1]) if len(parts) > 1 else 0.0
    except (ValueError, IndexError):
        raise ValidationError(f"cannot parse --z {args.z!r} as RE[,IM]")
    return complex(re, im)


def _need_gs(doc):
    return GapSystem.from_json(doc)


def _need_divisor(doc, gs):
    return Divisor.from_json(doc).validate(gs)


def _jsonify(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    return obj


def _emit(doc, cfg):
    doc = dict(doc)
    doc["meta"] = cfg.meta()
    json.dump(_jsonify(doc), sys.stdout, indent=2)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_critical(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    return {"c": list(cp.c), "h": list(cp.h)}


def _cmd_green(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    z = _parse_z(args)
    return {"z": z, "green": green(gs, cp, z, cfg.qtol)}


def _cmd_harmonic(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    z = _parse_z(args)
    if z.imag != 0.0:
        raise ValidationError("harmonic measure evaluation point must be real")
    return {"k": args.k, "x": z.real, "omega": harmonic_measure(gs, cp, args.k, z.real, cfg.qtol)}


def _cmd_dos(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    z = _parse_z(args)
    if z.imag != 0.0:
        raise ValidationError("density of states lives on the real line")
    out = {"x": z.real, "cdf": dos_cdf(gs, cp, z.real, cfg.qtol),
           "frequencies": frequencies(gs, cp, cfg.qtol)}
    kind = gs.locate(z.real)
    if kind[0] == "band":
        out["density"] = dos_density(gs, cp, z.real)
    return out


def _cmd_resolvents(args, cfg, doc):
    gs = _need_gs(doc)
    d = _need_divisor(doc, gs)
    pair = split_resolvents(gs, d)
    z = _parse_z(args, default=2j)
    return {
        "z": z,
        "u": complex(pair.u(z)),
        "v": complex(pair.v(z)),
        "r00": complex(r00(gs, d, z)),
        "p0sq": pair.p0sq,
        "q0": pair.q0,
        "t_coeffs": list(pair.t_coeffs),
    }


def _cmd_coeffs(args, cfg, doc):
    gs = _need_gs(doc)
    d = _need_divisor(doc, gs)
    seg = jacobi_cf.coefficients(gs, d, args.n0, args.n1, prec=cfg.precision)
    if cfg.fmt == "csv":
        sys.stdout.write(seg.to_csv())
        return None
    return seg.to_json()


def _cmd_transfer(args, cfg, doc):
    gs = _need_gs(doc)
    d = _need_divisor(doc, gs)
    n = args.n if args.n is not None else 5
    seg = jacobi_cf.coefficients(gs, d, 0, n + 1, prec=cfg.precision)
    z = _parse_z(args, default=2j)
    a = jacobi_cf.transfer_matrix(seg, z, n)
    out = {
        "z": z,
        "n": n,
        "matrix": [[complex(v) for v in row] for row in a],
        "det": complex(np.linalg.det(a)),
    }
    if z.imag > 0:
        out["cd_residual"] = jacobi_cf.cd_residual(seg, z, n)
    else:
        out["j_unitarity_residual"] = jacobi_cf.j_unitarity_residual(seg, z.real, n)
    return out


def _cmd_abel(args, cfg, doc):
    gs = _need_gs(doc)
    d = _need_divisor(doc, gs)
    cp = critical_points(gs, cfg.qtol)
    return abel.abel_map(gs, cp, d, cfg.qtol).to_json()


def _cmd_invert(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    alpha = abel.Character.from_json(doc)
    d = abel.invert_abel(gs, cp, alpha)
    out = d.to_json()
    out["residual"] = abel.abel_map(gs, cp, d, cfg.qtol).distance(alpha)
    return out


def _cmd_shift_check(args, cfg, doc):
    gs = _need_gs(doc)
    d = _need_divisor(doc, gs)
    cp = critical_points(gs, cfg.qtol)
    res = abel.shift_covariance_residual(gs, cp, d, prec=cfg.precision, steps=args.steps,
                                         qtol=cfg.qtol)
    return {"steps": args.steps, "residual": res}


def _cmd_kernel0(args, cfg, doc):
    gs = _need_gs(doc)
    d = _need_divisor(doc, gs)
    cp = critical_points(gs, cfg.qtol)
    delta0 = abel.widom_delta(cp)
    return {"k0": abel.kernel_at_origin(gs, cp, d, cfg.qtol),
            "delta0": delta0, "delta0_sq": delta0 ** 2}


def _cmd_measure(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    box = doc.get("box", [])
    return {"measure": abel.measure_box(gs, cp, box, cfg.qtol)}


def _cmd_measure_mc(args, cfg, doc):
    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    box = doc.get("box", [])
    est, se = abel.measure_mc(gs, cp, box, samples=args.mc_samples, seed=cfg.seed)
    return {"estimate": est, "stderr": se, "samples": args.mc_samples, "seed": cfg.seed}


def _cmd_comb(args, cfg, doc):
    if "teeth" in doc:
        comb = comb_mod.CombData.from_json(doc)
        if "bracket" not in doc:
            raise ValidationError("inverse comb problem needs a 'bracket' gap system")
        bracket = GapSystem.from_json(doc["bracket"])
        gs = comb_mod.gaps_from_comb(comb, bracket, cfg.qtol)
        return gs.to_json()
    gs = _need_gs(doc)
    comb = comb_mod.comb_from_gaps(gs, qtol=cfg.qtol)
    out = comb.to_json()
    out["delta0"] = comb.delta0
    out["is_widom"] = comb.is_widom
    out["rational_relations"] = [list(r) for r in comb.rational_relation_report()]
    return out


def _cmd_truncate(args, cfg, doc):
    comb = comb_mod.CombData.from_json(doc)
    if args.n is None:
        raise ValidationError("truncate needs --n")
    trunc = comb_mod.truncate_comb(comb, args.n)
    out = trunc.to_json()
    out["delta_n0"] = trunc.delta0
    return out


# ---------------------------------------------------------------------------
# verify


def _fixture_docs():
    from importlib import resources

    docs = []
    root = resources.files("finitegap") / "fixtures"
    for name in sorted(p.name for p in root.iterdir() if p.name.endswith(".json")):
        docs.append((name, json.loads((root / name).read_text())))
    return docs


def _verify_instance(name, doc, cfg, rng):
    checks = []

    def record(check, value, threshold):
        checks.append({
            "fixture": name, "check": check, "value": float(value),
            "threshold": threshold, "pass": bool(value <= threshold),
        })

    gs = _need_gs(doc)
    cp = critical_points(gs, cfg.qtol)
    d = _need_divisor(doc, gs) if "divisor" in doc else Divisor(())
    pair = split_resolvents(gs, d)

    pts = []
    for lo, hi in gs.bands:
        w = hi - lo
        pts.extend(np.linspace(lo + 0.05 * w, hi - 0.05 * w, 8))
    record("reflectionless", max(reflectionless_residual(gs, pair, x) for x in pts), 1e-8)

    zs = rng.uniform(-3, 3, 10) + 1j * rng.uniform(0.2, 2.0, 10)
    alg = max(
        abs((-1.0 / r00(gs, d, z)) - (-1.0 / pair.r_plus(z) + pair.p0sq * pair.r_minus(z)))
        for z in zs
    )
    record("resolvent_algebra", alg, 1e-12)

    seg = jacobi_cf.coefficients(gs, d, -5, 12, prec=cfg.precision)
    if gs.n_gaps == 0:
        record("free_jacobi", max(max(abs(p - 1.0) for p in seg.p),
                                  max(abs(q) for q in seg.q)), 1e-12)
    z0 = 0.5 * (gs.b0 + gs.a0) + 0.9j
    record("transfer_det", abs(np.linalg.det(jacobi_cf.transfer_matrix(seg, z0, 8)) - 1.0), 1e-10)
    record("christoffel_darboux", jacobi_cf.cd_residual(seg, z0, 8), 1e-8)
    record("j_unitarity", jacobi_cf.j_unitarity_residual(seg, pts[0], 8), 1e-8)
    record("j_expanding", max(0.0, -jacobi_cf.j_expanding_min_eig(seg, z0, 8)), 1e-10)

    if gs.n_gaps:
        record("shift_covariance",
               abel.shift_covariance_residual(gs, cp, d, prec=cfg.precision, qtol=cfg.qtol), 1e-6)
        delta0 = abel.widom_delta(cp)
        k0 = abel.kernel_at_origin(gs, cp, d, cfg.qtol)
        record("kernel_bounds", max(0.0, k0 - 1.0, delta0 ** 2 - k0), 1e-12)
        alpha = abel.abel_map(gs, cp, d, cfg.qtol)
        record("abel_roundtrip",
               abel.abel_map(gs, cp, abel.invert_abel(gs, cp, alpha), cfg.qtol).distance(alpha),
               1e-9)
    if 1 <= gs.n_gaps <= 2:
        comb = comb_mod.comb_from_gaps(gs, cp, cfg.qtol)
        rec = comb_mod.gaps_from_comb(comb, gs, cfg.qtol)
        err = max(
            abs(np.asarray(rec.gaps).ravel() - np.asarray(gs.gaps).ravel()),
            default=0.0,
        ) / gs.diameter
        record("comb_roundtrip", err, 1e-6)
    return checks


def _cmd_verify(args, cfg, doc):
    rng = np.random.default_rng(cfg.seed)
    checks = []
    for name, fdoc in _fixture_docs():
        checks.extend(_verify_instance(name, fdoc, cfg, rng))
    ok = all(c["pass"] for c in checks)
    for c in checks:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"[{status}] {c['fixture']:>10s} {c['check']:<20s} "
              f"value={c['value']:.3e} threshold={c['threshold']:.0e}", file=sys.stderr)
    return {"checks": checks, "all_pass": ok}


_COMMANDS = {
    "critical": (_cmd_critical, True),
    "green": (_cmd_green, True),
    "harmonic": (_cmd_harmonic, True),
    "dos": (_cmd_dos, True),
    "resolvents": (_cmd_resolvents, True),
    "coeffs": (_cmd_coeffs, True),
    "transfer": (_cmd_transfer, True),
    "abel": (_cmd_abel, True),
    "invert": (_cmd_invert, True),
    "shift-check": (_cmd_shift_check, True),
    "kernel0": (_cmd_kernel0, True),
    "measure": (_cmd_measure, True),
    "measure-mc": (_cmd_measure_mc, True),
    "comb": (_cmd_comb, True),
    "truncate": (_cmd_truncate, True),
    "verify": (_cmd_verify, False),
}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = RunConfig(
            precision=args.prec if args.prec is not None else _default_precision(),
            qtol=args.qtol,
            seed=args.seed,
            fmt="csv" if args.csv else "json",
        )
        handler, needs_doc = _COMMANDS[args.command]
        doc = _load_doc(args, needs_doc)
        result = handler(args, cfg, doc)
    except (ValidationError, json.JSONDecodeError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        detail = f" (residual {exc.residual:.3e})" if exc.residual is not None else ""
        print(f"numeric failure: {exc}{detail}", file=sys.stderr)
        return 3
    if result is not None:
        _emit(result, cfg)
    if args.command == "verify" and not result["all_pass"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
