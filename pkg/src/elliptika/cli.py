"""Command-line front end: ``elliptika <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 a residual above tolerance (or a
numerical accuracy failure), 3 file I/O.  Results go to stdout or ``--out``
as JSON (complex numbers as ``[re, im]``) or CSV; errors go to stderr as a
one-line JSON object.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .gaudin import Scene, extract_integrals, joint_spectrum, scene_from_json
from .kz import COVARIANT, DUAL, TAU, connection_matrix, modular_check, path_from_json, transport
from .liealg import S, T, ModularElement, parse_rep_spec
from .numcore import DEFAULT_CFG, AccuracyError, ElliptikaError, ToleranceConfig, ValidationError
from .selftest import FULL, QUICK, run_selftest
from .theta import BracketIndex, Characteristic, theta_eval

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_IO = 0, 1, 2, 3


class _IOFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ---------------------------------------------------------------- parsing helpers

def _complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ValidationError(f"expected RE,IM but got {text!r}")


def _complex_list(text: str) -> list[complex]:
    return [_complex(p) for p in text.split(";") if p.strip()]


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"expected a rational like 1/2, got {text!r}") from None


def _gamma(text: str) -> ModularElement:
    named = {"S": S, "T": T, "I": ModularElement.identity()}
    if text.upper() in named:
        return named[text.upper()]
    try:
        a, b, c, d = (int(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"gamma must be S, T or a,b,c,d; got {text!r}") from None
    return ModularElement(a, b, c, d)


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _cfg(args) -> ToleranceConfig:
    kw = {}
    if args.trunc is not None:
        if not 0 < args.trunc < 1:
            raise ValidationError("--trunc must lie in (0, 1)")
        kw["series_target"] = args.trunc
    if args.tol is not None:
        if not args.tol > 0:
            raise ValidationError("--tol must be positive")
        kw["residual_tol"] = args.tol
    return dataclasses.replace(DEFAULT_CFG, **kw)


def _scene_doc(args) -> dict:
    """Scene document from ``--scene`` with individual flags layered on top."""
    doc = {}
    if args.scene:
        doc = _read_json(args.scene)
        if isinstance(doc, dict) and isinstance(doc.get("result"), dict) and "scene" in doc["result"]:
            doc = doc["result"]["scene"]  # accept our own result documents
        if not isinstance(doc, dict):
            raise ValidationError("scene file must hold a JSON object")
        doc = dict(doc)
    if args.tau is not None:
        c = _complex(args.tau)
        doc["tau"] = [c.real, c.imag]
    if args.z is not None:
        doc["z"] = [[c.real, c.imag] for c in _complex_list(args.z)]
    if args.N is not None:
        doc["N"] = args.N
    if args.level is not None:
        c = _complex(args.level)
        doc["level_k"] = [c.real, c.imag]
    doc.setdefault("N", 2)
    doc.setdefault("level_k", [0.0, 0.0])
    if args.reps is not None:
        specs = [s.strip() for s in args.reps.split(";") if s.strip()]
        if len(specs) == 1 and "z" in doc:
            specs = specs * len(doc["z"])
        doc["reps"] = specs
    missing = [k for k in ("tau", "z", "reps") if k not in doc]
    if missing:
        raise ValidationError(f"scene incomplete, missing {missing} (give --scene or the flags)")
    if len(doc["reps"]) != len(doc["z"]):
        raise ValidationError("need one representation per marked point")
    return doc


def _scene(args) -> tuple[Scene, dict]:
    doc = _scene_doc(args)
    return scene_from_json(doc), doc


# ---------------------------------------------------------------- serialization

def _num(x):
    x = complex(x)
    return [float(x.real), float(x.imag)]


def _mat(M):
    M = np.asarray(M, dtype=complex)
    return [[_num(v) for v in row] for row in M]


def _provenance(args, cfg: ToleranceConfig, command: str) -> dict:
    return {
        "version": __version__,
        "command": command,
        "seed": args.seed,
        "tolerances": {"series_target": cfg.series_target, "residual_tol": cfg.residual_tol,
                       "contour_samples": cfg.contour_samples},
        "truncation": cfg.series_target,
    }


def _is_pair(v) -> bool:
    return isinstance(v, list) and len(v) == 2 and all(isinstance(p, float) for p in v)


def _is_mat(v) -> bool:
    return (isinstance(v, list) and bool(v) and all(isinstance(r, list) and r for r in v)
            and all(_is_pair(x) for r in v for x in r))


def _csv_rows(result: dict):
    """Flatten matrices row-major; scalars become single rows.  The input scene is omitted."""
    rows = []

    def walk(name, v):
        if isinstance(v, dict):
            for k in v:
                if not name and k == "scene":
                    continue
                walk(f"{name}.{k}" if name else k, v[k])
        elif _is_mat(v):
            for r, row in enumerate(v):
                for c, (re_, im_) in enumerate(row):
                    rows.append((name, r, c, re_, im_))
        elif _is_pair(v):
            rows.append((name, "", "", v[0], v[1]))
        elif isinstance(v, list):
            for k, item in enumerate(v):
                walk(f"{name}[{k}]", item)
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            rows.append((name, "", "", float(v), 0.0))
    walk("", result)
    return rows


def _emit(args, payload: dict):
    if args.format == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        rows = _csv_rows(payload["result"])
        names = {r[0] for r in rows}
        if len(names) == 1:
            wr.writerow(["row", "col", "re", "im"])
            wr.writerows([r[1:] for r in rows])
        else:
            wr.writerow(["name", "row", "col", "re", "im"])
            wr.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise _IOFailure(f"cannot write {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_selftest(args, cfg):
    level = FULL if args.full else QUICK
    # --tol here overrides the identity tolerances, not the internal checks
    cfg = dataclasses.replace(cfg, residual_tol=DEFAULT_CFG.residual_tol)
    groups = args.groups.split(",") if args.groups else None
    rep = run_selftest(args.seed, level, cfg, tol_override=args.tol, groups=groups)
    for g in rep.groups:
        for r in g.identities:
            flag = "PASS" if r.passed else "FAIL"
            print(f"{flag} {g.group}: {r.name} max={r.max_residual:.3e} tol={r.tol:.1e} "
                  f"n={r.samples}", file=sys.stderr)
        print(f"     {g.group}: {g.elapsed_s:.2f} s (budget {g.budget_s:.0f} s)", file=sys.stderr)
    return rep.to_json(), (EXIT_OK if rep.passed else EXIT_TOLERANCE)


def cmd_gaudin(args, cfg):
    sc, doc = _scene(args)
    d = extract_integrals(sc, cfg=cfg)
    res = {"scene": doc, "C": [_mat(c) for c in d.C], "H": [_mat(h) for h in d.H], "H0": _mat(d.H0),
           "fit_residual": d.fit_residual, "radii": list(d.radii)}
    return res, EXIT_OK


def cmd_spectrum(args, cfg):
    sc, doc = _scene(args)
    tol = 1e-7 if args.tol is None else args.tol
    spec = joint_spectrum(sc, cfg=cfg, tol=tol)
    table = [{"mu": [_num(m) for m in e.mu], "multiplicity": int(e.multiplicity), "defective": bool(e.defective)}
             for e in spec]
    return {"scene": doc, "dim": sc.dim, "entries": table,
            "total_multiplicity": sum(e["multiplicity"] for e in table)}, EXIT_OK


def _direction(text):
    if text.lower() == TAU:
        return TAU
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"direction must be 'tau' or a site index, got {text!r}") from None


def cmd_kz(args, cfg):
    sc, doc = _scene(args)
    direction = _direction(args.direction)
    A = connection_matrix(sc, None, direction, args.variant, cfg)
    return {"scene": doc, "direction": direction, "variant": args.variant, "matrix": _mat(A)}, EXIT_OK


def cmd_transport(args, cfg):
    sc, doc = _scene(args)
    if not args.path:
        raise ValidationError("transport needs --path FILE")
    path = path_from_json(_read_json(args.path))
    T_, err = transport(sc, None, path, variant=args.variant, cfg=cfg, return_error=True)
    digest = hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()
    return {"scene": doc, "scene_hash": digest, "kappa": _num(sc.kappa), "variant": args.variant,
            "steps": [seg.steps for seg in path.segments], "matrix": _mat(T_),
            "error_estimate": float(err)}, EXIT_OK


def cmd_modular(args, cfg):
    sc, doc = _scene(args)
    g = _gamma(args.gamma)
    r_r, r_w = modular_check(sc, None, g, cfg)
    tol = 1e-8 if args.tol is None else args.tol
    ok = r_r <= tol and r_w <= tol
    res = {"scene": doc, "gamma": [g.a, g.b, g.c, g.d], "r_matrix_residual": r_r,
           "tau_equation_residual": r_w, "tol": tol, "passed": ok}
    return res, (EXIT_OK if ok else EXIT_TOLERANCE)


def cmd_theta(args, cfg):
    tau = _complex(args.tau) if args.tau is not None else 1j
    t = _complex(args.t)
    if args.bracket:
        try:
            a, b = (int(v) for v in args.bracket.split(","))
        except ValueError:
            raise ValidationError("--bracket expects a,b") from None
        ch = BracketIndex(a, b, args.N or 2).characteristic
    else:
        k, kp = (_fraction(v) for v in args.char.split(","))
        ch = Characteristic(k, kp)
    val = theta_eval(ch, t, tau, args.d, cfg)
    return {"characteristic": [str(ch.kappa), str(ch.kappa_prime)], "t": _num(t), "tau": _num(tau),
            "d": args.d, "value": _num(val)}, EXIT_OK


COMMANDS = {
    "selftest": cmd_selftest, "gaudin": cmd_gaudin, "spectrum": cmd_spectrum, "kz": cmd_kz,
    "transport": cmd_transport, "modular": cmd_modular, "theta": cmd_theta,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="elliptika", description="Elliptic kernels, XYZ Gaudin models and KZB connections.")
    p.add_argument("--version", action="version", version=f"elliptika {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--scene", help="scene JSON file")
    common.add_argument("--tau", help="modulus RE,IM")
    common.add_argument("--z", help="marked points RE,IM;RE,IM;...")
    common.add_argument("--N", type=int, help="rank (sl_N)")
    common.add_argument("--level", help="level k as RE,IM")
    common.add_argument("--reps", help="representation specs separated by ';' (one spec is repeated)")
    common.add_argument("--tol", type=float, help="residual tolerance override")
    common.add_argument("--trunc", type=float, help="theta series truncation target")
    common.add_argument("--seed", type=int, default=42, help="seed for randomized sweeps")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("selftest", parents=[common], help="run the identity suite")
    lvl = s.add_mutually_exclusive_group()
    lvl.add_argument("--quick", action="store_true", help="reduced sweep (default)")
    lvl.add_argument("--full", action="store_true", help="acceptance-size sweep")
    s.add_argument("--groups", help="comma-separated subset of groups")
    sub.add_parser("gaudin", parents=[common], help="C_i, H_i and H_0 of a scene")
    sub.add_parser("spectrum", parents=[common], help="joint spectrum of the Gaudin family")
    k = sub.add_parser("kz", parents=[common], help="connection coefficient in one direction")
    k.add_argument("--direction", default="0", help="site index or 'tau'")
    k.add_argument("--variant", choices=(COVARIANT, DUAL), default=COVARIANT)
    tr = sub.add_parser("transport", parents=[common], help="parallel transport along a path")
    tr.add_argument("--path", help="path JSON file")
    tr.add_argument("--variant", choices=(COVARIANT, DUAL), default=COVARIANT)
    m = sub.add_parser("modular", parents=[common], help="covariance residuals under an SL(2,Z) element")
    m.add_argument("--gamma", default="S", help="S, T, I or a,b,c,d")
    th = sub.add_parser("theta", parents=[common], help="evaluate a theta function")
    grp = th.add_mutually_exclusive_group()
    grp.add_argument("--char", default="1/2,1/2", help="characteristic k,k' as rationals")
    grp.add_argument("--bracket", help="index a,b of theta_[a,b] (uses --N)")
    th.add_argument("--t", default="0,0", help="argument RE,IM")
    th.add_argument("--d", type=int, default=0, help="t-derivative order")
    return p


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": {"code": code, "type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        cfg = _cfg(args)
        result, code = COMMANDS[args.command](args, cfg)
        _emit(args, {"provenance": _provenance(args, cfg, args.command), "result": result})
        return code
    except _IOFailure as exc:
        return _fail(EXIT_IO, exc)
    except AccuracyError as exc:
        return _fail(EXIT_TOLERANCE, exc)
    except (ValidationError, ElliptikaError) as exc:
        return _fail(EXIT_VALIDATION, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":
    sys.exit(main())
