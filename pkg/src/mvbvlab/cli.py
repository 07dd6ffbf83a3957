"""Command-line entry point ``mvbvlab``.

Subcommands::

    certify       class certificate for one sequence on a window
    generate      materialise a prefix of a sequence as CSV
    converge      dyadic sup-gap probe with a convergence verdict
    diverge-demo  adversarial gaps of the block constructions
    relations     run the witness corpus against the expected class matrix
    complex-check coefficient conditions and partial-sum gaps of a complex sequence

Exit status: 0 on success, 1 on errors, 2 when ``--assert-member`` /
``--assert-convergent`` is given and the verdict is not the asserted one, or
when ``relations`` finds a mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from ._kernels import configure_threads
from .complexseries import (ComplexSequenceProvider, cond_d1_check, cond_d2_certify, cond_d3_probe,
                            cond_d4_partial, complex_gap_grid)
from .generators import (FAMILIES, Prop3Spec, Thm1Spec, Thm6Spec, gen_family, gen_prop3, gen_thm1,
                         gen_thm6)
from .relations import identity_regulator, relations_table
from .sequences import ExplicitSequence, SequenceProvider
from .seqclass import CLASS_IDS, SLOPE_THRESHOLD, ClassParams, certify, certify_mvbvs
from .sineseries import VerdictConfig, adversarial_probe, convergence_report, gap_grid

BUILTINS = FAMILIES + ("thm1", "thm6", "prop3")
HEADER = f"# mvbvlab {__version__}"
REGULATORS = {
    "identity": identity_regulator,
    "one": lambda: gen_family("constant", c=1.0),
    "log_ceiling": lambda: gen_family("log_ceiling", scale=1.0),
}


class SpecError(ValueError):
    """A malformed sequence spec or command-line value."""


# ---------------------------------------------------------------------------
# sequence specs

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def build_builtin(name: str, params: Optional[dict] = None) -> SequenceProvider:
    """Construct a named generator from a parameter dict.

    ``thm6`` takes ``M`` as a nested ``{"name": ..., **params}`` spec
    (default ``log_ceiling`` with ``scale = 10``); ``prop3`` takes ``base``
    the same way (default ``power_p`` with ``p = 1``).
    """
    params = dict(params or {})
    if name in FAMILIES:
        limit = params.pop("limit", None)
        return gen_family(name, limit=None if limit is None else int(limit), **params)
    if name == "thm1":
        return gen_thm1(Thm1Spec(j_max=int(params.get("j_max", 3))))
    if name == "thm6":
        m = dict(params.get("M", {"name": "log_ceiling", "scale": 10.0}))
        M = build_builtin(m.pop("name"), m)
        return gen_thm6(Thm6Spec(M, j_max=int(params.get("j_max", 3))))
    if name == "prop3":
        b = dict(params.get("base", {"name": "power_p", "p": 1.0}))
        base = build_builtin(b.pop("name"), b)
        return gen_prop3(Prop3Spec(base, k_max=int(params.get("k_max", 13))))
    raise SpecError(f"unknown builtin {name!r}; expected one of {BUILTINS}")


def builtin_schedule(seq: SequenceProvider) -> dict:
    meta = getattr(seq, "meta", {})
    return {k: meta[k] for k in ("schedule", "log_scales") if k in meta}


def _parse_csv(path: Path, text: str) -> ExplicitSequence:
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0].replace(" ", "") != "k,a_k":
        raise SpecError(f"{path}: expected header 'k,a_k'")
    vals = []
    for line_no, line in enumerate(rows[1:], start=2):
        try:
            k, v = line.split(",")
            k, v = int(k), float(v)
        except ValueError:
            raise SpecError(f"{path}: row {line_no}: expected 'k,a_k', got {line!r}") from None
        if k != len(vals) + 1:
            raise SpecError(f"{path}: row {line_no}: index {k} out of sequence (expected {len(vals) + 1})")
        vals.append(v)
    try:
        return ExplicitSequence(vals, label=path.name)
    except ValueError as e:
        raise SpecError(f"{path}: values: {e}") from None


def parse_sequence_spec(path) -> SequenceProvider | ComplexSequenceProvider:
    """Load a sequence from JSON (explicit, builtin or complex form) or a ``k,a_k`` CSV."""
    path = Path(path)
    if not path.exists():
        raise SpecError(f"{path}: no such file")
    text = path.read_text()
    if path.suffix.lower() == ".csv" or text.lstrip().startswith(("#", "k,")):
        return _parse_csv(path, text)
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(spec, dict) or "type" not in spec:
        raise SpecError(f"{path}: field 'type' missing")
    kind = spec["type"]
    if kind == "explicit":
        values = spec.get("values")
        if not isinstance(values, list):
            raise SpecError(f"{path}: field 'values' must be a list")
        try:
            return ExplicitSequence(values, label=spec.get("label", path.stem))
        except (ValueError, TypeError) as e:
            raise SpecError(f"{path}: field 'values': {e}") from None
    if kind == "builtin":
        if "name" not in spec:
            raise SpecError(f"{path}: field 'name' missing")
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise SpecError(f"{path}: field 'params' must be an object")
        try:
            return build_builtin(spec["name"], params)
        except (ValueError, TypeError) as e:
            raise SpecError(f"{path}: builtin {spec['name']!r}: {e}") from None
    if kind == "complex":
        coeffs = spec.get("coefficients")
        if not isinstance(coeffs, list):
            raise SpecError(f"{path}: field 'coefficients' must be a list of [k, re, im]")
        try:
            return ComplexSequenceProvider.from_triples(coeffs, float(spec.get("theta0", 0.0)),
                                                        label=spec.get("label", path.stem))
        except (ValueError, TypeError) as e:
            raise SpecError(f"{path}: field 'coefficients': {e}") from None
    raise SpecError(f"{path}: field 'type': unknown value {kind!r} (explicit, builtin, complex)")


def _builtin_params(args) -> dict:
    params = {}
    for key, attr in (("p", "p"), ("c", "c"), ("j_max", "jmax"), ("k_max", "kmax"), ("scale", "scale"),
                      ("limit", "limit")):
        v = getattr(args, attr, None)
        if v is not None:
            params[key] = v
    if args.builtin == "thm6" and "scale" in params:
        params["M"] = {"name": "log_ceiling", "scale": params.pop("scale")}
    for item in args.param or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise SpecError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def _load(args):
    if args.input:
        spec = {"type": "file", "path": str(args.input)}
        return parse_sequence_spec(args.input), spec
    params = _builtin_params(args)
    try:
        seq = build_builtin(args.builtin, params)
    except (ValueError, TypeError) as e:
        raise SpecError(f"builtin {args.builtin!r}: {e}") from None
    return seq, {"type": "builtin", "name": args.builtin, "params": params}


def _real(seq, command):
    if isinstance(seq, ComplexSequenceProvider):
        raise SpecError(f"{command} needs a real sequence; use complex-check for complex input")
    return seq


# ---------------------------------------------------------------------------
# argument helpers

def parse_window(text: str) -> tuple:
    try:
        a, b = text.split(":")
        lo, hi = int(a), int(b)
    except ValueError:
        raise SpecError(f"window: expected 'n_min:n_max', got {text!r}") from None
    if lo < 1 or hi < lo:
        raise SpecError(f"window: need 1 <= n_min <= n_max, got {text!r}")
    return lo, hi


def parse_levels(text: str) -> list:
    """Comma list ``16,32,64`` or dyadic range ``16:4096`` (powers of two in between)."""
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
            out, n = [], lo
            while n <= hi:
                out.append(n)
                n *= 2
        else:
            out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise SpecError(f"levels: cannot parse {text!r}") from None
    if not out or min(out) < 1:
        raise SpecError(f"levels: need positive integers, got {text!r}")
    return out


def _write_csv(path: Path, header: list, rows: list) -> None:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])
    path.write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, float):
        return "inf" if math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    return obj


def _write_json(path: Path, payload: dict) -> None:
    payload = {"tool": "mvbvlab", "version": __version__, **payload}
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n")


def _out(args, suffix: str) -> Optional[Path]:
    if not args.out:
        return None
    p = Path(f"{args.out}{suffix}")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _workers(args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    raw = os.environ.get("MVBVLAB_THREADS")
    return max(1, int(raw)) if raw and raw.isdigit() else 1


# ---------------------------------------------------------------------------
# subcommands

def cmd_certify(args) -> int:
    seq, spec = _load(args)
    seq = _real(seq, "certify")
    window = parse_window(args.window)
    cid = args.class_id.upper()
    workers = _workers(args)
    if cid == "MVBVS" and args.lam is None:
        cert = certify_mvbvs(seq, window, step=args.step, slope_threshold=args.slope_threshold, workers=workers)
    else:
        kw = {"lam": args.lam or 2.0, "n0_group": args.n0, "alpha": args.alpha}
        if cid == "RVQMS":
            if args.regulator is None:
                raise SpecError("RVQMS needs --regulator")
            kw["R"] = REGULATORS[args.regulator]()
        cert = certify(seq, ClassParams(cid, **kw), window, step=args.step, tail_stop=args.tail_stop,
                       slope_threshold=args.slope_threshold, workers=workers)
    d = cert.to_dict()
    d["label"] = seq.label
    print(json.dumps(d, indent=None if args.compact else 2))
    if (p := _out(args, ".json")) is not None:
        _write_json(p, {"command": "certify", "spec": spec, "certificate": d})
    if args.assert_member and not cert.member:
        return 2
    return 0


def cmd_generate(args) -> int:
    seq, spec = _load(args)
    seq = _real(seq, "generate")
    count = args.count
    if count is None:
        count = min(seq.limit, 10_000) if seq.limit is not None else 10_000
    if not seq.in_range(count):
        raise SpecError(f"count: {count} beyond available range (last index {seq.limit})")
    vals = seq.terms(1, count)
    body = "\n".join(f"{k},{_fmt(v)}" for k, v in enumerate(vals, start=1))
    text = f"{HEADER}\nk,a_k\n{body}\n"
    side = {"command": "generate", "spec": spec, "label": seq.label, "count": count, **builtin_schedule(seq)}
    if args.out:
        _out(args, ".csv").write_text(text)
        _write_json(_out(args, ".json"), side)
    else:
        sys.stdout.write(text)
    return 0


def _verdict_config(args) -> VerdictConfig:
    return VerdictConfig(args.div_threshold, args.conv_threshold, args.na_decay, args.na_flat, args.grid_size)


def cmd_converge(args) -> int:
    seq, spec = _load(args)
    seq = _real(seq, "converge")
    levels = parse_levels(args.levels)
    js = parse_levels(args.adversarial) if args.adversarial else ()
    probe = convergence_report(seq, levels, _verdict_config(args), adversarial_js=js)
    rows = [(n, m, g) for (n, m), g in zip(probe.pairs, probe.gaps)]
    for n, m, g in rows:
        print(f"{n:>10d} {m:>10d}  sup_gap={g:.6g}")
    print(f"verdict: {probe.verdict} (basis {probe.basis}; gap rule: {probe.gap_verdict})")
    if (p := _out(args, ".csv")) is not None:
        _write_csv(p, ["pair_n", "pair_m", "sup_gap"], rows)
        _write_json(_out(args, ".json"), {"command": "converge", "spec": spec, "probe": probe.to_dict()})
    if args.assert_convergent and probe.verdict != "uniformly_convergent_evidence":
        return 2
    return 0


def cmd_diverge_demo(args) -> int:
    seq, spec = _load(args)
    seq = _real(seq, "diverge-demo")
    sched = getattr(seq, "meta", {}).get("schedule")
    if not sched or seq.meta.get("generator") not in ("thm1", "thm6"):
        raise SpecError("diverge-demo needs a block construction (--builtin thm1 or thm6)")
    js = parse_levels(args.js) if args.js else list(range(2, seq.meta["j_max"] + 1))
    rows = adversarial_probe(seq, js, mode=args.mode)
    out = []
    for r in rows:
        norm = r["gap"] / r["sqrt_log_scale"]
        out.append((r["j"], r["n_j"], r["t_j"], r["gap"], r["sqrt_log_scale"], norm))
        print(f"j={r['j']} n_j={r['n_j']} t_j={r['t_j']:.6g} gap={r['gap']:.6g} gap/sqrt(log)={norm:.6g}")
    if (p := _out(args, ".csv")) is not None:
        _write_csv(p, ["j", "n_j", "t_j", "gap", "sqrt_log_scale", "normalized_gap"], out)
        _write_json(_out(args, ".json"), {"command": "diverge-demo", "spec": spec, "mode": args.mode,
                                          **builtin_schedule(seq), "rows": rows})
    return 0


def cmd_relations(args) -> int:
    cells = relations_table(workers=_workers(args))
    width = max(len(c.witness) for c in cells)
    bad = 0
    for c in cells:
        mark = "ok" if c.ok else "MISMATCH"
        bad += not c.ok
        print(f"{c.witness:<{width}}  {c.class_id:<6} expected={'Y' if c.expected else 'N'} "
              f"observed={'Y' if c.observed else 'N'}  {c.verdict:<20} {mark}")
    print(f"{len(cells) - bad}/{len(cells)} cells match")
    if (p := _out(args, ".csv")) is not None:
        _write_csv(p, ["witness", "class_id", "expected", "observed", "verdict", "constant_estimate",
                       "growth_slope"],
                   [(c.witness, c.class_id, int(c.expected), int(c.observed), c.verdict, c.constant_estimate,
                     c.growth_slope) for c in cells])
        _write_json(_out(args, ".json"), {"command": "relations", "cells": [c.to_dict() for c in cells],
                                          "mismatches": bad})
    return 2 if bad else 0


def cmd_complex_check(args) -> int:
    if not args.input:
        raise SpecError("complex-check needs --input with a complex JSON spec")
    cseq = parse_sequence_spec(args.input)
    if not isinstance(cseq, ComplexSequenceProvider):
        cseq = ComplexSequenceProvider.from_real(cseq)
    bound = cseq.require_bound(None)
    window = parse_window(args.window) if args.window else (1, max(1, bound // 4))
    lam = args.lam or 2.0
    d1 = cond_d1_check(cseq, bound)
    d2 = cond_d2_certify(cseq, window, lam)
    d3 = cond_d3_probe(cseq, parse_levels(args.levels) if args.levels else [window[0], window[1]], bound)
    d4 = cond_d4_partial(cseq, bound)
    print(f"D1 sector: {'ok' if d1.ok else f'fails at n={d1.first_violation} ({d1.failing})'}")
    print(f"D2 window {window}, lambda={lam}: {d2.verdict} (constant {d2.constant_estimate:.6g})")
    print("D3 n|c_n| tail sup: " + ", ".join(f"{n}:{v:.4g}" for n, v in d3))
    print(f"D4 partial sum {d4.partial_sum:.6g}; tail ratio {d4.tail_ratio:.4g}"
          f"{' (divergent)' if d4.divergent else ''}")
    gaps = []
    if args.levels:
        for n in parse_levels(args.levels):
            m = 2 * n
            if m > bound:
                break
            pos = gap_grid(n, m, args.grid_size)
            xs = np.concatenate([-pos[::-1], pos])
            g = complex_gap_grid(cseq, n, m, xs)
            gaps.append((n, m, float(np.abs(g.real).max()), float(np.abs(g.imag).max()), float(np.abs(g).max())))
    if (p := _out(args, "_d2.csv")) is not None:
        _write_csv(p, ["n", "lhs", "rhs", "defect"],
                   [(e.n, e.lhs, e.rhs, e.defect) for e in d2.profile.entries])
        _write_csv(_out(args, "_gaps.csv"), ["pair_n", "pair_m", "sup_gap_re", "sup_gap_im", "sup_gap_abs"], gaps)
        _write_json(_out(args, ".json"), {
            "command": "complex-check", "label": cseq.label, "theta0": cseq.theta0, "known_bound": bound,
            "d1": d1._asdict(), "d2": d2.to_dict(), "d3": d3,
            "d4": {**d4._asdict()}, "gaps": gaps,
        })
    if args.assert_member and not (d1.ok and d2.member and not d4.divergent):
        return 2
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--input", type=Path, help="JSON or CSV sequence spec")
    g.add_argument("--builtin", choices=BUILTINS, help="named generator")
    p.add_argument("--p", type=float, help="exponent for power_p / nbvs_bands")
    p.add_argument("--c", type=float, help="value for constant")
    p.add_argument("--jmax", type=int, help="deepest block generation for thm1/thm6")
    p.add_argument("--kmax", type=int, help="number of dyadic levels for prop3")
    p.add_argument("--scale", type=float, help="log_ceiling scale (also the M sequence of thm6)")
    p.add_argument("--limit", type=int, help="last valid index for a closed-form family")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="extra generator parameter (JSON value)")


def _add_verdict_knobs(p):
    d = VerdictConfig()
    p.add_argument("--div-threshold", type=float, default=d.div_threshold)
    p.add_argument("--conv-threshold", type=float, default=d.conv_threshold)
    p.add_argument("--na-decay", type=float, default=d.na_decay_ratio)
    p.add_argument("--na-flat", type=float, default=d.na_flat_ratio)
    p.add_argument("--grid-size", type=int, default=d.max_points, help="max grid points per pair")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvbvlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mvbvlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="class certificate on a window")
    _add_source(p)
    p.add_argument("--class", dest="class_id", required=True, type=str.upper, choices=CLASS_IDS)
    p.add_argument("--lambda", dest="lam", type=float, help="MVBVS lambda (default: search 2,3,5,8)")
    p.add_argument("--n0", type=int, default=1, help="GBVS group length N0")
    p.add_argument("--alpha", type=float, default=0.0, help="CQMS exponent")
    p.add_argument("--regulator", choices=tuple(REGULATORS), help="RVQMS regulator R(n)")
    p.add_argument("--window", required=True, metavar="N_MIN:N_MAX")
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--tail-stop", type=int, help="last index for RBVS/AMS tails")
    p.add_argument("--slope-threshold", type=float, default=SLOPE_THRESHOLD)
    p.add_argument("--workers", type=int)
    p.add_argument("--compact", action="store_true", help="single-line JSON on stdout")
    p.add_argument("--assert-member", action="store_true")
    p.add_argument("--out", help="output prefix")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("generate", help="materialise a prefix as k,a_k CSV")
    _add_source(p)
    p.add_argument("--count", type=int, help="number of terms (default min(range, 10000))")
    p.add_argument("--out", help="output prefix (default: CSV to stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("converge", help="dyadic sup-gap probe")
    _add_source(p)
    p.add_argument("--levels", default="16:4096", help="'16,32,64' or dyadic range '16:4096'")
    p.add_argument("--adversarial", help="block generations j to probe at t_j (block constructions only)")
    _add_verdict_knobs(p)
    p.add_argument("--assert-convergent", action="store_true")
    p.add_argument("--out", help="output prefix")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("diverge-demo", help="adversarial gaps of thm1/thm6")
    _add_source(p)
    p.add_argument("--js", help="generations, e.g. '2,3' (default 2..jmax)")
    p.add_argument("--mode", choices=("blocks", "literal"), default="blocks")
    p.add_argument("--out", help="output prefix")
    p.set_defaults(func=cmd_diverge_demo)

    p = sub.add_parser("relations", help="check the witness corpus against the class matrix")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output prefix")
    p.set_defaults(func=cmd_relations)

    p = sub.add_parser("complex-check", help="coefficient conditions of a complex sequence")
    p.add_argument("--input", type=Path, help="complex JSON spec ([k, re, im] triples)")
    p.add_argument("--window", metavar="N_MIN:N_MAX", help="D2 window (default 1:bound/4)")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--levels", help="D3 checkpoints and gap pairs (n, 2n)")
    p.add_argument("--grid-size", type=int, default=VerdictConfig().max_points)
    p.add_argument("--assert-member", action="store_true")
    p.add_argument("--out", help="output prefix")
    p.set_defaults(func=cmd_complex_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_threads()
        return args.func(args)
    except (SpecError, ValueError, IndexError, OSError) as e:
        print(f"mvbvlab {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
