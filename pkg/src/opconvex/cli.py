"""Command-line frontend.

Exit codes: 0 success, 2 usage or input error, 3 precondition violation
(e.g. a function outside the requested face or range), 4 verification
witness found.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import interval as itv
from .decompose import RangeError, decomposition_range, extremal_decomposition
from .faces import NotInFaceError, face_rep, is_maximal, is_simplicial, member, parse_face, smallest_closed_face, vanishing_point
from .matcalc import (
    convexity_witness_search,
    log_convexity_spot_check,
    loewner_psd_check,
    monotone_decreasing_check,
)
from .measure import INF, as_param
from .ocfun import NotInConeError, OcFunction, boundary, classify_extreme, sigma_support, tau_transform
from .recover import RecoveryError, SampleSet, fit_measure
from .specfile import SpecError, dump_spec, parse_spec

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_WITNESS = 0, 2, 3, 4
SWEEP_COLUMNS = ("alpha", "a", "c", "gamma", "atom_lambda", "atom_mass")
SEED_ENV = "OPCONVEX_SEED"


class Precondition(Exception):
    """The input is valid but violates the command's precondition."""


def fmt(v) -> str:
    """12 significant digits; ``inf`` for infinity."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0:
            return "0"
        return f"{v:.12g}"
    return str(v)


def _machine(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return fmt(v) if math.isinf(v) else float(fmt(v))
    if isinstance(v, (list, tuple)):
        return [_machine(x) for x in v]
    return str(v)


@dataclass
class Report:
    """Machine-readable records plus a human summary built from the same values."""

    command: str
    records: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    exit_code: int = EXIT_OK
    csv_columns: Optional[tuple] = None

    def add(self, text: Optional[str] = None, **values) -> None:
        self.records.append({k: _machine(v) for k, v in values.items()})
        if text is not None:
            self.summary.append(text.format(**{k: fmt(v) for k, v in values.items()}))

    def note(self, text: str) -> None:
        self.summary.append(text)

    def machine(self) -> str:
        return json.dumps({"command": self.command, "exit_code": self.exit_code, "records": self.records},
                          indent=2, sort_keys=False)

    def csv(self) -> str:
        cols = self.csv_columns or tuple(dict.fromkeys(k for r in self.records for k in r))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in self.records:
            writer.writerow(["" if r.get(c) is None else fmt(r.get(c)) for c in cols])
        return buf.getvalue()

    def render(self, style: str) -> str:
        if style == "machine":
            return self.machine() + "\n"
        if style == "csv":
            return self.csv()
        return "\n".join(self.summary) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _load(args):
    if not args.spec:
        raise SpecError("--spec is required")
    return parse_spec(args.spec).function


def _halfline(f):
    if not isinstance(f, OcFunction):
        raise Precondition("this command needs a (0, inf) function; use the interval-* commands")
    return f


def _interval(f):
    if not isinstance(f, itv.OcFunctionI):
        raise Precondition("this command needs a (-1, 1) function (kind interval-*)")
    return f


def _points(text: str) -> list:
    return [as_param(t, -INF) for t in text.split(",") if t.strip()]


def cmd_eval(args, rep: Report) -> None:
    f = _load(args)
    if not args.at:
        raise SpecError("--at is required")
    for x in _points(args.at):
        if isinstance(f, OcFunction) and not x > 0:
            raise Precondition("evaluation points must be > 0")
        if isinstance(f, itv.OcFunctionI) and not -1 < x < 1:
            raise Precondition("evaluation points must lie in (-1, 1)")
        rep.add("f({x}) = {value}", x=x, value=f(x))


def cmd_boundary(args, rep: Report) -> None:
    f = _halfline(_load(args))
    b = boundary(f)
    rep.add("f(0+) = {f_at_0}", f_at_0=b.f_at_0)
    rep.add("f'(inf) = {slope_at_inf}", slope_at_inf=b.slope_at_inf)
    if b.lin0 is not None:
        rep.add("lim f(x)/x at 0 = {lin0}", lin0=b.lin0)
    rep.add("lim f(x)/x^2 at inf = {quad_inf}", quad_inf=b.quad_inf)
    rep.add("in F_0: {in_f0}; in F_inf: {in_finf}", in_f0=b.in_f0, in_finf=b.in_finf)


def cmd_sigma(args, rep: Report) -> None:
    f = _load(args)
    sigma = itv.sigma_support_i(f) if isinstance(f, itv.OcFunctionI) else sigma_support(f)
    rep.add("Sigma_f = {sigma}", sigma=str(sigma))


def _face_arg(args):
    if not args.face:
        raise SpecError("--face is required")
    try:
        return parse_face(args.face)
    except ValueError as exc:
        raise SpecError(f"--face: {exc}") from None


def cmd_member(args, rep: Report) -> None:
    f = _load(args)
    face = _face_arg(args)
    if isinstance(f, itv.OcFunctionI):
        result = itv.membership_i(f, face)
    else:
        result = member(f, face)
    rep.add("{member}", face=str(face), member=result)


def cmd_face(args, rep: Report) -> None:
    f = _halfline(_load(args))
    face = smallest_closed_face(f)
    simplicial, witness = is_simplicial(face)
    rep.add("smallest closed face: {face}", face=str(face))
    rep.add("maximal: {maximal}; simplicial: {simplicial}", maximal=is_maximal(face), simplicial=simplicial)
    if witness is not None:
        rep.add("witness: {identity}", identity=str(witness))
    ray = classify_extreme(f)
    if ray is not None:
        rep.add("extreme ray g({alpha}, {lam}) with scale {scale}", alpha=ray.alpha, lam=ray.lam, scale=ray.scale)


def _weights_rows(rep: Report, alpha: float, weights) -> None:
    for lam, w in weights.atoms:
        rep.add("  weight {weight} at lambda = {lam}", lam=lam, weight=w)
    for lo, hi, d in weights.segments:
        rep.add("  density {density} on [{lo}, {hi}]", lo=lo, hi=hi, density=d)


def cmd_decompose(args, rep: Report) -> None:
    f = _halfline(_load(args))
    alpha = vanishing_point(f)
    if alpha is not None:
        if args.alpha is not None and as_param(args.alpha) != alpha:
            raise Precondition(f"f lies in F_{fmt(alpha)} and decomposes only there")
        r = face_rep(f, alpha)
        rep.add("f in F_{alpha}: unique decomposition over the normalized generators", alpha=alpha)
        _weights_rows(rep, alpha, r.weights)
        return
    rng = decomposition_range(f)
    rep.add("tangent range [{alpha0}, {alpha1}]", alpha0=rng.alpha0, alpha1=rng.alpha1)
    if args.alpha is None:
        return
    d = extremal_decomposition(f, as_param(args.alpha))
    rep.add("alpha = {alpha}: a = {a}, c = {c}", alpha=d.alpha, a=d.a, c=d.c)
    _weights_rows(rep, d.alpha, d.remainder.weights)


def cmd_sweep(args, rep: Report) -> None:
    f = _halfline(_load(args))
    if f.nu.segments:
        raise Precondition("sweep needs a discrete measure (atoms only)")
    if vanishing_point(f) is not None:
        raise Precondition("f lies in some F_alpha; its decomposition is unique")
    rng = decomposition_range(f)
    count = args.grid or 32
    cap = as_param(args.cap) if args.cap is not None else 20.0
    rep.csv_columns = SWEEP_COLUMNS
    for alpha in rng.grid(count, cap):
        d = extremal_decomposition(f, float(alpha))
        gamma = d.remainder.weights.mass_at(INF)
        atoms = [(lam, w * (1.0 + d.alpha + lam)) for lam, w in d.remainder.weights.atoms if lam != INF]
        for lam, m in atoms or [(None, 0.0)]:
            rep.records.append({
                "alpha": _machine(d.alpha), "a": _machine(d.a), "c": _machine(d.c), "gamma": _machine(gamma),
                "atom_lambda": None if lam is None else _machine(lam), "atom_mass": _machine(m),
            })
    rep.note(f"{count} decompositions over [{fmt(rng.alpha0)}, {fmt(min(rng.alpha1, cap))}]; "
             "remainder = gamma (x-alpha)^2 + sum atom_mass (x-alpha)^2/(x+atom_lambda)")


def _read_samples(path: str) -> SampleSet:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                pairs.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if pairs:
                    raise SpecError(f"{path}: bad sample row {row!r}") from None
    return SampleSet.from_pairs(pairs)


def cmd_fit(args, rep: Report) -> None:
    if args.samples:
        samples = _read_samples(args.samples)
    else:
        f = _halfline(_load(args))
        samples = SampleSet.from_function(f, np.geomspace(1e-2, 1e2, args.n or 50))
    res = fit_measure(samples)
    g = res.f
    rep.add("f1 = {f1}, d1 = {d1}", f1=g.f1, d1=g.d1)
    for lam, m in g.nu.atoms:
        rep.add("  atom {mass} at lambda = {lam}", lam=lam, mass=m)
    rep.add("rms residual {rms}; KKT residual {kkt}", rms=res.rms_residual, kkt=res.kkt_residual)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_spec(g, "fitted"))
        rep.note(f"fitted spec written to {args.out}")


def _record_witness(rep: Report, test: str, w) -> None:
    if w is None:
        rep.add(test + ": no witness", test=test, witness=False)
    else:
        rep.add(test + ": witness at trial {trial}, min eigenvalue {min_eig}",
                test=test, witness=True, trial=w.trial, min_eig=w.min_eig)
        rep.exit_code = EXIT_WITNESS


def cmd_verify(args, rep: Report) -> None:
    f = _load(args)
    n, trials, seed = args.n or 4, args.trials or 200, args.seed
    rng = np.random.default_rng(seed)
    if isinstance(f, itv.OcFunctionI):
        _record_witness(rep, "convexity", convexity_witness_search(f, n, trials, seed, spectrum=(-0.99, 0.99)))
        alpha, pts = 0.0, np.sort(rng.uniform(-0.95, 0.95, 8))
    else:
        _record_witness(rep, "convexity", convexity_witness_search(f, n, trials, seed))
        if boundary(f).in_finf:
            _record_witness(rep, "monotone decreasing", monotone_decreasing_check(f, n, trials, seed))
            _record_witness(rep, "log convexity", log_convexity_spot_check(f, n, trials, seed))
        alpha, pts = 1.5, np.sort(np.exp(rng.uniform(math.log(0.05), math.log(20.0), 8)))
    pts = pts[np.abs(pts - alpha) > 1e-3]
    m, psd = loewner_psd_check(f, alpha, pts)
    rep.add("loewner: min eigenvalue {min_eig}, psd {psd}", test="loewner", min_eig=m, psd=psd)
    if not psd:
        rep.exit_code = EXIT_WITNESS
    rep.note("no witness" if rep.exit_code == EXIT_OK else "witness found")


def cmd_tau(args, rep: Report) -> None:
    f = _halfline(_load(args))
    g = tau_transform(f)
    OcFunction(g.f1, g.d1, g.nu)
    rep.add("tau(f): f1 = {f1}, d1 = {d1}", f1=g.f1, d1=g.d1)
    for lam, m in g.nu.atoms:
        rep.add("  atom {mass} at lambda = {lam}", lam=lam, mass=m)
    ray = classify_extreme(g)
    if ray is not None:
        rep.add("tau(f) = {scale} * g({alpha}, {lam})", alpha=ray.alpha, lam=ray.lam, scale=ray.scale)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_spec(g, "tau"))


def cmd_interval_boundary(args, rep: Report) -> None:
    f = _interval(_load(args))
    alpha = as_param(args.alpha, -1.0, 1.0) if args.alpha is not None else None
    for side in (-1, 1):
        rep.add("f({side}) = {value}", side=side, value=itv.boundary_value_i(f, side))
    if alpha is None:
        return
    try:
        nu = itv.boundary_rep_i(f, alpha)
    except ValueError as exc:
        raise Precondition(str(exc)) from None
    for lam, m in nu.atoms:
        rep.add("  nu mass {mass} at lambda = {lam}", lam=lam, mass=m)


def cmd_interval_identity(args, rep: Report) -> None:
    count = args.grid or 16
    for lam in np.linspace(-1.0, 1.0, count):
        rep.add("lambda = {lam}: stated identity gap {stated_gap}, witness identity gap {witness_gap}",
                lam=lam, stated_gap=itv.identity_check_i(lam),
                witness_gap=itv.identity_gap_i(lam, itv.WITNESS_IDENTITY))


def cmd_interval_transport(args, rep: Report) -> None:
    f = _load(args)
    if not args.interval:
        raise SpecError("--interval a,b is required")
    a, b = _points(args.interval)
    g = itv.affine_transport(f, a, b)
    rep.add("f0 = {f0}, d0 = {d0}", f0=g.f0, d0=g.d0)
    for lam, m in g.mu.atoms:
        rep.add("  mu mass {mass} at lambda = {lam}", lam=lam, mass=m)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_spec(g, "transported"))


def _interval_only(cmd):
    def wrapped(args, rep: Report) -> None:
        _interval(_load(args))
        cmd(args, rep)

    return wrapped


COMMANDS = {
    "eval": cmd_eval,
    "boundary": cmd_boundary,
    "sigma": cmd_sigma,
    "member": cmd_member,
    "face": cmd_face,
    "decompose": cmd_decompose,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "verify": cmd_verify,
    "tau": cmd_tau,
    "interval-eval": _interval_only(cmd_eval),
    "interval-sigma": _interval_only(cmd_sigma),
    "interval-member": _interval_only(cmd_member),
    "interval-boundary": cmd_interval_boundary,
    "interval-identity": cmd_interval_identity,
    "interval-transport": cmd_interval_transport,
}


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opconvex", description="Faces and extreme rays of non-negative operator convex functions.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--spec", help="function spec file")
    p.add_argument("--at", help="evaluation point(s), comma separated")
    p.add_argument("--face", help="face descriptor, e.g. 'F(1, {3})' or 'E({0..2, inf})'")
    p.add_argument("--alpha", help="anchor / tangent point (inf allowed where meaningful)")
    p.add_argument("--grid", type=int, help="number of grid points (sweep, interval-identity)")
    p.add_argument("--cap", help="upper end of the sweep when alpha1 is infinite (default 20)")
    p.add_argument("--interval", help="a,b for interval-transport")
    p.add_argument("--samples", help="CSV of x,y samples for fit")
    p.add_argument("--n", type=int, help="matrix order (verify) or sample count (fit)")
    p.add_argument("--trials", type=int, help="random trials for verify")
    p.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", help="output path (CSV for sweep, spec file for fit/tau/interval-transport)")
    p.add_argument("--format", choices=("text", "csv", "machine"), default="text")
    return p


def run(argv) -> tuple[Report, str]:
    """Run a command; returns the report and the rendered output."""
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = _default_seed()
    rep = Report(args.command)
    try:
        COMMANDS[args.command](args, rep)
    except (SpecError, FileNotFoundError, IsADirectoryError) as exc:
        rep.exit_code = EXIT_USAGE
        rep.note(f"error: {exc}")
        return rep, ""
    except (Precondition, RangeError, NotInFaceError, NotInConeError, RecoveryError, ValueError) as exc:
        rep.exit_code = EXIT_PRECONDITION
        rep.note(f"precondition: {exc}")
        return rep, ""
    style = args.format
    if args.command == "sweep" and args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rep.csv())
        if style == "csv":
            style = "text"
    return rep, rep.render(style)


def main(argv=None) -> int:
    try:
        rep, out = run(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            sys.stderr.write(exc.code + "\n")
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if rep.exit_code in (EXIT_USAGE, EXIT_PRECONDITION):
        sys.stderr.write("\n".join(rep.summary) + "\n")
        return rep.exit_code
    sys.stdout.write(out)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
