"""Command-line entry point ``bolax``.

Exit codes: 0 success, 1 usage or input error, 2 certificate failure,
3 precondition gate failure, 4 numerical failure (diagnostic JSON on stderr).
"""

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import certify, finitegap, genfun
from . import io as bio
from ._backend import get_backend, thread_budget
from .errors import BolaxError, NumericalFailure
from .fourier import Potential, SobolevParams
from .laxop import LaxMatrix
from .spectrum import (
    auto_K,
    contour_spectrum,
    counting_certificate,
    dense_spectrum,
    gaps_and_moment_map,
    identity_residuals,
)

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_GATE, EXIT_NUMERIC = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    s: float = 0.0
    K: Optional[int] = None
    M: int = 64
    n_max: int = 8
    fmt: str = "json"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        SobolevParams(self.s)
        if self.M < 8 or self.M % 8:
            raise UsageError("--M must be a positive multiple of 8")
        if self.n_max < 0:
            raise UsageError("--n-max must be >= 0")
        if self.K is not None and self.K < self.n_max + 2:
            raise UsageError(f"--K must be at least n_max + 2 = {self.n_max + 2}")

    def truncation(self, u):
        return self.K if self.K is not None else auto_K(self.n_max, u.band)


def _k_arg(text):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("K must be an integer or 'auto'") from None


def _roots_arg(text):
    try:
        return [complex(t.strip().replace(" ", "")) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse roots {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--s", type=float, default=0.0, help="regularity index in [0, 1/2)")
    common.add_argument("--K", type=_k_arg, default=None, help="truncation size or 'auto'")
    common.add_argument("--M", type=int, default=64, help="contour nodes (multiple of 8)")
    common.add_argument("--n-max", type=int, default=8)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="thread budget (env BOLAX_THREADS overrides the default)")

    p = _Parser(prog="bolax", description="Spectral toolkit for the Benjamin-Ono Lax operator")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(name, help_, potential=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if potential:
            sp.add_argument("--potential", required=True, help="potential JSON file")
        return sp

    sp = add("spectrum", "eigenvalues λ_0..λ_n_max")
    sp.add_argument("--method", choices=("dense", "contour"), default="dense")
    add("gaps", "gaps, weighted moment-map norm and identity residuals")
    sp = add("genfun", "residues F_n by every method, or H on a grid")
    sp.add_argument("--h-grid", default=None,
                    help="re0,re1,im0,im1,nre,nim: tabulate H on this grid instead")
    add("kappa-mu", "κ_n and μ_n by both methods")
    sp = add("fingap", "finite-gap potential from roots", potential=False)
    sp.add_argument("--roots", type=_roots_arg, required=True, help="comma list, e.g. 0.3,0.2")
    sp.add_argument("--band", type=int, required=True)
    add("asymptotics", "g_n -> g_inf convergence table (real potentials)")
    sp = add("certify", "run bound certificates")
    sp.add_argument("--which", choices=("all", "halfplane", "region", "kappa-mu", "counting"),
                    default="all")
    sp.add_argument("--reference", default=None, help="real reference potential for counting")
    sp.add_argument("--rho", type=float, default=0.25)
    add("selftest", "run the built-in invariant suite", potential=False)
    return p


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(cfg, u, K, extra=None):
    m = {"K": K, "M": cfg.M, "s": cfg.s, "seed": cfg.seed, "potential_hash": u.digest(),
         "backend": get_backend()}
    m.update(extra or {})
    return m


def _dense(u, cfg):
    K = cfg.truncation(u)
    return dense_spectrum(LaxMatrix(u, K), n_max=cfg.n_max)


# -- subcommands -------------------------------------------------------------

def cmd_spectrum(args, cfg):
    u = bio.load_potential(args.potential)
    sp = _dense(u, cfg)
    if args.method == "contour":
        sp = contour_spectrum(u, sp.discs, K=sp.K, M=cfg.M, threads=cfg.threads)
    meta = bio.spectrum_meta(sp, {"s": cfg.s, "M": cfg.M if sp.nodes is None else sp.nodes})
    return bio.emit(bio.SPECTRUM_HEADER, bio.spectrum_rows(sp), meta, cfg.fmt), EXIT_OK


def cmd_gaps(args, cfg):
    u = bio.load_potential(args.potential)
    sp = _dense(u, cfg)
    gs = gaps_and_moment_map(sp, cfg.s)
    ir = identity_residuals(sp, gs, u, cfg.s)
    header = ["n", "re_gamma", "im_gamma", "partial_norm", "trace_residual"]
    rows = [[n, gs[n].real, gs[n].imag, gs.partial_sums[n - 1], ir.trace[n]]
            for n in range(1, len(gs) + 1)]
    meta = _meta(cfg, u, sp.K, {
        "weighted_norm": gs.weighted_norm,
        "tail_bound": ir.tail_bound,
        "tail_model": ir.tail_model,
        "action_residual": ir.action,
    })
    return bio.emit(header, rows, meta, cfg.fmt), EXIT_OK


def _grid(spec):
    try:
        re0, re1, im0, im1, nre, nim = spec.split(",")
        return (np.linspace(float(re0), float(re1), int(nre)),
                np.linspace(float(im0), float(im1), int(nim)))
    except ValueError:
        raise UsageError("--h-grid expects re0,re1,im0,im1,nre,nim") from None


def cmd_genfun(args, cfg):
    u = bio.load_potential(args.potential)
    K = cfg.truncation(u)
    ctx = genfun.SpectralData(u, K, n_max=min(cfg.n_max + 8, K - 1), M=cfg.M)
    if args.h_grid:
        res, ims = _grid(args.h_grid)
        rows = []
        for a in res:
            for b in ims:
                lam = complex(a, b)
                try:
                    h = ctx.H(lam)
                except NumericalFailure:
                    h = complex("nan+nanj")
                rows.append([a, b, h.real, h.imag])
        return bio.emit(bio.H_GRID_HEADER, rows, _meta(cfg, u, K), cfg.fmt), EXIT_OK
    methods = ["contour", "projector"] + (["eigenvector"] if u.is_real() else [])
    vals = {m: [genfun.residue_F(u, n, m, ctx=ctx) for n in range(cfg.n_max + 1)]
            for m in methods}
    header = ["n"] + [f"{p}_F_{m}" for m in methods for p in ("re", "im")] + ["discrepancy"]
    rows = []
    for n in range(cfg.n_max + 1):
        row = [n]
        for m in methods:
            row += [vals[m][n].real, vals[m][n].imag]
        row.append(max(abs(vals[m][n] - vals[methods[0]][n]) for m in methods))
        rows.append(row)
    return bio.emit(header, rows, _meta(cfg, u, K), cfg.fmt), EXIT_OK


def cmd_kappa_mu(args, cfg):
    u = bio.load_potential(args.potential)
    K = cfg.truncation(u)
    ctx = genfun.SpectralData(u, K, n_max=min(cfg.n_max + 8, K - 1), M=cfg.M)
    sf = genfun.spectral_functionals(u, cfg.n_max, ctx=ctx)
    flagged = {k: [int(n) for n in np.flatnonzero(v)] for k, v in sf.flags.items()}
    return (bio.emit(bio.FUNCTIONALS_HEADER, bio.functional_rows(sf),
                     _meta(cfg, u, K, {"disagreements": flagged}), cfg.fmt), EXIT_OK)


def cmd_fingap(args, cfg):
    u = finitegap.potential_from_roots(args.roots, args.band)
    return bio.dumps_potential(u), EXIT_OK


def cmd_asymptotics(args, cfg):
    u = bio.load_potential(args.potential)
    K = cfg.truncation(u)
    tb = finitegap.gn_convergence_table(u, cfg.n_max, K=K, s=cfg.s)
    meta = _meta(cfg, u, K, {"fit_exponent": tb.fit_exponent, "tau": tb.tau,
                             "all_steps_ok": bool(tb.step_ok.all())})
    return bio.emit(bio.CONVERGENCE_HEADER, bio.convergence_rows(tb), meta, cfg.fmt), EXIT_OK


def cmd_certify(args, cfg):
    u = bio.load_potential(args.potential)
    K = cfg.K
    Cs = certify.estimate_Cs(cfg.s, 200, cfg.seed)
    reps = []
    if args.which in ("all", "halfplane"):
        reps.append(certify.halfplane_certificate(u, cfg.s, Cs=Cs, K=K))
    if args.which in ("all", "kappa-mu"):
        reps.append(certify.kappa_mu_gap_certificates(u, n_max=cfg.n_max, K=K))
    if args.which in ("all", "region"):
        reps.append(certify.region_bound_certificates(
            u, cfg.s, args.rho, range(0, cfg.n_max + 1), K=K, Cs=Cs))
    if args.which in ("all", "counting"):
        if args.reference:
            w = bio.load_potential(args.reference)
            reps.append(counting_certificate(u, w, args.rho, cfg.n_max, K=K, M=cfg.M,
                                             threads=cfg.threads))
        elif args.which == "counting":
            raise UsageError("--which counting needs --reference")
    reps.sort(key=lambda r: r.name)
    doc = {"meta": _meta(cfg, u, K, {"C_s_hat": Cs}), "reports": [r.to_dict() for r in reps]}
    code = EXIT_OK
    if any(r.gate_failed for r in reps):
        code = EXIT_GATE
    if any(not r.passed and not r.gate_failed for r in reps):
        code = EXIT_CERT
    return json.dumps(doc, indent=2, default=str) + "\n", code


def selftest_checks():
    """Quick invariant suite: ``(name, passed, detail)`` triples."""
    out = []
    zero = Potential.zero()
    sp = dense_spectrum(LaxMatrix(zero, 48), n_max=16)
    err = float(np.max(np.abs(sp.eigenvalues - np.arange(17))))
    out.append(("zero spectrum", err < 1e-12, err))
    q = 0.3
    u = finitegap.potential_from_roots([q], 24)
    ctx = genfun.SpectralData(u, 64, n_max=24)
    lam0 = ctx.lam[0]
    out.append(("one-gap λ_0", abs(lam0 + q * q / (1 - q * q)) < 1e-8, abs(lam0 + q * q / (1 - q * q))))
    k1 = genfun.kappa(u, 1, "eta", ctx=ctx)
    out.append(("one-gap κ_1", abs(k1 - (1 - q * q)) < 1e-8, abs(k1 - (1 - q * q))))
    f1 = genfun.residue_F(u, 1, "contour", ctx=ctx)
    out.append(("one-gap F_1", abs(f1 + q * q) < 1e-8, abs(f1 + q * q)))
    z = abs(ctx.H(lam0 + 1))
    out.append(("H zero at λ_0 + 1", z < 1e-8, z))
    gs = gaps_and_moment_map(ctx.spectrum)
    ir = identity_residuals(ctx.spectrum, gs, u)
    out.append(("trace formula", float(ir.trace[:11].max()) < 1e-7, float(ir.trace[:11].max())))
    out.append(("action identity", ir.action < 1e-6, ir.action))
    zp = [genfun.zeros_minus_poles(u, n, ctx=ctx) for n in range(3)]
    out.append(("argument principle", zp == [-1, 0, 0], zp))
    return out


def cmd_selftest(args, cfg):
    t0 = time.perf_counter()
    checks = selftest_checks()
    doc = {
        "checks": [{"name": n, "passed": bool(p), "detail": str(d)} for n, p, d in checks],
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "backend": get_backend(),
    }
    code = EXIT_OK if all(p for _, p, _ in checks) else EXIT_CERT
    return json.dumps(doc, indent=2) + "\n", code


COMMANDS = {
    "spectrum": cmd_spectrum,
    "gaps": cmd_gaps,
    "genfun": cmd_genfun,
    "kappa-mu": cmd_kappa_mu,
    "fingap": cmd_fingap,
    "asymptotics": cmd_asymptotics,
    "certify": cmd_certify,
    "selftest": cmd_selftest,
}


def run(argv=None):
    """Execute one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig(s=args.s, K=args.K, M=args.M, n_max=args.n_max, fmt=args.format,
                        seed=args.seed, threads=thread_budget(args.threads))
        text, code = COMMANDS[args.cmd](args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"bolax: error: {exc}\n")
        return EXIT_USAGE
    except NumericalFailure as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(diag) + "\n")
        return EXIT_NUMERIC
    except (BolaxError, ValueError, OSError) as exc:
        sys.stderr.write(f"bolax: error: {exc}\n")
        return EXIT_USAGE
    _write(text, getattr(args, "out", None))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
