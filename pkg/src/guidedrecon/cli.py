"""Command line interface: ``guidedrecon {magnify,reconstruct,experiment1..4,verify}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, NumericalBreakdownError, PgmParseError
from .experiments import load_config, parse_config, run_experiment, write_csv
from .imaging import (
    BlockSamplingScheme,
    DctGuidingScheme,
    NoiseModel,
    add_noise,
    downsample,
    make_guiding_basis,
    make_guiding_projector,
    make_sampling_projector,
    psnr,
    upsample,
)
from .krylov import CgParams, CgStats
from .pgm import read_pgm, write_pgm
from .reconstruction import (
    ReconstructionProblem,
    ReconstructionSet,
    alpha_combine,
    alpha_from_noise,
    consistent_reconstruction,
    minimax_regret,
    regularized_reconstruction,
    rho_to_alpha,
)
from .signal import verify_projector

log = logging.getLogger("guidedrecon")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

VERIFY_TOL = 1e-8


@dataclass
class MagnifyResult:
    output: np.ndarray
    rset: ReconstructionSet
    stats: CgStats
    alpha: float
    alpha_linear: float
    alpha_quadratic: float
    noise_norm: float


def noise_energy(variance: float, low_side: int, r: int) -> float:
    """Expected ``||e||`` in the full-resolution space for i.i.d. low-resolution noise."""
    return r * math.sqrt(variance * low_side * low_side)


def magnify(low_res, r: int, k: int, alpha=None, cg: CgParams = CgParams(), noise_var: float = 0.0, noise_rule: str = "quadratic"):
    """Magnify a square low-resolution image by ``r`` with a ``k x k`` DCT guide.

    When ``alpha`` is None it is chosen from ``noise_var`` by ``noise_rule``
    (1.0 for noise-free input).
    """
    low = np.asarray(low_res, dtype=np.float64)
    if low.ndim != 2 or low.shape[0] != low.shape[1]:
        raise ConfigurationError(f"input must be a square image, got shape {low.shape}")
    if r < 1:
        raise ConfigurationError("factor must be >= 1")
    w = low.shape[0] * r
    sampling = BlockSamplingScheme(w, r)
    guiding = DctGuidingScheme(w, k)
    if alpha is not None and not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    f_du = upsample(low, sampling).reshape(-1)
    problem = ReconstructionProblem(
        make_sampling_projector(sampling), make_guiding_projector(guiding), f_du, make_guiding_basis(guiding)
    )
    f_c, stats = consistent_reconstruction(problem, cg)
    rset = ReconstructionSet(f_c, problem.T(f_c))
    e = noise_energy(noise_var, low.shape[0], r)
    a_lin = alpha_from_noise(e, rset, "linear")
    a_quad = alpha_from_noise(e, rset, "quadratic")
    if alpha is None:
        alpha = a_lin if noise_rule == "linear" else a_quad
    out = alpha_combine(rset, alpha).reshape(w, w)
    return MagnifyResult(out, rset, stats, alpha, a_lin, a_quad, e)


def _cg_from(args) -> CgParams:
    return CgParams(args.tol, args.max_iter)


def _alpha_from(args):
    if getattr(args, "rho", None) is not None:
        return rho_to_alpha(args.rho)
    return args.alpha


def cmd_magnify(args) -> int:
    low = read_pgm(args.input).image()
    res = magnify(low, args.factor, args.band, _alpha_from(args), _cg_from(args), args.noise_var, args.noise_rule)
    write_pgm(res.output, args.output)
    s = res.stats
    print(f"size: {low.shape[0]} -> {res.output.shape[0]}")
    print(f"gap ||f_c - f_g||: {res.rset.gap:.6g}")
    print(f"cg: iterations={s.iterations} relative_residual={s.final_relative_residual:.3g} converged={s.converged}")
    print(f"noise energy estimate: {res.noise_norm:.6g}")
    print(f"alpha suggestions: linear={res.alpha_linear:.4f} quadratic={res.alpha_quadratic:.4f}")
    print(f"alpha used: {res.alpha:.4f}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    f = read_pgm(args.input).image()
    w = f.shape[0]
    if f.shape[0] != f.shape[1]:
        raise ConfigurationError(f"image must be square, got {f.shape[0]}x{f.shape[1]}")
    sampling = BlockSamplingScheme(w, args.factor)
    guiding = DctGuidingScheme(w, args.band)
    f_d = add_noise(downsample(f, sampling), NoiseModel(args.noise_var, args.seed))
    f_du = upsample(f_d, sampling).reshape(-1)
    problem = ReconstructionProblem(
        make_sampling_projector(sampling), make_guiding_projector(guiding), f_du, make_guiding_basis(guiding)
    )
    cg = _cg_from(args)
    f_c, stats = consistent_reconstruction(problem, cg)
    rset = ReconstructionSet(f_c, problem.T(f_c))
    e = noise_energy(args.noise_var, sampling.low_side, args.factor)
    alpha = _alpha_from(args)
    if alpha is None:
        alpha = alpha_from_noise(e, rset, args.noise_rule)
    results = {
        "input": f_du,
        "consistent": rset.f_c,
        "generalized": rset.f_g,
        "minimax": minimax_regret(problem.T, f_du),
        "alpha": alpha_combine(rset, alpha),
    }
    if args.method == "regularized":
        if not 0.0 < alpha < 1.0:
            raise DomainError("regularized reconstruction needs alpha strictly inside (0, 1)")
        results["regularized"], _ = regularized_reconstruction(problem, (1 - alpha) / alpha, cg)
    ref = f.reshape(-1)
    print(f"k_scale: {sampling.low_side / args.band:.4g}  alpha: {alpha:.4f}  cg iterations: {stats.iterations}")
    for name, est in results.items():
        print(f"psnr {name}: {psnr(ref, est):.3f} dB")
    write_pgm(results[args.method].reshape(w, w), args.output)
    return EXIT_OK


def cmd_experiment(args) -> int:
    overrides = {
        "seed": args.seed,
        "noise_variance": args.noise_var,
        "max_iter": args.max_iter,
        "tol": args.tol,
        "r": args.factor,
        "emit_images": args.emit_images,
        "image_path": args.image,
        "timings": True if args.timings else None,
    }
    cfg = load_config(args.config, **overrides) if args.config else parse_config("", **overrides)
    records = run_experiment(args.number, cfg)
    write_csv(records, args.output)
    log.info("wrote %d records to %s", len(records), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    sampling = BlockSamplingScheme(args.size, args.factor)
    guiding = DctGuidingScheme(args.size, args.band)
    status = EXIT_OK
    for op in (make_sampling_projector(sampling), make_guiding_projector(guiding)):
        for P in (op, op.complement()):
            rep = verify_projector(P, args.probes, args.seed)
            ok = rep.passes(VERIFY_TOL)
            print(
                f"{P.label}: idempotency={rep.max_idempotency_residual:.3e} "
                f"self_adjoint={rep.max_self_adjoint_residual:.3e} probes={rep.probes} {'ok' if ok else 'FAIL'}"
            )
            if not ok:
                status = EXIT_NUMERICAL
    return status


def _add_solver_flags(p, max_iter=200, tol=1e-8):
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--tol", type=float, default=tol)


def _add_alpha_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, help="point on the reconstruction set, 1 = consistent")
    g.add_argument("--rho", type=float, help="regularization weight, alpha = 1/(1+rho)")
    p.add_argument("--noise-var", type=float, default=0.0, help="low-resolution noise variance on the [0,1] scale")
    p.add_argument("--noise-rule", choices=("linear", "quadratic"), default="quadratic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guidedrecon", description="Guided reconstruction and magnification of square grayscale images.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("magnify", help="magnify a low-resolution PGM")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--factor", "-r", type=int, required=True)
    p.add_argument("--band", "-k", type=int, required=True)
    _add_alpha_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_magnify)

    p = sub.add_parser("reconstruct", help="sample a high-resolution PGM, reconstruct it and report PSNR")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--factor", "-r", type=int, required=True)
    p.add_argument("--band", "-k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--method", choices=("consistent", "generalized", "minimax", "alpha", "regularized"), default="alpha"
    )
    _add_alpha_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    for n in (1, 2, 3, 4):
        p = sub.add_parser(f"experiment{n}", help=f"run experiment {n} and write CSV")
        p.add_argument("--config", "-c")
        p.add_argument("--output", "-o", required=True)
        p.add_argument("--image")
        p.add_argument("--factor", "-r", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--noise-var", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--emit-images", metavar="DIR")
        p.add_argument("--timings", action="store_true", help="measure wall times (output is then not byte-stable)")
        p.set_defaults(func=cmd_experiment, number=n)

    p = sub.add_parser("verify", help="check that S and T are orthogonal projectors")
    p.add_argument("--size", "-w", type=int, required=True)
    p.add_argument("--factor", "-r", type=int, required=True)
    p.add_argument("--band", "-k", type=int, required=True)
    p.add_argument("--probes", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalBreakdownError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigurationError, DomainError, DimensionError, PgmParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
