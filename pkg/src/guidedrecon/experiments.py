"""Magnification experiments: PSNR sweeps over guiding bandwidth, alpha and rho.

Each ``run_experimentN`` returns a list of :class:`ExperimentRecord`; the
records serialize to a fixed-column CSV via :func:`write_csv`. Runs are
deterministic given the config. Wall times are only measured when
``timings`` is enabled, otherwise they are written as 0 so repeated runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .imaging import (
    BlockSamplingScheme,
    DctGuidingScheme,
    NoiseModel,
    add_noise,
    downsample,
    k_scale,
    make_guiding_basis,
    make_guiding_projector,
    make_sampling_projector,
    psnr,
    synthetic_image,
    upsample,
)
from .krylov import CgParams, count_solves
from .pgm import read_pgm, write_pgm
from .reconstruction import (
    ReconstructionProblem,
    ReconstructionSet,
    alpha_combine,
    alpha_from_noise,
    consistent_reconstruction,
    generalized_g1,
    generalized_g2,
    minimax_regret,
    regularized_reconstruction,
    rho_to_alpha,
)

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "CSV_HEADER",
    "load_config",
    "parse_config",
    "load_image",
    "run_experiment1",
    "run_experiment2",
    "run_experiment3",
    "run_experiment4",
    "run_experiment",
    "write_csv",
    "format_csv",
]

CSV_HEADER = ("method", "k", "k_scale", "alpha_or_rho", "psnr_db", "cg_iterations", "wall_time_ms", "seed", "extra")

DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_RHOS = tuple((1 - a) / a for a in DEFAULT_ALPHAS[1:10])

# equalities checked inside every run
G1_G2_TOL = 1e-8
REGULARIZED_TOL = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    image_path: Optional[str] = None
    image_size: int = 128
    image_seed: int = 0
    r: int = 2
    k_values: tuple = (128, 85, 64, 43, 32, 26, 21, 16)
    alpha_values: tuple = DEFAULT_ALPHAS
    rho_values: tuple = DEFAULT_RHOS
    alpha: float = 0.7
    sweep_k: Optional[int] = None
    noise_variance: float = 0.0
    seed: int = 0
    max_iter: int = 500
    max_iter_values: tuple = (1, 2)
    tol: float = 1e-10
    methods: tuple = ()
    timings: bool = False
    emit_images: Optional[str] = None

    def __post_init__(self):
        if self.r < 1:
            raise ConfigurationError("r must be positive")
        if not self.k_values:
            raise ConfigurationError("k_values must not be empty")
        if any(k < 1 for k in self.k_values):
            raise ConfigurationError("k values must be >= 1")
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_values + (self.alpha,)):
            raise ConfigurationError("alpha values must lie in [0, 1]")
        if any(not rho > 0 for rho in self.rho_values):
            raise ConfigurationError("rho values must be positive")
        if self.noise_variance < 0:
            raise ConfigurationError("noise_variance must be nonnegative")
        if self.max_iter < 1 or any(m < 1 for m in self.max_iter_values):
            raise ConfigurationError("iteration counts must be >= 1")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")

    @property
    def cg(self) -> CgParams:
        return CgParams(self.tol, self.max_iter)

    def wants(self, method: str) -> bool:
        return not self.methods or method in self.methods


@dataclass
class ExperimentRecord:
    method: str
    k: int
    k_scale: float
    alpha_or_rho: Optional[float]
    psnr_db: float
    cg_iterations: int
    wall_time_ms: float
    seed: int
    extra: dict = field(default_factory=dict)


_LIST_KEYS = {"k_values": int, "alpha_values": float, "rho_values": float, "max_iter_values": int, "methods": str}
_SCALAR_KEYS = {
    "image_path": str,
    "image_size": int,
    "image_seed": int,
    "r": int,
    "alpha": float,
    "sweep_k": int,
    "noise_variance": float,
    "seed": int,
    "max_iter": int,
    "tol": float,
    "timings": "bool",
    "emit_images": str,
}
_ALIASES = {"image": "image_path", "factor": "r", "noise_var": "noise_variance"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment; lists are comma separated)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(key, key)
        try:
            if key in _LIST_KEYS:
                conv = _LIST_KEYS[key]
                values[key] = tuple(conv(v.strip()) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                conv = _SCALAR_KEYS[key]
                if value == "" or value.lower() == "none":
                    values[key] = None
                else:
                    values[key] = _parse_bool(value) if conv == "bool" else conv(value)
            else:
                raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"line {lineno}: bad value for {key}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)


def load_image(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.image_path in (None, "", "synthetic"):
        return synthetic_image(cfg.image_size, cfg.image_seed)
    return read_pgm(cfg.image_path).image()


class _Bench:
    """Shared state of one experiment run: original, measurement and operators."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.f = load_image(cfg)
        h, w = self.f.shape
        if h != w:
            raise ConfigurationError(f"image must be square, got {h}x{w}")
        self.w = w
        self.sampling = BlockSamplingScheme(w, cfg.r)
        for k in cfg.k_values + ((cfg.sweep_k,) if cfg.sweep_k else ()):
            DctGuidingScheme(w, k)
        self.S = make_sampling_projector(self.sampling)
        f_d = downsample(self.f, self.sampling)
        clean = upsample(f_d, self.sampling).reshape(-1)
        f_d_noisy = add_noise(f_d, NoiseModel(cfg.noise_variance, cfg.seed))
        self.f_du = upsample(f_d_noisy, self.sampling).reshape(-1)
        # noise energy as seen in the full-resolution space, ||f_du - S f||
        self.noise_norm = float(np.linalg.norm(self.f_du - clean))
        self.reference = self.f.reshape(-1)
        self.images = {}

    def problem(self, k: int) -> ReconstructionProblem:
        scheme = DctGuidingScheme(self.w, k)
        return ReconstructionProblem(self.S, make_guiding_projector(scheme), self.f_du, make_guiding_basis(scheme))

    def k_scale(self, k: int) -> float:
        return k_scale(self.w, self.cfg.r, k)

    def psnr(self, estimate) -> float:
        return psnr(self.reference, estimate)

    def record(self, method, k, param, estimate, iterations=0, ms=0.0, **extra):
        if self.cfg.emit_images:
            self.images[_image_name(method, k, param, extra.get("max_iter"))] = estimate
        return ExperimentRecord(
            method, k, self.k_scale(k), param, self.psnr(estimate), iterations, ms, self.cfg.seed, extra
        )

    def timed(self, fn):
        """Run ``fn`` once under a solve counter; with timings on, repeat twice more for a median."""
        with count_solves() as counter:
            start = time.perf_counter()
            result = fn()
            elapsed = [time.perf_counter() - start]
        if not self.cfg.timings:
            return result, 0.0, counter.count
        for _ in range(2):
            start = time.perf_counter()
            fn()
            elapsed.append(time.perf_counter() - start)
        return result, 1000.0 * statistics.median(elapsed), counter.count

    def default_sweep_k(self) -> int:
        if self.cfg.sweep_k:
            return self.cfg.sweep_k
        return min(self.cfg.k_values, key=lambda k: (abs(self.k_scale(k) - 4.0), k))

    def emit(self):
        if not self.cfg.emit_images:
            return
        os.makedirs(self.cfg.emit_images, exist_ok=True)
        write_pgm(self.f, os.path.join(self.cfg.emit_images, "original.pgm"))
        write_pgm(self.f_du.reshape(self.w, self.w), os.path.join(self.cfg.emit_images, "input_f_du.pgm"))
        for name, img in self.images.items():
            write_pgm(np.asarray(img).reshape(self.w, self.w), os.path.join(self.cfg.emit_images, name))


def _image_name(method, k, param, max_iter=None) -> str:
    name = f"{method}_k{k}"
    if param is not None:
        name += f"_{param:.4g}"
    if max_iter is not None:
        name += f"_it{max_iter}"
    return name + ".pgm"


def _sorted(records):
    def key(rec):
        param = -math.inf if rec.alpha_or_rho is None else rec.alpha_or_rho
        return (rec.method, rec.k, param)

    return sorted(records, key=key)


def _endpoint_sweep(bench: _Bench, with_noise: bool):
    cfg = bench.cfg
    records = []
    sets = {}
    for k in cfg.k_values:
        p = bench.problem(k)
        (f_c, stats), ms, _ = bench.timed(lambda: consistent_reconstruction(p, cfg.cg))
        rset = ReconstructionSet(f_c, p.T(f_c))
        sets[k] = (p, rset, stats)
        extra = {"gap": rset.gap, "converged": int(stats.converged)}
        if with_noise:
            extra["noise_norm"] = bench.noise_norm
            extra["alpha_opt_quadratic"] = alpha_from_noise(bench.noise_norm, rset, "quadratic")
            extra["alpha_opt_linear"] = alpha_from_noise(bench.noise_norm, rset, "linear")
        it = stats.iterations
        if cfg.wants("consistent"):
            records.append(bench.record("consistent", k, 1.0, rset.f_c, it, ms, **extra))
        if cfg.wants("generalized"):
            records.append(bench.record("generalized", k, 0.0, rset.f_g, it, ms, **extra))
        if cfg.wants("minimax"):
            records.append(bench.record("minimax", k, None, minimax_regret(p.T, p.f_du), 0, 0.0, **extra))
        if cfg.wants("alpha"):
            records.append(bench.record("alpha", k, cfg.alpha, alpha_combine(rset, cfg.alpha), it, ms, **extra))
        if with_noise and cfg.wants("alpha_opt"):
            a_opt = extra["alpha_opt_quadratic"]
            records.append(bench.record("alpha_opt", k, a_opt, alpha_combine(rset, a_opt), it, ms, **extra))
    return records, sets


def _alpha_sweep(bench: _Bench, sets, alphas, with_noise: bool):
    cfg = bench.cfg
    k = bench.default_sweep_k()
    if k in sets:
        p, rset, stats = sets[k]
    else:
        p = bench.problem(k)
        f_c, stats = consistent_reconstruction(p, cfg.cg)
        rset = ReconstructionSet(f_c, p.T(f_c))
    extra = {"gap": rset.gap}
    if with_noise:
        extra["noise_norm"] = bench.noise_norm
        extra["alpha_opt_quadratic"] = alpha_from_noise(bench.noise_norm, rset, "quadratic")
    return [
        bench.record("alpha_sweep", k, a, alpha_combine(rset, a), stats.iterations, 0.0, **extra)
        for a in alphas
    ]


def run_experiment1(cfg: ExperimentConfig):
    """Noise-free PSNR of consistent, generalized, minimax and fixed-alpha reconstructions vs k_scale."""
    if cfg.noise_variance != 0:
        raise ConfigurationError("experiment 1 is noise-free; set noise_variance = 0")
    bench = _Bench(cfg)
    records, sets = _endpoint_sweep(bench, with_noise=False)
    if cfg.wants("alpha_sweep"):
        records += _alpha_sweep(bench, sets, cfg.alpha_values, with_noise=False)
    bench.emit()
    return _sorted(records)


def run_experiment2(cfg: ExperimentConfig):
    """Noisy samples: alpha sweep at fixed k_scale plus the k_scale sweep at fixed alpha."""
    if not cfg.noise_variance > 0:
        raise ConfigurationError("experiment 2 needs noise_variance > 0")
    bench = _Bench(cfg)
    records, sets = _endpoint_sweep(bench, with_noise=True)
    if cfg.wants("alpha_sweep"):
        alphas = tuple(sorted(set(cfg.alpha_values) | {0.0, 1.0}))
        records += _alpha_sweep(bench, sets, alphas, with_noise=True)
    bench.emit()
    return _sorted(records)


def run_experiment3(cfg: ExperimentConfig):
    """Regularized solves per rho against one consistent solve plus convex combinations.

    Both paths record ``path_solves`` (CG invocations counted while the path
    ran) and ``diff``/``rel_diff`` = ``||f_rho - f_alpha||``.
    """
    if not cfg.rho_values:
        raise ConfigurationError("experiment 3 needs at least one rho value")
    bench = _Bench(cfg)
    records = []
    for k in cfg.k_values:
        p = bench.problem(k)

        def alpha_path():
            rset, stats = _consistent_set(p, cfg.cg)
            return rset, stats, [alpha_combine(rset, rho_to_alpha(rho)) for rho in cfg.rho_values]

        (rset, stats_c, combos), ms_alpha, alpha_solves = bench.timed(alpha_path)
        rho_solves = 0
        for rho, f_alpha in zip(cfg.rho_values, combos):
            (f_rho, stats_r), ms_rho, solves = bench.timed(lambda: regularized_reconstruction(p, rho, cfg.cg))
            rho_solves += solves
            diff = float(np.linalg.norm(f_rho - f_alpha))
            rel = diff / max(float(np.linalg.norm(f_alpha)), np.finfo(float).tiny)
            if stats_c.converged and stats_r.converged and rel > REGULARIZED_TOL:
                log.warning("k=%d rho=%g: regularized and combined reconstructions differ by %.3g", k, rho, rel)
            common = {"diff": diff, "rel_diff": rel, "alpha": rho_to_alpha(rho)}
            records.append(
                bench.record("rho_path", k, rho, f_rho, stats_r.iterations, ms_rho, converged=int(stats_r.converged), **common)
            )
            records.append(
                bench.record("alpha_path", k, rho, f_alpha, stats_c.iterations, ms_alpha, converged=int(stats_c.converged), **common)
            )
        for rec in records:
            if rec.k == k:
                rec.extra["path_solves"] = alpha_solves if rec.method == "alpha_path" else rho_solves
    bench.emit()
    return _sorted(records)


def _consistent_set(p, cg):
    f_c, stats = consistent_reconstruction(p, cg)
    return ReconstructionSet(f_c, p.T(f_c)), stats


def run_experiment4(cfg: ExperimentConfig):
    """All generalized implementations and their alpha combinations under truncated CG."""
    bench = _Bench(cfg)
    a = cfg.alpha
    records = []
    for k in cfg.k_values:
        p = bench.problem(k)
        f_m = minimax_regret(p.T, p.f_du)
        for max_iter in cfg.max_iter_values:
            cg = CgParams(cfg.tol, max_iter)
            (f_c, st_c), ms_c, _ = bench.timed(lambda: consistent_reconstruction(p, cg))
            (g1, st_1), ms_1, _ = bench.timed(lambda: generalized_g1(p, cg))
            (g2, st_2), ms_2, _ = bench.timed(lambda: generalized_g2(p, cg))
            g3 = p.T(f_c)
            alpha1 = alpha_combine(ReconstructionSet(f_c, g1), a)
            alpha2 = alpha_combine(ReconstructionSet(f_c, g2), a)
            alpha3 = alpha_combine(ReconstructionSet(f_c, g3), a)
            rho = (1 - a) / a if a > 0 else None
            d12 = float(np.linalg.norm(g1 - g2))
            if d12 > G1_G2_TOL * max(1.0, float(np.linalg.norm(g1))):
                log.warning("k=%d MaxIter=%d: g1 and g2 differ by %.3g", k, max_iter, d12)
            extra = {
                "max_iter": max_iter,
                "d_g1_g2": d12,
                "d_g3_g1": float(np.linalg.norm(g3 - g1)),
                "d_alpha1_alpha2": float(np.linalg.norm(alpha1 - alpha2)),
                "d_alpha3_alpha1": float(np.linalg.norm(alpha3 - alpha1)),
            }
            rows = [
                ("consistent", 1.0, f_c, st_c.iterations, ms_c),
                ("g1", 0.0, g1, st_1.iterations, ms_1),
                ("g2", 0.0, g2, st_2.iterations, ms_2),
                ("g3", 0.0, g3, st_c.iterations, ms_c),
                ("alpha1", a, alpha1, st_c.iterations + st_1.iterations, ms_c + ms_1),
                ("alpha3", a, alpha3, st_c.iterations, ms_c),
            ]
            if rho is not None:
                (f_r, st_r), ms_r, _ = bench.timed(lambda: regularized_reconstruction(p, rho, cg))
                rows.append(("regularized", rho, f_r, st_r.iterations, ms_r))
            for method, param, est, its, ms in rows:
                if cfg.wants(method):
                    records.append(bench.record(method, k, param, est, its, ms, **extra))
        if cfg.wants("minimax"):
            records.append(bench.record("minimax", k, None, f_m, 0, 0.0))
    bench.emit()
    return _sorted(records)


_RUNNERS = {1: run_experiment1, 2: run_experiment2, 3: run_experiment3, 4: run_experiment4}


def run_experiment(number: int, cfg: ExperimentConfig):
    try:
        runner = _RUNNERS[number]
    except KeyError:
        raise ConfigurationError(f"no experiment {number}") from None
    return runner(cfg)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def format_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        extra = ";".join(f"{key}={_fmt(rec.extra[key])}" for key in sorted(rec.extra))
        writer.writerow(
            [
                rec.method,
                _fmt(rec.k),
                _fmt(rec.k_scale),
                _fmt(rec.alpha_or_rho),
                _fmt(rec.psnr_db),
                _fmt(rec.cg_iterations),
                _fmt(rec.wall_time_ms),
                _fmt(rec.seed),
                extra,
            ]
        )
    return buf.getvalue()


def write_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(records))
