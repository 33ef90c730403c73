"""Config-driven experiment runner: ``sobolev-lab run|list-scenarios|validate``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .degenerate import DegWeight, degenerate_coercivity, degenerate_residual, solve_degenerate
from .elliptic import (
    EllipticProblem,
    LowerTerm,
    coercivity_report,
    relative_residual,
    solve_perturbed,
    solve_principal,
    young_cap,
)
from .embedding import EmbeddingParams, embedding_terms
from .errors import ConfigInvalid, SobolevLabError
from .grid_norms import Field, Grid, make_grid, random_band_limited
from .operator_core import DiagOperator, InterpParams, interpolation_norm, interpolation_norm_realized
from .parabolic import ParabolicProblem, SpaceTimeField, parabolic_terms, solve_cauchy
from .report import Report
from .symbols import SymbolParams, dyadic_grid, mikhlin_sup, principal_symbol, psi_symbol

COLUMNS = {
    "solve-elliptic": ["t", "lambda_re", "lambda_im", "probe", "residual", "empirical_constant", "status"],
    "check-coercivity": ["t", "lambda", "empirical_constant", "young_cap", "status"],
    "solve-parabolic": ["eps", "probe", "empirical_constant", "status"],
    "check-embedding": ["t", "h", "mu", "probe", "lhs", "rhs", "ratio", "status"],
    "check-multiplier": ["symbol", "t", "h", "beta", "mikhlin_sup", "status"],
    "check-interp": ["theta", "sigma", "probe", "canonical", "realized", "ratio", "status"],
    "check-degenerate": ["t", "lambda", "probe", "residual", "degenerate_constant", "regular_constant", "status"],
}

DEFAULTS: dict[str, Any] = {
    "grid.n": 1,
    "grid.N": 16,
    "grid.L": 2 * math.pi,
    "operator.q": 2.0,
    "operator.diag": [1.0],
    "problem.l": [1],
    "problem.alpha": [1],
    "problem.lower": [],
    "exponents.p": [2.0],
    "exponents.q": None,
    "exponents.p0": 2.0,
    "forcing.kind": "random",
    "forcing.mode": 1,
    "forcing.count": 4,
    "forcing.band": 0.25,
    "sweep.t": [1.0],
    "sweep.lambda": [1.0],
    "sweep.eps": [1.0],
    "sweep.h": [1.0],
    "sweep.mu": [0.0],
    "sweep.theta": [0.5],
    "interp.sigma": 2.0,
    "multiplier.symbols": ["psi"],
    "multiplier.beta": [[1]],
    "multiplier.per_octave": 2,
    "multiplier.lambda": 1.0,
    "time.T": 1.0,
    "time.N": 64,
    "degenerate.a": [0.5],
    "seed": 0,
    "output.name": None,
}
SWEEPS = ("sweep.t", "sweep.lambda", "sweep.eps", "sweep.h", "sweep.mu", "sweep.theta")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class ScenarioConfig:
    scenario: str
    raw: dict
    grid: Grid
    A: DiagOperator
    seed: int
    name: str
    opts: dict = field(default_factory=dict)

    def get(self, key: str):
        return self.opts[key]


def _vec(value, n: int, key: str, cast=float) -> tuple:
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ConfigInvalid(f"{key}: expected {n} entries, got {len(value)}")
        return tuple(cast(v) for v in value)
    return (cast(value),) * n


def _complex(value, key: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    raise ConfigInvalid(f"{key}: expected a number or [re, im], got {value!r}")


def _operator(opts: dict) -> DiagOperator:
    q = float(opts["operator.q"])
    if "operator.M" in opts or "operator.s" in opts:
        return DiagOperator.dyadic(int(opts.get("operator.M", 16)), float(opts.get("operator.s", 1.0)), q)
    return DiagOperator(tuple(opts["operator.diag"]), q=q)


def load_config(path: str | Path, seed: int | None = None) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object with flat dotted keys")
    if seed is not None:
        raw = {**raw, "seed": seed}
    return validate_config(raw)


def validate_config(raw: dict) -> ScenarioConfig:
    """Check every constraint the scenario depends on without allocating fields."""
    unknown = set(raw) - set(DEFAULTS) - {"scenario", "operator.M", "operator.s"}
    if unknown:
        raise ConfigInvalid(f"unknown keys: {sorted(unknown)}")
    scenario = raw.get("scenario")
    if scenario not in COLUMNS:
        raise ConfigInvalid(f"scenario must be one of {sorted(COLUMNS)}, got {scenario!r}")
    opts = {**DEFAULTS, **raw}
    for key in SWEEPS:
        if not isinstance(opts[key], list) or not opts[key]:
            raise ConfigInvalid(f"{key} must be a non-empty list")
    seed = opts["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigInvalid("seed must be an unsigned 64-bit integer")
    try:
        n = int(opts["grid.n"])
        grid = make_grid(n, _vec(opts["grid.N"], n, "grid.N", int), _vec(opts["grid.L"], n, "grid.L"))
        A = _operator(opts)
        cfg = ScenarioConfig(scenario, raw, grid, A, seed, opts["output.name"] or scenario, opts)
        _validate_scenario(cfg)
    except ConfigInvalid:
        raise
    except (SobolevLabError, ValueError, TypeError, KeyError) as exc:
        raise ConfigInvalid(f"{type(exc).__name__}: {exc}") from exc
    return cfg


def _t_list(cfg: ScenarioConfig) -> list[tuple]:
    return [_vec(t, cfg.grid.n, "sweep.t") for t in cfg.get("sweep.t")]


def _lower_terms(cfg: ScenarioConfig) -> tuple[LowerTerm, ...]:
    terms = []
    for spec in cfg.get("problem.lower"):
        if not isinstance(spec, dict) or "alpha" not in spec:
            raise ConfigInvalid("problem.lower entries need at least an 'alpha' field")
        terms.append(LowerTerm(tuple(spec["alpha"]), float(spec.get("theta_power", 0.0)), complex(spec.get("coeff", 1.0))))
    return tuple(terms)


def _embedding_params(cfg: ScenarioConfig, t, mu) -> EmbeddingParams:
    n = cfg.grid.n
    p = _vec(cfg.get("exponents.p"), n, "exponents.p")
    q = _vec(cfg.get("exponents.q") or cfg.get("exponents.p"), n, "exponents.q")
    if mu == 0 and any(x <= 1 for x in p + q):
        raise ConfigInvalid("mu = 0 is only accepted with interior exponents 1 < p_k <= q_k")
    return EmbeddingParams(_vec(cfg.get("problem.alpha"), n, "problem.alpha", int), _vec(cfg.get("problem.l"), n, "problem.l", int), p, q, cfg.A, float(mu), t)


def _validate_scenario(cfg: ScenarioConfig) -> None:
    n = cfg.grid.n
    l = _vec(cfg.get("problem.l"), n, "problem.l", int)
    if cfg.get("forcing.kind") not in ("cos", "random"):
        raise ConfigInvalid("forcing.kind must be 'cos' or 'random'")
    if int(cfg.get("forcing.count")) < 1:
        raise ConfigInvalid("forcing.count must be >= 1")
    s = cfg.scenario
    if s in ("solve-elliptic", "check-coercivity", "check-degenerate"):
        lower = _lower_terms(cfg) if s == "solve-elliptic" else ()
        for t in _t_list(cfg):
            for lam in cfg.get("sweep.lambda"):
                EllipticProblem(cfg.A, t, _complex(lam, "sweep.lambda"), l, lower)
        if s == "check-degenerate":
            [DegWeight.cosine(float(a)) for a in _vec(cfg.get("degenerate.a"), n, "degenerate.a")]
    elif s == "solve-parabolic":
        for e in cfg.get("sweep.eps"):
            ParabolicProblem(cfg.A, _vec(e, n, "sweep.eps"), l, float(cfg.get("time.T")), int(cfg.get("time.N")), float(cfg.get("exponents.p0")))
    elif s == "check-embedding":
        for t in _t_list(cfg):
            for mu in cfg.get("sweep.mu"):
                _embedding_params(cfg, t, mu)
        if any(float(h) <= 0 for h in cfg.get("sweep.h")):
            raise ConfigInvalid("sweep.h entries must be positive")
    elif s == "check-multiplier":
        for name in cfg.get("multiplier.symbols"):
            if name not in ("psi", "principal"):
                raise ConfigInvalid(f"unknown multiplier symbol {name!r}")
        for beta in cfg.get("multiplier.beta"):
            if len(beta) != n or any(b not in (0, 1) for b in beta):
                raise ConfigInvalid("multiplier.beta entries must be binary multi-indices of length n")
        for t in _t_list(cfg):
            for h in cfg.get("sweep.h"):
                for mu in cfg.get("sweep.mu"):
                    SymbolParams(t, float(h), float(mu), 1.0, l, _vec(cfg.get("problem.alpha"), n, "problem.alpha", int))
    elif s == "check-interp":
        for theta in cfg.get("sweep.theta"):
            InterpParams(float(theta), float(cfg.get("interp.sigma")))


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _rng(cfg: ScenarioConfig) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(cfg.seed))


def _forcings(cfg: ScenarioConfig, grid: Grid | None = None) -> list[Field]:
    grid = grid or cfg.grid
    if cfg.get("forcing.kind") == "cos":
        j = int(cfg.get("forcing.mode"))
        L = grid.periods[0]
        return [Field.from_function(grid, lambda *x: np.cos(2 * np.pi * j * x[0] / L), cfg.A.m_components)]
    rng = _rng(cfg)
    band = float(cfg.get("forcing.band"))
    return [random_band_limited(grid, cfg.A.m_components, rng, band) for _ in range(int(cfg.get("forcing.count")))]


def _status_row(exc: Exception) -> str:
    return type(exc).__name__


def _elliptic_rows(cfg: ScenarioConfig) -> list[Callable[[], list[dict]]]:
    l = _vec(cfg.get("problem.l"), cfg.grid.n, "problem.l", int)
    lower = _lower_terms(cfg)
    probes = _forcings(cfg)

    def task(t, lam):
        def run():
            rows = []
            prob = EllipticProblem(cfg.A, t, lam, l, lower)
            for i, f in enumerate(probes):
                base = dict(t=list(t), lambda_re=lam.real, lambda_im=lam.imag, probe=i)
                try:
                    u = solve_perturbed(f, prob).u if lower else solve_principal(f, prob)
                    rep = coercivity_report(u, f, prob, residual_tol=1e-6)
                    rows.append(dict(base, residual=relative_residual(u, f, prob), empirical_constant=rep.empirical_constant, status="ok"))
                except SobolevLabError as exc:
                    rows.append(dict(base, status=_status_row(exc)))
            return rows
        return run

    return [task(t, _complex(lam, "sweep.lambda")) for t in _t_list(cfg) for lam in cfg.get("sweep.lambda")]


def _coercivity_rows(cfg: ScenarioConfig):
    l = _vec(cfg.get("problem.l"), cfg.grid.n, "problem.l", int)
    probes = _forcings(cfg)
    cap = young_cap(l)

    def task(t, lam):
        def run():
            row = {"t": list(t), "lambda": lam.real if lam.imag == 0 else [lam.real, lam.imag], "young_cap": cap}
            try:
                prob = EllipticProblem(cfg.A, t, lam, l)
                c = max(coercivity_report(solve_principal(f, prob), f, prob).empirical_constant for f in probes)
                return [dict(row, empirical_constant=c, status="ok")]
            except SobolevLabError as exc:
                return [dict(row, status=_status_row(exc))]
        return run

    return [task(t, _complex(lam, "sweep.lambda")) for t in _t_list(cfg) for lam in cfg.get("sweep.lambda")]


def _parabolic_rows(cfg: ScenarioConfig):
    n = cfg.grid.n
    l = _vec(cfg.get("problem.l"), n, "problem.l", int)
    T, nt = float(cfg.get("time.T")), int(cfg.get("time.N"))
    times = np.linspace(0.0, T, nt + 1)
    forcings = [SpaceTimeField(cfg.grid, times, np.broadcast_to(f.values, (nt + 1,) + f.values.shape)) for f in _forcings(cfg)]

    def task(eps):
        def run():
            prob = ParabolicProblem(cfg.A, eps, l, T, nt, float(cfg.get("exponents.p0")))
            rows = []
            for i, f in enumerate(forcings):
                try:
                    c = parabolic_terms(solve_cauchy(f, prob), f, prob, tuple(cfg.get("exponents.p")), check=False).empirical_constant
                    rows.append(dict(eps=list(eps), probe=i, empirical_constant=c, status="ok"))
                except SobolevLabError as exc:
                    rows.append(dict(eps=list(eps), probe=i, status=_status_row(exc)))
            return rows
        return run

    return [task(_vec(e, n, "sweep.eps")) for e in cfg.get("sweep.eps")]


def _embedding_rows(cfg: ScenarioConfig):
    fields = _forcings(cfg)
    hs = [float(h) for h in cfg.get("sweep.h")]

    def task(t, mu):
        def run():
            ep = _embedding_params(cfg, t, float(mu))
            rows = []
            for i, u in enumerate(fields):
                terms = embedding_terms(u, ep)
                for h in hs:
                    rows.append(dict(t=list(t), h=h, mu=float(mu), probe=i, lhs=terms.lhs, rhs=float(terms.rhs(h, ep.mu)), ratio=float(terms.ratio(h, ep.mu)), status="ok"))
            return rows
        return run

    return [task(t, mu) for t in _t_list(cfg) for mu in cfg.get("sweep.mu")]


def _multiplier_rows(cfg: ScenarioConfig):
    n = cfg.grid.n
    l = _vec(cfg.get("problem.l"), n, "problem.l", int)
    alpha = _vec(cfg.get("problem.alpha"), n, "problem.alpha", int)
    points = dyadic_grid(n, per_octave=int(cfg.get("multiplier.per_octave")))
    lam = _complex(cfg.get("multiplier.lambda"), "multiplier.lambda")

    def task(name, t, h, mu, beta):
        def run():
            if name == "psi":
                sp = SymbolParams(t, h, float(mu), 1.0, l, alpha)
                sym = lambda xi: psi_symbol(xi, sp, cfg.A)
            else:
                sym = lambda xi: principal_symbol(xi, lam, t, l, cfg.A)
            row = dict(symbol=name, t=list(t), h=h, beta=list(beta))
            try:
                return [dict(row, mikhlin_sup=mikhlin_sup(sym, beta, points=points), status="ok")]
            except SobolevLabError as exc:
                return [dict(row, status=_status_row(exc))]
        return run

    return [
        task(name, t, float(h), mu, tuple(beta))
        for name in cfg.get("multiplier.symbols")
        for t in _t_list(cfg)
        for h in cfg.get("sweep.h")
        for mu in cfg.get("sweep.mu")
        for beta in cfg.get("multiplier.beta")
    ]


def _interp_rows(cfg: ScenarioConfig):
    rng = _rng(cfg)
    vectors = rng.standard_normal((int(cfg.get("forcing.count")), cfg.A.m_components))
    sigma = float(cfg.get("interp.sigma"))

    def task(theta):
        def run():
            can = interpolation_norm(cfg.A, vectors, InterpParams(theta, sigma))
            real = interpolation_norm_realized(cfg.A, vectors, theta)
            return [
                dict(theta=theta, sigma=sigma, probe=i, canonical=float(c), realized=float(r), ratio=float(c / r), status="ok")
                for i, (c, r) in enumerate(zip(np.atleast_1d(can), np.atleast_1d(real)))
            ]
        return run

    return [task(float(th)) for th in cfg.get("sweep.theta")]


def _degenerate_rows(cfg: ScenarioConfig):
    n = cfg.grid.n
    l = _vec(cfg.get("problem.l"), n, "problem.l", int)
    gammas = [DegWeight.cosine(float(a)) for a in _vec(cfg.get("degenerate.a"), n, "degenerate.a")]
    probes = _forcings(cfg)

    def task(t, lam):
        def run():
            rows = []
            for i, f in enumerate(probes):
                row = dict(t=list(t), probe=i)
                row["lambda"] = lam.real if lam.imag == 0 else [lam.real, lam.imag]
                try:
                    u = solve_degenerate(f, cfg.A, t, lam, l, gammas)
                    cmp = degenerate_coercivity(f, cfg.A, t, lam, l, gammas)
                    rows.append(dict(row, residual=degenerate_residual(u, f, cfg.A, t, lam, l, gammas), degenerate_constant=cmp.degenerate_constant, regular_constant=cmp.regular_constant, status="ok"))
                except SobolevLabError as exc:
                    rows.append(dict(row, status=_status_row(exc)))
            return rows
        return run

    return [task(t, _complex(lam, "sweep.lambda")) for t in _t_list(cfg) for lam in cfg.get("sweep.lambda")]


SCENARIOS: dict[str, tuple[Callable, str, str]] = {
    "solve-elliptic": (_elliptic_rows, "empirical_constant", "Spectral elliptic solves with coercive constants per (t, lambda, probe)."),
    "check-coercivity": (_coercivity_rows, "empirical_constant", "Resolvent-type coercivity sweep with the analytic cap."),
    "solve-parabolic": (_parabolic_rows, "empirical_constant", "Cauchy problem solves and coercive constants per eps."),
    "check-embedding": (_embedding_rows, "ratio", "Embedding inequality ratios over (t, mu, h)."),
    "check-multiplier": (_multiplier_rows, "mikhlin_sup", "Numerical Mikhlin sups of multiplier symbols."),
    "check-interp": (_interp_rows, "ratio", "Canonical versus realized interpolation norms."),
    "check-degenerate": (_degenerate_rows, "residual", "Degenerate solves, residuals and constant comparison."),
}


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> Report:
    build, stat, _ = SCENARIOS[cfg.scenario]
    tasks = build(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda fn: fn(), tasks))
    else:
        chunks = [fn() for fn in tasks]
    report = Report(
        COLUMNS[cfg.scenario],
        metadata={
            "config": {k: cfg.raw[k] for k in sorted(cfg.raw)},
            "scenario": cfg.scenario,
            "seed": cfg.seed,
            "versions": {"sobolev_lab": __version__, "numpy": np.__version__},
        },
    )
    for rows in chunks:
        for row in rows:
            report.add(**row)
    report.summarize(stat)
    return report


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _use_color() -> bool:
    return "NO_COLOR" not in os.environ and sys.stderr.isatty()


def _fail(exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if _use_color():
        sys.stderr.write(f"\033[31merror\033[0m: {exc}\n")
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sobolev-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config and write CSV + JSON")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=".")
    run.add_argument("--seed", type=_seed, default=None)
    run.add_argument("--threads", type=int, default=1)
    sub.add_parser("list-scenarios", help="print available scenarios")
    val = sub.add_parser("validate", help="check a config without computing")
    val.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name in sorted(SCENARIOS):
                sys.stdout.write(f"{name}\t{SCENARIOS[name][2]}\n")
            return 0
        if args.command == "validate":
            cfg = load_config(args.config)
            sys.stdout.write(json.dumps({"scenario": cfg.scenario, "valid": True}, sort_keys=True) + "\n")
            return 0
        cfg = load_config(args.config, args.seed)
        if args.threads < 1:
            raise ConfigInvalid("--threads must be >= 1")
        report = run_scenario(cfg, args.threads)
        csv_path, meta_path = report.write(args.out, cfg.name)
        sys.stdout.write(f"{csv_path}\n{meta_path}\n")
        return 0
    except ConfigInvalid as exc:
        return _fail(exc, 2)
    except SobolevLabError as exc:
        return _fail(exc, 3)


if __name__ == "__main__":
    sys.exit(main())
