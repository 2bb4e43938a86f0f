"""Scenario orchestration: one config in, CSV files plus a manifest out."""
from __future__ import annotations

import hashlib
import json
import os
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .bihari import PhiFunction, assert_zero_conclusion, check_hypothesis, sqrt_counterexample
from .catalog import build_problem
from .coefficients import validate_problem
from .config import ScenarioConfig, config_dict, serialize_config
from .errors import PreconditionError, ZvonkinError
from .grid import GridFunction, write_csv
from .localization import localization_agreement
from .moduli import (ComposedModulus, Lipschitz, LogLipschitz, Modulus, Zero, classify_composed,
                     classify_osgood, numeric_osgood_probe)
from .scale import build_transform, eval_u, eval_u_prime, eval_u_second
from .simulation import RNG_NAME, coupled_pair_run, perturbed_pair_run, sample_brownian_batch, \
    transform_consistency_run

OUTPUT_DIR_ENV = "ZVONKIN_OUTPUT_DIR"


def output_prefix(cfg: ScenarioConfig) -> Path:
    prefix = Path(cfg.output)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        prefix = Path(override) / (prefix.name if prefix.is_absolute() else prefix)
    return prefix


def problem_from_config(cfg: ScenarioConfig):
    params = {"c": cfg.c}
    if cfg.dim is not None:
        params["dim"] = cfg.dim
    if cfg.x0 is not None:
        params["x0"] = np.array(cfg.x0)
    return build_problem(cfg.catalog, **params)


def modulus_from_config(cfg: ScenarioConfig) -> Modulus:
    if cfg.modulus == "hoelder":
        return Modulus("hoelder", cfg.C, cfg.alpha if cfg.alpha is not None else 0.5)
    return Modulus(cfg.modulus, cfg.C)


class _Writer:
    def __init__(self, prefix: Path):
        self.prefix = prefix
        self.paths: list[Path] = []

    def csv(self, suffix, header, rows):
        path = Path(f"{self.prefix}_{suffix}.csv")
        path.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(path)
        write_csv(path, header, rows)

    def cleanup(self):
        for p in self.paths:
            p.unlink(missing_ok=True)


def _run_transform(cfg, out):
    p = problem_from_config(cfg)
    t = build_transform(p, cfg.r_max, cfg.grid_step)
    m = int(np.floor(cfg.r_max / cfg.table_step + 1e-9))
    xs = cfg.table_step * np.arange(-m, m + 1)
    u_rows, v_rows = [], []
    for i, s in enumerate(t.scales):
        u = eval_u(s, xs)
        up = eval_u_prime(s, xs)
        upp = eval_u_second(s, p, xs)
        u_rows += zip([i] * len(xs), xs, u, up, upp)
        y = np.zeros((len(xs), p.dim))
        y[:, i] = u
        v = t.v(y)[:, i]
        v_rows += zip([i] * len(xs), u, v, t.hat_b(y)[:, i], t.hat_sigma_i(i, u))
    out.csv("u", ["coordinate", "x", "u", "u_prime", "u_second"], u_rows)
    out.csv("v", ["coordinate", "y", "v", "b_hat", "sigma_hat"], v_rows)


def _run_osgood(cfg, out):
    m = modulus_from_config(cfg)
    v = classify_osgood(m)
    rows = [(m.describe(), 0.0, 0.0, v.order1_diverges, v.order2_diverges, v.method)]
    target = m
    if cfg.c_r is not None or cfg.c_lin is not None:
        target = ComposedModulus(m, cfg.c_r if cfg.c_r is not None else 1.0, cfg.c_lin or 0.0)
        cv = classify_composed(target)
        rows.append((m.describe(), target.c_r, target.c_lin, cv.order1_diverges, cv.order2_diverges, cv.method))
    probe_rows = []
    eps = 2.0 ** -np.arange(2, cfg.probe_depth + 1)
    if np.all(np.asarray(target(eps)) > 0):  # the probe needs a positive modulus
        verdicts = []
        for order in (1, 2):
            r = numeric_osgood_probe(target, order, eps, growth_floor=cfg.growth_floor)
            verdicts.append(r.divergence_consistent)
            probe_rows += zip([order] * len(eps), r.epsilons, r.integrals)
        c_r = target.c_r if isinstance(target, ComposedModulus) else 0.0
        c_lin = target.c_lin if isinstance(target, ComposedModulus) else 0.0
        rows.append((m.describe(), c_r, c_lin, verdicts[0], verdicts[1], "numeric-probe"))
    out.csv("verdict", ["modulus", "c_r", "c_lin", "order1", "order2", "method"], rows)
    if probe_rows:
        out.csv("probe", ["order", "epsilon", "integral"], probe_rows)


def _run_uniqueness(cfg, out):
    p = problem_from_config(cfg)
    rows, summary, pert = [], [], []
    prev = None
    for level, h in enumerate(cfg.h_levels):
        h_fine = h / cfg.fine_factor
        g = coupled_pair_run(p, cfg.T, h, h_fine, cfg.replications, cfg.seed)
        rows += [(h, h_fine, r, g.per_replication[r], g.terminal_per_replication[r]) for r in range(g.replications)]
        med = g.median_sup_gap
        factor = prev / med if prev is not None and med > 0 else None
        summary.append((h, h_fine, med, g.median_terminal_gap, g.sup_gap, factor))
        prev = med
        q = perturbed_pair_run(p, cfg.T, h, cfg.perturbation, cfg.replications, cfg.seed)
        pert.append((h, cfg.perturbation, q.median_sup_gap, q.median_terminal_gap, q.sup_gap))
    out.csv("gaps", ["h_coarse", "h_fine", "replication", "sup_gap", "terminal_gap"], rows)
    out.csv("summary", ["h_coarse", "h_fine", "median_sup_gap", "median_terminal_gap", "max_sup_gap",
                        "reduction_factor"], summary)
    out.csv("perturbed", ["h", "delta", "median_sup_gap", "median_terminal_gap", "max_sup_gap"], pert)


def _run_consistency(cfg, out):
    p = problem_from_config(cfg)
    t = build_transform(p, cfg.r_max, cfg.grid_step)
    w = sample_brownian_batch(p.dim, cfg.T, min(cfg.h_levels), cfg.seed, cfg.replications)
    rows, per = [], []
    for h in cfg.h_levels:
        r = transform_consistency_run(p, t, w, h)
        rows.append((h, r.median_discrepancy, float(np.max(r.discrepancy)), r.clamp_count, r.excess_clamping))
        per += [(h, k, d) for k, d in enumerate(r.discrepancy)]
    out.csv("consistency", ["h", "median_discrepancy", "max_discrepancy", "clamp_count", "excess_clamping"], rows)
    out.csv("consistency_runs", ["h", "replication", "discrepancy"], per)


def _run_localize(cfg, out):
    p = problem_from_config(cfg)
    rows = localization_agreement(p, cfg.radius, cfg.T, cfg.h_levels[0], cfg.replications, cfg.seed)
    out.csv("localize", ["replication", "seed", "exit_index", "first_difference", "agrees_through_exit"],
            [(r.replication, r.seed, r.exit_index, r.first_difference, r.agrees_through_exit) for r in rows])


def _bihari_row(case, v, phi, slack):
    hyp = check_hypothesis(v, phi, slack)
    label = phi.modulus.describe() if phi.modulus is not None else "callable"
    try:
        rep = assert_zero_conclusion(v, phi, slack)
        verdict, detail = ("pass" if rep.passed else "fail"), rep.message
    except PreconditionError as e:
        verdict, detail = "precondition-error", str(e)
    return (case, label, hyp, phi.osgood(), verdict, float(np.max(v.values)), detail.replace(",", ";"))


def _run_bihari(cfg, out):
    slack = cfg.slack if cfg.slack is not None else 10 * cfg.step**2
    zero = GridFunction(cfg.x_max, cfg.step, np.zeros(round(cfg.x_max / cfg.step) + 1))
    phis = [Lipschitz(1.0), LogLipschitz(1.0), Zero()]
    if cfg.modulus is not None:
        phis.append(modulus_from_config(cfg))
    rows = [_bihari_row("zero", zero, PhiFunction.of(m), slack) for m in phis]
    rows.append(_bihari_row("gronwall", zero, PhiFunction.of(Lipschitz(2.0)), slack))
    v, phi = sqrt_counterexample(cfg.x_max, cfg.step)
    rows.append(_bihari_row("sqrt-counterexample", v, phi, slack))
    out.csv("bihari", ["case", "phi", "hypothesis", "osgood", "conclusion", "max_v", "detail"], rows)


_RUNNERS = {
    "transform": _run_transform,
    "osgood": _run_osgood,
    "uniqueness": _run_uniqueness,
    "consistency": _run_consistency,
    "localize": _run_localize,
    "bihari": _run_bihari,
}


def _manifest(cfg, paths):
    return {
        "tool": "zvonkin",
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "rng": RNG_NAME,
        "seed": cfg.seed,
        "parameters": {k: list(v) if isinstance(v, tuple) else v for k, v in config_dict(cfg).items()},
        "config": serialize_config(cfg),
        "outputs": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in paths},
    }


def run_scenario(cfg: ScenarioConfig) -> list[Path]:
    """Run one scenario; returns the written paths (manifest last).

    On any library error the partial outputs are removed and the error
    re-raised.
    """
    out = _Writer(output_prefix(cfg))
    try:
        if cfg.catalog is not None:
            report = validate_problem(problem_from_config(cfg))
            if not report.ok:
                raise ZvonkinError(f"catalog entry {cfg.catalog!r} fails validation:\n{report}")
        _RUNNERS[cfg.kind](cfg, out)
        manifest = Path(f"{out.prefix}_manifest.json")
        manifest.write_text(json.dumps(_manifest(cfg, out.paths), indent=2, sort_keys=True) + "\n")
        out.paths.append(manifest)
    except BaseException:
        out.cleanup()
        raise
    return out.paths
