"""Command-line entry point: kernels, work-sweep, exact and markovian runs."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import markovian as mk
from .config import ScenarioConfig, exact_model, load_config
from .errors import ConfigError, NumericalError, QNDWorkError
from .exactsim import (
    convergence_study,
    measurement_cost,
    measurement_cycle,
    probe_reuse_check,
    probe_state,
    sp_decorrelation_run,
    thermal_state,
)
from .kernels import equilibrium_polarization, period_grid, polarization_trajectory, relaxation_integrals
from .work import bounds, cycle_work_approx, cycle_work_closed_form, cycle_work_quadrature

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SWEEP_COLUMNS = ("sweep_value", "W_quadrature", "W_closed_form", "W_approx", "W_nsm_max", "W_sel_max", "W_SL")

log = logging.getLogger("qndwork")


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _map(fn, items, threads: int):
    """Ordered map, in worker processes when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- kernels -------------------------------------------------------------

def kernel_table(cfg: ScenarioConfig, bath=None, drive=None):
    b = bath or cfg.bath
    d = drive or cfg.drive
    k = cfg.kernels
    t = period_grid(d, k.n_periods, k.points_per_period, k.max_dt)
    table = relaxation_integrals(b, d, t, span=k.span, ir_cutoff=k.ir_cutoff, epsabs=k.epsabs)
    s0 = k.s0 if k.s0 is not None else equilibrium_polarization(b.beta, d.omega_a)
    return polarization_trajectory(table, s0, expansion=k.expansion)


def run_kernels(cfg: ScenarioConfig) -> str:
    k = kernel_table(cfg)
    return _csv_text(("t", "J_e", "J_g", "dJ", "s"), zip(k.t_grid, k.J_e, k.J_g, k.dJ, k.s))


# --- work sweep ----------------------------------------------------------

def _sweep_point(args):
    cfg, value = args
    b, d = cfg.bath, cfg.drive
    var = cfg.sweep.variable
    if var == "Omega":
        d = replace(d, Omega=value)
    elif var == "t_cycle":
        d = replace(d, Omega=2.0 * math.pi / value)
    else:
        b = b.with_beta(math.inf if value == 0 else 1.0 / value)
    k = kernel_table(cfg, b, d)
    w_q = cycle_work_quadrature(k, d)
    w_a = cycle_work_approx(k, d)
    if b.zero_temperature:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            w_c = cycle_work_closed_form(b, d, span=cfg.kernels.span)
    else:
        w_c = math.nan
    m = exact_model(cfg, with_probe=False, bath=b, drive=d)
    cost = measurement_cost(m, thermal_state(m, b.beta))
    led = bounds(cost.dE, max(cost.dS, 0.0), b.temperature, cost.p_e)
    return (value, w_q, w_c, w_a, led.W_nsm_max, led.W_sel_max, led.W_SL)


def run_work_sweep(cfg: ScenarioConfig, threads: int = 1) -> str:
    if cfg.sweep is None:
        raise ConfigError("work-sweep needs a sweep section")
    rows = _map(_sweep_point, [(cfg, float(v)) for v in cfg.sweep.values()], threads)
    return _csv_text(SWEEP_COLUMNS, rows)


# --- exact ---------------------------------------------------------------

def run_exact(cfg: ScenarioConfig):
    """(trace CSV, ledger JSON) for the configured exact run."""
    e = cfg.exact
    b = cfg.bath
    base = exact_model(cfg, with_probe=False)
    opts = dict(dt_max=e.dt_max, tol=e.step_tol)
    cycle = measurement_cycle(base, b.beta, n_periods=e.n_periods, **opts)
    out = cycle.ledger.to_dict()
    out["E_S_before"] = cycle.E_S_before
    out["E_SB_before"] = cycle.cost.E_SB_before
    out["E_SB_after"] = cycle.cost.E_SB_after
    out["p_e"] = cycle.cost.p_e
    trace = cycle.trace
    if e.include_probe:
        m = exact_model(cfg)
        probe = probe_state(e.probe_d)
        trace = sp_decorrelation_run(m, b.beta, e.n_periods, probe=probe, dt_max=e.dt_max, pulse_tol=e.pulse_tol)
        out["probe"] = probe_reuse_check(
            m, thermal_state(base, b.beta), probe, dt_max=e.dt_max, reuse_after=e.reuse_after, pulse_tol=e.pulse_tol
        )
    if e.convergence:
        exact_model(cfg, n_modes=2 * e.n_modes, with_probe=False)  # refuse early if over the cap
        out["convergence"] = convergence_study(base, b.beta, **opts)
    buf = io.StringIO()
    trace.write_csv(buf)
    return buf.getvalue(), _json_text(out)


# --- markovian -----------------------------------------------------------

def run_markovian(cfg: ScenarioConfig) -> str:
    m = cfg.markovian
    if m.mode == "campaign":
        rep = mk.summarize(mk.campaign(cfg.seed, m.n_trajectories))
    else:
        rep = mk.steady_cycle_report(mk.golden_rule_trajectory(cfg.bath, cfg.drive))
    return rep.to_json(indent=2) + "\n"


# --- entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qndwork", description="Work extraction by QND measurements in a non-Markovian bath.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("kernels", "tabulate relaxation integrals and polarization (CSV)"),
        ("work-sweep", "cycle work and bounds over a parameter sweep (CSV)"),
        ("exact", "exact supersystem cycle: energy trace (CSV) and work ledger (JSON next to it)"),
        ("markovian", "Markovian second-law report (JSON)"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="YAML config file or shipped recipe name")
        s.add_argument("--out", required=True, help="output path")
        s.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        s.add_argument("--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config)
        log.info("config %s validated", args.config)
        if args.command == "kernels":
            _atomic_write(args.out, run_kernels(cfg))
        elif args.command == "work-sweep":
            _atomic_write(args.out, run_work_sweep(cfg, args.threads))
        elif args.command == "exact":
            if Path(args.out).suffix == ".json":
                raise ConfigError("--out names the trace CSV; the ledger JSON is written next to it")
            csv_text, json_text = run_exact(cfg)
            _atomic_write(args.out, csv_text)
            _atomic_write(Path(args.out).with_suffix(".json"), json_text)
        else:
            _atomic_write(args.out, run_markovian(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, QNDWorkError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    log.info("wrote %s", args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
