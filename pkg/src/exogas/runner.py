"""Run loop behind the CLI: timeseries, snapshots, final report and exit status.

Exit codes: 0 success, 1 a runtime invariant failed, 3 a step was rejected
below ``dt_min`` (a ``failure.json`` dump is written next to the outputs).
Snapshots are taken at the first step boundary at or after each requested
time; there is no interpolation.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .config import RunConfig, serialize
from .diagnostics import History, decay_metric, unit_interval_means
from .errors import StepFailure
from .grid_state import make_initial_condition
from .output import TimeseriesWriter, code_version, read_snapshot, read_timeseries, write_json, write_snapshot, write_table
from .solver import Integrator

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2
EXIT_STEP_FAILURE = 3


@dataclass
class RunReport:
    exit_code: int
    checks: dict
    t_final: float
    steps: int
    decay_initial: float
    decay_final: float
    bounds: dict
    identities: dict
    files: dict = field(default_factory=dict)
    failure: Optional[dict] = None
    notices: list = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_OK

    def to_dict(self) -> dict:
        return asdict(self)


def set_threads(k: Optional[int]) -> None:
    """Cap the numba thread pool.  The kernels use a fixed summation order, so
    results do not depend on this setting."""
    if k is None:
        return
    if k < 1:
        raise ValueError("--threads must be >= 1")
    import numba

    numba.set_num_threads(min(int(k), numba.config.NUMBA_NUM_THREADS))


def metadata(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.config_hash(), "code_version": code_version()}


class _Checks:
    """Runtime invariants evaluated on every step or every sample."""

    def __init__(self):
        self.ok = {
            "positivity": True,
            "z_in_unit_interval": True,
            "burn_monotone": True,
            "X_monotone": True,
            "dissipation_nonnegative": True,
            "finite": True,
            "interval_means_bracketed": True,
        }
        self._burn = -math.inf
        self._burn_sq = -math.inf
        self._X = -math.inf

    def step(self, s) -> None:
        if not (np.all(s.v > 0) and np.all(s.theta > 0)):
            self.ok["positivity"] = False
        if not (np.all(s.z >= 0) and np.all(s.z <= 1)):
            self.ok["z_in_unit_interval"] = False

    def sample(self, rec, p, grid, s) -> None:
        # the audit column is NaN by design when the audit is off
        vals = rec.values()[:-1]
        if not all(math.isfinite(v) for v in vals):
            self.ok["finite"] = False
        if rec.burn_integral < self._burn or rec.burn_sq_integral < self._burn_sq:
            self.ok["burn_monotone"] = False
        if rec.X < self._X:
            self.ok["X_monotone"] = False
        if rec.dissipation_V < 0:
            self.ok["dissipation_nonnegative"] = False
        self._burn, self._burn_sq, self._X = rec.burn_integral, rec.burn_sq_integral, rec.X
        if grid.x_max >= 2 and not all(row[-1] for row in unit_interval_means(p, s, grid, rec.lyapunov)):
            self.ok["interval_means_bracketed"] = False


def run(cfg: RunConfig, out_dir: str, quiet: bool = True, jsonl: Optional[bool] = None,
        plots: Optional[bool] = None) -> RunReport:
    """Integrate ``cfg`` to ``run.t_end`` writing all outputs under ``out_dir``."""
    started = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)
    p, grid, bc, outs = cfg.params, cfg.grid.build(), cfg.boundary, cfg.outputs
    meta = metadata(cfg)
    with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(serialize(cfg))
    s = make_initial_condition(grid, cfg.ic.family, cfg.ic.amplitude, cfg.ic.width, cfg.run.seed)
    integ = Integrator(p, grid, cfg.stepper, bc)
    hist = History(p, grid, s, bc, audit_k=outs.audit_k if outs.audit else None)
    checks = _Checks()
    checks.step(s)
    decay0 = decay_metric(s)
    files = {}
    ts_path = os.path.join(out_dir, outs.timeseries)
    writer = TimeseriesWriter(ts_path, meta, outs.jsonl if jsonl is None else jsonl)
    files["timeseries"] = ts_path
    if writer.jsonl_path:
        files["timeseries_jsonl"] = writer.jsonl_path
    pending = sorted(outs.snapshot_times)
    snaps = []

    def snapshot(st, label):
        path = os.path.join(out_dir, f"{outs.snapshot_prefix}_{label}.csv")
        write_snapshot(path, p, grid, st, meta)
        snaps.append(path)

    def sample(st):
        rec = hist.record()
        writer.write(rec)
        checks.sample(rec, p, grid, st)

    def take_due(st):
        while pending and st.t >= pending[0] - 1e-12 * max(1.0, pending[0]):
            snapshot(st, f"t{pending.pop(0):g}")

    sample(s)
    take_due(s)
    stride = cfg.run.sample_stride
    if outs.audit:
        checks.ok["audit_zero_at_start"] = hist.audit.max_residual() == 0.0

    def on_step(st, dt, tally):
        hist.observe(st, dt, tally)
        checks.step(st)
        if hist.steps % stride == 0:
            sample(st)
        take_due(st)
        if not quiet and hist.steps % (stride * 100) == 0:
            print(f"t={st.t:.6g} steps={hist.steps} dt={dt:.3g} decay={decay_metric(st):.3e}", flush=True)

    failure = None
    try:
        s = integ.advance(s, cfg.run.t_end, on_step)
    except StepFailure as exc:
        failure = dict(exc.dump or {}, message=str(exc))
        fpath = os.path.join(out_dir, "failure.json")
        write_json(fpath, failure)
        files["failure"] = fpath
        s = hist.state
    if hist.records[-1].step != hist.steps:
        sample(s)
    writer.close()
    snapshot(s, "final")
    files["snapshots"] = snaps

    if outs.audit:
        apath = os.path.join(out_dir, f"audit_k{outs.audit_k}.csv")
        write_table(apath, ("x", "B", "Q", "A", "residual"), hist.audit.rows(), meta)
        files["audit"] = apath

    r1, r2 = hist.reactant_identities()
    identities = {
        "entropy_residual": hist.entropy_identity_residual(),
        "reactant_residual_1": r1,
        "reactant_residual_2": r2,
        "first_law_residual": hist.first_law_balance(),
        "gplus_slope": hist.gplus_slope(),
    }
    if outs.audit:
        identities["audit_residual"] = hist.audit.max_residual()
    bounds = {
        "min_v": hist.min_v, "max_v": hist.max_v,
        "min_theta": hist.min_theta, "max_theta": hist.max_theta,
        "min_z": hist.tally.z_min, "max_z": hist.tally.z_max,
        "X": hist.X, "Y": float(hist.Y), "Z": float(hist.Z),
    }
    if failure is not None:
        code = EXIT_STEP_FAILURE
    elif not all(checks.ok.values()):
        code = EXIT_INVARIANT
    else:
        code = EXIT_OK
    report = RunReport(
        exit_code=code,
        checks=dict(checks.ok),
        t_final=float(s.t),
        steps=hist.steps,
        decay_initial=decay0,
        decay_final=decay_metric(s),
        bounds=bounds,
        identities=identities,
        files=files,
        failure=failure,
        notices=cfg.notices,
    )
    if outs.plots if plots is None else plots:
        from .plots import plot_profiles, plot_timeseries

        _, cols = read_timeseries(ts_path)
        files["timeseries_plot"] = plot_timeseries(cols, os.path.join(out_dir, "timeseries.png"),
                                                   f"config {meta['config_hash']}")
        _, prof = read_snapshot(snaps[-1])
        files["profile_plot"] = plot_profiles(prof, os.path.join(out_dir, "profiles_final.png"), s.t)
    report.wall_seconds = time.perf_counter() - started
    rpath = os.path.join(out_dir, "report.json")
    files["report"] = rpath
    write_json(rpath, report.to_dict())
    return report


def format_report(rep: RunReport) -> str:
    lines = [f"t_final={rep.t_final:.6g} steps={rep.steps} exit={rep.exit_code}"]
    for name, ok in rep.checks.items():
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {name}")
    ratio = rep.decay_final / rep.decay_initial if rep.decay_initial > 0 else 0.0
    lines.append(f"  decay_metric {rep.decay_initial:.6e} -> {rep.decay_final:.6e} (ratio {ratio:.3e})")
    for k, v in rep.bounds.items():
        lines.append(f"  {k} = {v:.6g}")
    for k, v in rep.identities.items():
        lines.append(f"  {k} = {v:.3e}")
    for note in rep.notices:
        lines.append(f"  note: {note}")
    if rep.failure:
        lines.append(f"  step failure: {rep.failure.get('message')}")
    return "\n".join(lines)


@dataclass
class CheckRow:
    name: str
    value: float
    threshold: str
    passed: bool


def _history_run(cfg: RunConfig, n_cells: int, t_end: float, family: Optional[str] = None) -> History:
    from .config import GridSpec

    grid = GridSpec(n_cells, cfg.grid.dx * cfg.grid.n_cells / n_cells).build()
    s = make_initial_condition(grid, family or cfg.ic.family, cfg.ic.amplitude, cfg.ic.width, cfg.run.seed)
    hist = History(cfg.params, grid, s, cfg.boundary)
    Integrator(cfg.params, grid, cfg.stepper, cfg.boundary).advance(
        s, t_end, lambda st, dt, tally: hist.observe(st, dt, tally))
    return hist


def verify_suite(cfg: RunConfig, seed: int = 0) -> list[CheckRow]:
    """Identity and invariant checks for ``cfg`` with their pass thresholds.

    The refinement rows rerun the configured initial condition on n, 2n and
    4n cells up to ``min(t_end, 1)`` and report the smaller observed order.
    """
    from .constitutive import ThermoPoint, dissipation_decomposition, maxwell_residuals
    from .config import GridSpec
    from .diagnostics import entropy_roots
    from .geometry import radius_from_volume

    p = cfg.params
    rng = np.random.default_rng(seed)
    rows = []

    v = rng.uniform(0.5, 2.0, 100)
    th = rng.uniform(0.5, 2.0, 100)
    pt = ThermoPoint(v, th)
    coarse, fine = (np.stack(maxwell_residuals(p, pt, h)) for h in (1e-2, 1e-3))
    rich = float(np.max(np.abs((100.0 * fine - coarse) / 99.0)))
    rows.append(CheckRow("maxwell_richardson", rich, "< 1e-9", rich < 1e-9))

    u = rng.uniform(-1, 1, 10000)
    ux = rng.uniform(-1, 1, 10000)
    r = rng.uniform(1, 5, 10000)
    vv = rng.uniform(0.2, 5, 10000)
    tt = rng.uniform(0.2, 5, 10000)
    lhs, t1, t2 = dissipation_decomposition(p, vv, tt, u, r, ux)
    rel = float(np.max(np.abs(lhs - t1 - t2) / np.maximum(np.abs(lhs), 1e-300)))
    rows.append(CheckRow("dissipation_split", rel, "< 1e-12 and t1,t2 >= 0",
                         rel < 1e-12 and bool(np.all(t1 >= 0) and np.all(t2 >= 0))))

    grid = GridSpec(64, 1.0 / 64).build()
    rf = radius_from_volume(p, grid, np.ones(64))
    exact = (1.0 + p.n_dim * grid.nodes) ** (1.0 / p.n_dim)
    gerr = float(np.max(np.abs(rf.r - exact)))
    rows.append(CheckRow("radius_exact", gerr, "< 1e-12", gerr < 1e-12))

    a = entropy_roots(0.0)
    rows.append(CheckRow("entropy_roots_zero", abs(a[0] - 1) + abs(a[1] - 1), "== 0", a == (1.0, 1.0)))

    eq = _history_run(cfg, cfg.grid.n_cells, min(cfg.run.t_end, 1.0), family="equilibrium")
    eq_res = max(abs(eq.entropy_identity_residual()), abs(eq.first_law_balance()),
                 *map(abs, eq.reactant_identities()))
    rows.append(CheckRow("equilibrium_identities", eq_res, "< 1e-12", eq_res < 1e-12))

    t_end = min(cfg.run.t_end, 1.0)
    n = cfg.grid.n_cells
    hists = [_history_run(cfg, n * 2**j, t_end) for j in range(3)]
    series = {
        "entropy_identity": [abs(h.entropy_identity_residual()) for h in hists],
        "reactant_identity_1": [abs(h.reactant_identities()[0]) for h in hists],
        "reactant_identity_2": [abs(h.reactant_identities()[1]) for h in hists],
        "first_law": [abs(h.first_law_balance()) for h in hists],
    }
    for name, errs in series.items():
        if max(errs) < 1e-12:
            rows.append(CheckRow(f"{name}_order", math.inf, "residual < 1e-12 or order >= 1.8", True))
            continue
        orders = [math.log2(errs[i] / errs[i + 1]) if errs[i + 1] > 0 else math.inf for i in range(2)]
        worst = min(orders)
        rows.append(CheckRow(f"{name}_order", worst, ">= 1.8", worst >= 1.8))
    h = hists[0]
    rows.append(CheckRow("z_in_unit_interval", h.tally.z_min, "min z >= 0, max z <= 1",
                         h.tally.z_min >= 0 and h.tally.z_max <= 1))
    rows.append(CheckRow("positivity", min(h.min_v, h.min_theta), "> 0", h.min_v > 0 and h.min_theta > 0))
    return rows


def format_checks(rows: list[CheckRow]) -> str:
    width = max(len(r.name) for r in rows)
    lines = [f"{'check':<{width}}  {'value':>12}  threshold  result"]
    for r in rows:
        lines.append(f"{r.name:<{width}}  {r.value:12.4e}  {r.threshold}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
