"""Run orchestration: single simulations, steady-state runs, and sweeps."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import SimulationSpec, SweepSpec, emit_config, parse_config, spec_to_dict
from .lindblad import (
    DomainChain,
    Trajectory,
    evolve,
    initial_state,
    observables,
    steady_state,
)
from .meanfield import mf_evolve, mf_init
from .output import trajectory_svg, write_manifest, write_trajectory_csv

__all__ = ["RunResult", "SweepResult", "time_grid", "run", "run_steady", "sweep",
           "half_decay_time"]


@dataclass
class RunResult:
    spec: SimulationSpec
    trajectory: Trajectory
    csv_path: Path
    svg_path: Path | None
    manifest_path: Path


@dataclass
class SweepResult:
    csv_path: Path
    manifest_path: Path
    rows: list
    failures: list  # (index, value, message)


def time_grid(spec: SimulationSpec) -> np.ndarray:
    if spec.sampling == "logarithmic":
        return np.geomspace(spec.t_start, spec.t_end, spec.n_samples)
    return np.linspace(spec.t_start, spec.t_end, spec.n_samples)


def simulate(spec: SimulationSpec) -> Trajectory:
    """Run the configured backend over the configured time grid."""
    grid = time_grid(spec)
    if spec.backend == "exact":
        rho0 = initial_state(spec.chain, spec.excitations)
        return evolve(rho0, spec.chain, grid, rtol=spec.rtol, atol=spec.atol)
    state0 = mf_init(spec.chain, spec.initial_relative_inversions())
    return mf_evolve(state0, spec.chain, grid, rtol=spec.rtol, atol_scale=spec.atol)


def run(spec: SimulationSpec, out_dir) -> RunResult:
    """Simulate and write CSV + optional SVG + manifest into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = simulate(spec)

    csv_path = out_dir / spec.csv_name
    write_trajectory_csv(csv_path, traj)
    svg_path = None
    if spec.svg_name is not None:
        svg_path = out_dir / spec.svg_name
        svg_path.write_bytes(
            trajectory_svg(traj, log_x=spec.sampling == "logarithmic").encode("utf-8")
        )
    manifest_path = out_dir / spec.manifest_name
    outputs = {"csv": spec.csv_name, "svg": spec.svg_name}
    write_manifest(manifest_path, spec_to_dict(spec), __version__, outputs)
    return RunResult(spec, traj, csv_path, svg_path, manifest_path)


def run_steady(spec: SimulationSpec, out_dir, eps: float = 1e-9, t_max=None) -> dict:
    """Integrate to the steady state and write a summary JSON + manifest."""
    if spec.backend != "exact":
        raise ValueError("steady-state runs use the exact backend")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rho0 = initial_state(spec.chain, spec.excitations)
    rho_ss = steady_state(rho0, spec.chain, eps=eps, t_max=t_max)
    obs = observables(rho_ss, spec.chain)
    summary = {
        "eps": eps,
        "jz": [float(v) for v in obs.jz],
        "jz_norm": [float(v / n) for v, n in zip(obs.jz, spec.chain.sizes)],
        "purity": obs.purity,
        "trace": obs.trace,
    }
    (out_dir / "steady.json").write_bytes(
        (json.dumps(summary, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
    write_manifest(
        out_dir / spec.manifest_name, spec_to_dict(spec), __version__,
        {"steady": "steady.json"},
    )
    return summary


def half_decay_time(traj: Trajectory, domain: int = 0, level: float = 0.0):
    """First time the domain's normalized inversion crosses ``level`` downward
    (linear interpolation between samples); None if it never does."""
    y = traj.jz_norm[:, domain]
    t = traj.times
    for k in range(1, t.size):
        if y[k - 1] > level >= y[k]:
            if y[k] == y[k - 1]:
                return float(t[k])
            frac = (y[k - 1] - level) / (y[k - 1] - y[k])
            return float(t[k - 1] + frac * (t[k] - t[k - 1]))
    return None


def _sweep_member(args):
    index, spec_json, member_dir = args
    spec = parse_config(spec_json)
    result = run(spec, member_dir)
    traj = result.trajectory
    final = [float(v) for v in traj.jz_norm[-1]]
    t_half = half_decay_time(traj, domain=0)
    return index, final, t_half


def sweep(sweep_spec: SweepSpec, out_dir, workers: int = 1) -> SweepResult:
    """Run every member (optionally in parallel) and merge a results table.

    Member rows are ordered by parameter value regardless of completion
    order.  Failed members are reported but do not block the others.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    members = sweep_spec.member_specs()
    values = sorted(sweep_spec.values)
    jobs = []
    for i, member in enumerate(members):
        member_dir = out_dir / f"member_{i:03d}"
        jobs.append((i, emit_config(member), str(member_dir)))

    results: dict[int, tuple] = {}
    failures: list[tuple] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_sweep_member, job): job[0] for job in jobs}
            for fut, idx in futures.items():
                try:
                    i, final, t_half = fut.result()
                    results[i] = (final, t_half)
                except Exception as exc:  # collected, reported, not fatal here
                    failures.append((idx, values[idx], str(exc)))
    else:
        for job in jobs:
            try:
                i, final, t_half = _sweep_member(job)
                results[i] = (final, t_half)
            except Exception as exc:
                failures.append((job[0], values[job[0]], str(exc)))

    m = sweep_spec.base.chain.n_domains
    header = ["value"] + [f"final_jz_norm_{i + 1}" for i in range(m)] + ["t_half_1"]
    lines = [",".join(header)]
    rows = []
    for i, value in enumerate(values):
        if i not in results:
            continue
        final, t_half = results[i]
        row = [repr(float(value))] + [repr(v) for v in final]
        row.append("" if t_half is None else repr(t_half))
        lines.append(",".join(row))
        rows.append({"value": value, "final_jz_norm": final, "t_half_1": t_half})

    csv_path = out_dir / "sweep.csv"
    csv_path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    manifest_path = out_dir / "sweep_manifest.json"
    doc = {
        "parameter": sweep_spec.parameter,
        "values": list(values),
        "base": spec_to_dict(sweep_spec.base),
    }
    write_manifest(manifest_path, doc, __version__, {"csv": "sweep.csv"})
    failures.sort()
    return SweepResult(csv_path=csv_path, manifest_path=manifest_path, rows=rows,
                       failures=failures)
