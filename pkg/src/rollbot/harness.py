"""Command-line harness: simulate, estimate, and parameter-sweep studies.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical
divergence.  Sweep points run independently (optionally in parallel); one
failing point becomes an error row in ``summary.csv`` without aborting the
sweep.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fileio
from .errors import (
    DomainError,
    InvalidArgumentError,
    MalformedInputError,
    NoRealSolutionError,
    SimulationDivergenceError,
    SingularConfigurationError,
)
from .estimator import (
    ForceSample,
    MassEstimate,
    estimate_force,
    estimate_run,
)
from .kinematics import PlanarDisplacement, trajectory_from_angle_series
from .simulator import SimConfig, SimLog, TruthSample, run

SUMMARY_HEADER = [
    "point", "rep", "m", "k_s", "seed",
    "path_length", "end_displacement", "straightness",
    "gamma_amplitude", "beta_amplitude", "alpha_amplitude",
    "force_rms", "force_peak", "db_excursion", "db_rel_err", "error",
]


@dataclass(frozen=True)
class RunMetrics:
    """Scalar summary of one run; all fields non-negative."""

    path_length: float
    end_displacement: float
    straightness: float
    gamma_amplitude: float
    beta_amplitude: float
    alpha_amplitude: float
    force_rms: float
    force_peak: float
    db_excursion: float


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (mass, stiffness) study points over a base configuration."""

    base: SimConfig
    mass_values: tuple[float, ...] = (0.020, 0.035, 0.050, 0.070)
    stiffness_values: tuple[float, ...] = (160.0, 200.0, 300.0)
    repetitions: int = 1

    def validate(self) -> None:
        self.base.validate()
        if not self.mass_values or any(m <= 0 for m in self.mass_values):
            raise InvalidArgumentError(f"mass_values must be positive, got {self.mass_values}")
        if not self.stiffness_values or any(k <= 0 for k in self.stiffness_values):
            raise InvalidArgumentError(
                f"stiffness_values must be positive, got {self.stiffness_values}"
            )
        if self.repetitions < 1:
            raise InvalidArgumentError(f"repetitions must be >= 1, got {self.repetitions}")

    def points(self) -> list[tuple[int, int, float, float]]:
        """Enumerate (index, rep, mass, stiffness) in spec order."""
        out = []
        index = 0
        for rep in range(self.repetitions):
            for m in self.mass_values:
                for k in self.stiffness_values:
                    out.append((index, rep, m, k))
                    index += 1
        return out


def compute_metrics(
    trajectory: Sequence[tuple[float, PlanarDisplacement]],
    forces: Sequence[ForceSample],
    estimates: Sequence[MassEstimate],
    truth: Sequence[TruthSample] | None = None,
    angles: np.ndarray | None = None,
) -> RunMetrics:
    """Summarize one run.

    ``trajectory`` and ``forces`` must be aligned sample-for-sample;
    ``estimates`` may be shorter (gapped).  ``angles`` is an optional (n, 3)
    array of unwrapped (gamma, beta, alpha) used for the oscillation
    amplitudes; they are reported as 0 when absent.  ``truth`` is accepted
    for signature symmetry with the sweep but does not affect the metrics
    (see :func:`mean_relative_db_error`).

    Raises:
        MalformedInputError: on empty or mismatched series.
    """
    if len(trajectory) == 0 or len(forces) == 0 or len(estimates) == 0:
        raise MalformedInputError("metrics need non-empty trajectory, force and estimate series")
    if len(trajectory) != len(forces):
        raise MalformedInputError(
            f"trajectory has {len(trajectory)} rows but forces has {len(forces)}"
        )
    if angles is not None and len(angles) != len(trajectory):
        raise MalformedInputError(
            f"angles has {len(angles)} rows but trajectory has {len(trajectory)}"
        )

    xy = np.array([[d.x, d.y] for _, d in trajectory])
    steps = np.linalg.norm(np.diff(xy, axis=0), axis=1) if len(xy) > 1 else np.zeros(0)
    path_length = float(np.sum(steps))
    end_displacement = float(np.linalg.norm(xy[-1] - xy[0]))
    straightness = end_displacement / path_length if path_length > 1e-12 else 0.0
    straightness = min(straightness, 1.0)

    if angles is not None:
        arr = np.unwrap(np.asarray(angles, dtype=float), axis=0)
        amp = np.max(np.abs(arr - arr[0]), axis=0)
        gamma_amp, beta_amp, alpha_amp = (float(a) for a in amp)
    else:
        gamma_amp = beta_amp = alpha_amp = 0.0

    f = np.array([s.f_n for s in forces])
    force_rms = float(np.sqrt(np.mean(f * f)))
    force_peak = float(np.max(f))

    db = np.array([e.d_b for e in estimates])
    db_excursion = float(np.mean(np.abs(db - db[0])))

    return RunMetrics(
        path_length=path_length,
        end_displacement=end_displacement,
        straightness=straightness,
        gamma_amplitude=gamma_amp,
        beta_amplitude=beta_amp,
        alpha_amplitude=alpha_amp,
        force_rms=force_rms,
        force_peak=force_peak,
        db_excursion=db_excursion,
    )


def mean_relative_db_error(
    estimates: Sequence[MassEstimate], truth: Sequence[TruthSample]
) -> float:
    """Mean |d_b_est - d_b_true| / d_b_true over timestamp-matched rows."""
    if not estimates or not truth:
        raise MalformedInputError("need non-empty estimates and truth")
    truth_t = np.array([r.t for r in truth])
    truth_db = np.array([r.d_b for r in truth])
    errs = []
    for e in estimates:
        i = int(np.searchsorted(truth_t, e.t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < len(truth_t) and abs(truth_t[j] - e.t) <= 1e-9 + 1e-6 * abs(e.t):
                if truth_db[j] > 0:
                    errs.append(abs(e.d_b - truth_db[j]) / truth_db[j])
                break
    if not errs:
        raise MalformedInputError("no estimate timestamps matched the truth series")
    return float(np.mean(errs))


def _estimate_pipeline(log: SimLog, params) -> tuple[
    list[MassEstimate], list[tuple[float, PlanarDisplacement]], list[ForceSample]
]:
    estimates = estimate_run(log.samples, params, log.torque)
    trajectory = trajectory_from_angle_series(
        [(s.t, s.euler) for s in log.samples], params.shell_radius
    )
    forces = estimate_force(log.samples, params.coupled_mass, params.filter_cutoff_hz)
    return estimates, trajectory, forces


def _run_sweep_point(args: tuple) -> dict:
    """Simulate + estimate one sweep point; returns a summary row dict."""
    index, rep, mass, stiffness, base, out_dir = args
    row = {
        "point": str(index),
        "rep": str(rep),
        "m": repr(float(mass)),
        "k_s": repr(float(stiffness)),
        "seed": str(base.seed + index),
        "error": "",
    }
    try:
        params = replace(base.params, rotating_mass=mass, total_stiffness=stiffness)
        config = replace(base, params=params, seed=base.seed + index)
        log = run(config)
        estimates, trajectory, forces = _estimate_pipeline(log, params)
        angles = np.array([s.euler.as_array() for s in log.samples])
        metrics = compute_metrics(trajectory, forces, estimates, log.truth, angles=angles)
        db_err = mean_relative_db_error(estimates, log.truth)

        point_dir = Path(out_dir) / f"point_{index:03d}"
        fileio.write_sim_outputs(log, point_dir)
        fileio.write_estimates_csv(point_dir / "estimates.csv", estimates)
        fileio.write_trajectory_csv(point_dir / "trajectory.csv", trajectory)
        fileio.write_force_csv(point_dir / "force.csv", forces)

        for name in (
            "path_length", "end_displacement", "straightness",
            "gamma_amplitude", "beta_amplitude", "alpha_amplitude",
            "force_rms", "force_peak", "db_excursion",
        ):
            row[name] = repr(getattr(metrics, name))
        row["db_rel_err"] = repr(db_err)
    except Exception as exc:  # a failing point must not abort the sweep
        for name in SUMMARY_HEADER:
            row.setdefault(name, "")
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(spec: SweepSpec, out_dir: str | Path, workers: int = 1) -> list[dict]:
    """Run every sweep point and write ``summary.csv`` in spec order."""
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [
        (index, rep, m, k, spec.base, str(out)) for index, rep, m, k in spec.points()
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_sweep_point, jobs))
    else:
        rows = [_run_sweep_point(job) for job in jobs]

    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: row.get(name, "") for name in SUMMARY_HEADER})
    return rows


# ---------------------------------------------------------------------------
# CLI commands

def cmd_simulate(config_path: str, out_dir: str) -> int:
    config = fileio.load_sim_config(config_path)
    log = run(config)
    fileio.write_sim_outputs(log, out_dir)
    return 0


def cmd_estimate(log_path: str, torque_path: str, params_path: str, out_dir: str) -> int:
    params = fileio.load_robot_params(params_path)
    samples = fileio.read_log_csv(log_path)
    torque = fileio.read_torque_csv(torque_path)
    log = SimLog(samples=samples, truth=[], torque=torque)
    estimates, trajectory, forces = _estimate_pipeline(log, params)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_estimates_csv(out / "estimates.csv", estimates)
    fileio.write_trajectory_csv(out / "trajectory.csv", trajectory)
    fileio.write_force_csv(out / "force.csv", forces)
    return 0


def cmd_sweep(spec_path: str, out_dir: str, workers: int = 1) -> int:
    mapping = fileio.read_flat_config(spec_path)
    base, masses, stiffnesses, repetitions = fileio.sweep_mappings_from_config(mapping)
    spec = SweepSpec(
        base=base,
        mass_values=masses,
        stiffness_values=stiffnesses,
        repetitions=repetitions,
    )
    run_sweep(spec, out_dir, workers=workers)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rollbot",
        description="Simulate and estimate the internal state of a spring-driven rolling sphere.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one simulation, write log/truth/torque CSVs")
    p_sim.add_argument("--config", required=True, help="flat key-value simulation config")
    p_sim.add_argument("--out", required=True, help="output directory")

    p_est = sub.add_parser("estimate", help="reconstruct internal state from a sensor log")
    p_est.add_argument("--log", required=True, help="sensor log CSV")
    p_est.add_argument("--torque", required=True, help="motor torque CSV aligned with the log")
    p_est.add_argument("--params", required=True, help="flat key-value robot parameters")
    p_est.add_argument("--out", required=True, help="output directory")

    p_sw = sub.add_parser("sweep", help="mass/stiffness parameter study")
    p_sw.add_argument("--spec", required=True, help="flat key-value sweep spec")
    p_sw.add_argument("--out", required=True, help="output directory")
    p_sw.add_argument("--workers", type=int, default=1, help="parallel sweep workers")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "estimate":
            return cmd_estimate(args.log, args.torque, args.params, args.out)
        if args.command == "sweep":
            return cmd_sweep(args.spec, args.out, workers=args.workers)
        raise InvalidArgumentError(f"unknown command {args.command!r}")
    except (
        InvalidArgumentError,
        MalformedInputError,
        DomainError,
        NoRealSolutionError,
        SingularConfigurationError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except SimulationDivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
