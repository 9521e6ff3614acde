"""Flat key-value config files and the CSV schemas shared by the tools.

Config files are UTF-8 text, one ``key = value`` per line, ``#`` comments
allowed.  Keys are exactly the dataclass field names.  All CSVs are UTF-8
with a mandatory header row, ``.`` decimal separator and ``\\n`` newlines.
"""

from __future__ import annotations

import csv
import math
from dataclasses import fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .drivetrain import RobotParams
from .errors import ConfigKeyError, MalformedInputError
from .estimator import ForceSample, MassEstimate, SensorSample, SolutionBranch
from .kinematics import EulerAngles, PlanarDisplacement
from .simulator import SimConfig, SimLog, TruthSample

LOG_HEADER = ["t", "theta_m", "omega_m", "ax", "ay", "az", "gamma", "beta", "alpha"]
TORQUE_HEADER = ["t", "tau_m"]
ESTIMATE_HEADER = ["t", "d_a", "theta_n", "d_b", "alpha_g", "branch"]
FORCE_HEADER = ["t", "F_n"]
TRUTH_HEADER = ["t", "d_b_true", "d_a_true", "theta_n_true", "F_true"]
TRAJECTORY_HEADER = ["t", "x", "y"]

_SIM_ONLY_KEYS = ("dt", "duration", "seed", "sensor_noise", "voltage_profile")
_SWEEP_ONLY_KEYS = ("mass_values", "stiffness_values", "repetitions")


# ---------------------------------------------------------------------------
# flat key-value configs

def read_flat_config(path: str | Path) -> dict[str, str]:
    """Parse a flat key-value file into a string mapping."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigKeyError(f"line {lineno} is not a 'key = value' pair: {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigKeyError(f"line {lineno} has an empty key")
        if key in out:
            raise ConfigKeyError(f"duplicate key {key!r} at line {lineno}")
        out[key] = value.strip()
    return out


def _parse_value(key: str, raw: str, target_type: type):
    try:
        if target_type is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if target_type is int:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigKeyError(f"key {key!r}: cannot parse {raw!r} as {target_type.__name__}") from exc


def _parse_voltage_profile(raw: str) -> tuple[tuple[float, float], ...]:
    points = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigKeyError(
                f"key 'voltage_profile': expected 't:volts' pairs, got {chunk!r}"
            )
        t_str, v_str = chunk.split(":", 1)
        try:
            points.append((float(t_str), float(v_str)))
        except ValueError as exc:
            raise ConfigKeyError(f"key 'voltage_profile': cannot parse {chunk!r}") from exc
    if not points:
        raise ConfigKeyError("key 'voltage_profile': no breakpoints given")
    return tuple(points)


def _parse_float_list(key: str, raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigKeyError(f"key {key!r}: cannot parse {raw!r} as a float list") from exc
    if not values:
        raise ConfigKeyError(f"key {key!r}: empty list")
    return values


def robot_params_from_mapping(mapping: dict[str, str]) -> RobotParams:
    """Build RobotParams from already-parsed key/value strings.

    Unknown keys raise; missing keys take their defaults.
    """
    kwargs = {}
    types = {f.name: f.type for f in fields(RobotParams)}
    for key, raw in mapping.items():
        if key not in types:
            raise ConfigKeyError(f"unknown robot parameter key {key!r}")
        annotation = types[key]
        if annotation == "bool":
            kwargs[key] = _parse_value(key, raw, bool)
        elif annotation == "int":
            kwargs[key] = _parse_value(key, raw, int)
        else:
            kwargs[key] = _parse_value(key, raw, float)
    params = RobotParams(**kwargs)
    params.validate()
    return params


def load_robot_params(path: str | Path) -> RobotParams:
    return robot_params_from_mapping(read_flat_config(path))


def save_robot_params(params: RobotParams, path: str | Path) -> None:
    lines = []
    for f in fields(RobotParams):
        value = getattr(params, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = repr(value)
        lines.append(f"{f.name} = {text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _split_sim_mapping(
    mapping: dict[str, str], extra_keys: tuple[str, ...]
) -> tuple[dict[str, str], dict[str, str]]:
    param_names = set(RobotParams.field_names())
    params_map: dict[str, str] = {}
    other: dict[str, str] = {}
    for key, raw in mapping.items():
        if key in param_names:
            params_map[key] = raw
        elif key in extra_keys:
            other[key] = raw
        else:
            raise ConfigKeyError(f"unknown config key {key!r}")
    return params_map, other


def sim_config_from_mapping(mapping: dict[str, str]) -> SimConfig:
    """Build a SimConfig from a flat mapping; dt and duration are required."""
    params_map, sim_map = _split_sim_mapping(mapping, _SIM_ONLY_KEYS)
    for required in ("dt", "duration"):
        if required not in sim_map:
            raise ConfigKeyError(f"missing required key {required!r}")
    params = robot_params_from_mapping(params_map)
    kwargs = {
        "dt": _parse_value("dt", sim_map["dt"], float),
        "duration": _parse_value("duration", sim_map["duration"], float),
    }
    if "seed" in sim_map:
        kwargs["seed"] = _parse_value("seed", sim_map["seed"], int)
    if "sensor_noise" in sim_map:
        kwargs["sensor_noise"] = _parse_value("sensor_noise", sim_map["sensor_noise"], float)
    if "voltage_profile" in sim_map:
        kwargs["voltage_profile"] = _parse_voltage_profile(sim_map["voltage_profile"])
    config = SimConfig(params=params, **kwargs)
    config.validate()
    return config


def load_sim_config(path: str | Path) -> SimConfig:
    return sim_config_from_mapping(read_flat_config(path))


def save_sim_config(config: SimConfig, path: str | Path) -> None:
    lines = []
    for f in fields(RobotParams):
        value = getattr(config.params, f.name)
        text = ("true" if value else "false") if isinstance(value, bool) else repr(value)
        lines.append(f"{f.name} = {text}")
    lines.append(f"dt = {config.dt!r}")
    lines.append(f"duration = {config.duration!r}")
    lines.append(f"seed = {config.seed!r}")
    lines.append(f"sensor_noise = {config.sensor_noise!r}")
    profile = ",".join(f"{t!r}:{v!r}" for t, v in config.voltage_profile)
    lines.append(f"voltage_profile = {profile}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sweep_mappings_from_config(
    mapping: dict[str, str],
) -> tuple[SimConfig, tuple[float, ...], tuple[float, ...], int]:
    """Split a sweep-spec mapping into (base config, masses, stiffnesses, reps)."""
    sweep_map = {k: v for k, v in mapping.items() if k in _SWEEP_ONLY_KEYS}
    base_map = {k: v for k, v in mapping.items() if k not in _SWEEP_ONLY_KEYS}
    base = sim_config_from_mapping(base_map)
    masses = (
        _parse_float_list("mass_values", sweep_map["mass_values"])
        if "mass_values" in sweep_map
        else (0.020, 0.035, 0.050, 0.070)
    )
    stiffnesses = (
        _parse_float_list("stiffness_values", sweep_map["stiffness_values"])
        if "stiffness_values" in sweep_map
        else (160.0, 200.0, 300.0)
    )
    repetitions = (
        _parse_value("repetitions", sweep_map["repetitions"], int)
        if "repetitions" in sweep_map
        else 1
    )
    return base, masses, stiffnesses, repetitions


# ---------------------------------------------------------------------------
# CSV helpers

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path: str | Path, header: Sequence[str]) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise MalformedInputError(f"{path}: empty file, expected header {','.join(header)}")
        if got != list(header):
            raise MalformedInputError(
                f"{path}: bad header {','.join(got)!r}, expected {','.join(header)!r}"
            )
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedInputError(
                    f"{path}: line {i} has {len(row)} columns, expected {len(header)}"
                )
            rows.append(row)
        return rows


def _parse_float_cell(path, line, column, raw) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise MalformedInputError(
            f"{path}: line {line}, column {column!r}: cannot parse {raw!r}"
        ) from exc
    if not math.isfinite(value):
        raise MalformedInputError(f"{path}: line {line}, column {column!r}: non-finite value")
    return value


def write_log_csv(path: str | Path, samples: Sequence[SensorSample]) -> None:
    _write_csv(
        path,
        LOG_HEADER,
        (
            [
                _fmt(s.t), _fmt(s.theta_m), _fmt(s.omega_m),
                _fmt(s.accel[0]), _fmt(s.accel[1]), _fmt(s.accel[2]),
                _fmt(s.euler.gamma), _fmt(s.euler.beta), _fmt(s.euler.alpha),
            ]
            for s in samples
        ),
    )


def read_log_csv(path: str | Path) -> list[SensorSample]:
    samples = []
    for i, row in enumerate(_read_csv(path, LOG_HEADER), start=2):
        vals = [_parse_float_cell(path, i, LOG_HEADER[j], row[j]) for j in range(9)]
        sample = SensorSample(
            t=vals[0],
            theta_m=vals[1],
            omega_m=vals[2],
            accel=np.array(vals[3:6]),
            euler=EulerAngles(vals[6], vals[7], vals[8]),
        )
        sample.validate()
        samples.append(sample)
    return samples


def write_torque_csv(path: str | Path, series: Sequence[tuple[float, float]]) -> None:
    _write_csv(path, TORQUE_HEADER, ([_fmt(t), _fmt(tau)] for t, tau in series))


def read_torque_csv(path: str | Path) -> list[tuple[float, float]]:
    return [
        (
            _parse_float_cell(path, i, "t", row[0]),
            _parse_float_cell(path, i, "tau_m", row[1]),
        )
        for i, row in enumerate(_read_csv(path, TORQUE_HEADER), start=2)
    ]


def write_truth_csv(path: str | Path, truth: Sequence[TruthSample]) -> None:
    _write_csv(
        path,
        TRUTH_HEADER,
        (
            [_fmt(r.t), _fmt(r.d_b), _fmt(r.d_a), _fmt(r.theta_n), _fmt(r.f_total)]
            for r in truth
        ),
    )


def read_truth_csv(path: str | Path) -> list[TruthSample]:
    return [
        TruthSample(
            t=_parse_float_cell(path, i, "t", row[0]),
            d_b=_parse_float_cell(path, i, "d_b_true", row[1]),
            d_a=_parse_float_cell(path, i, "d_a_true", row[2]),
            theta_n=_parse_float_cell(path, i, "theta_n_true", row[3]),
            f_total=_parse_float_cell(path, i, "F_true", row[4]),
        )
        for i, row in enumerate(_read_csv(path, TRUTH_HEADER), start=2)
    ]


def write_estimates_csv(path: str | Path, estimates: Sequence[MassEstimate]) -> None:
    _write_csv(
        path,
        ESTIMATE_HEADER,
        (
            [
                _fmt(e.t), _fmt(e.d_a), _fmt(e.theta_n), _fmt(e.d_b),
                _fmt(e.alpha_g), e.branch.value,
            ]
            for e in estimates
        ),
    )


def read_estimates_csv(path: str | Path) -> list[MassEstimate]:
    out = []
    for i, row in enumerate(_read_csv(path, ESTIMATE_HEADER), start=2):
        try:
            branch = SolutionBranch(row[5])
        except ValueError as exc:
            raise MalformedInputError(
                f"{path}: line {i}, column 'branch': unknown value {row[5]!r}"
            ) from exc
        out.append(
            MassEstimate(
                t=_parse_float_cell(path, i, "t", row[0]),
                d_a=_parse_float_cell(path, i, "d_a", row[1]),
                theta_n=_parse_float_cell(path, i, "theta_n", row[2]),
                d_b=_parse_float_cell(path, i, "d_b", row[3]),
                alpha_g=_parse_float_cell(path, i, "alpha_g", row[4]),
                motor_accel=float("nan"),
                branch=branch,
            )
        )
    return out


def write_force_csv(path: str | Path, forces: Sequence[ForceSample]) -> None:
    _write_csv(path, FORCE_HEADER, ([_fmt(f.t), _fmt(f.f_n)] for f in forces))


def write_trajectory_csv(
    path: str | Path, trajectory: Sequence[tuple[float, PlanarDisplacement]]
) -> None:
    _write_csv(path, TRAJECTORY_HEADER, ([_fmt(t), _fmt(d.x), _fmt(d.y)] for t, d in trajectory))


def write_sim_outputs(log: SimLog, out_dir: str | Path) -> None:
    """Write the standard simulator outputs: log, truth and torque CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_log_csv(out / "log.csv", log.samples)
    write_truth_csv(out / "truth.csv", log.truth)
    write_torque_csv(out / "torque.csv", log.torque)
