"""Command-line front end for the calibration / gating / fidelity pipeline.

Each subcommand reads a JSON config, writes CSV (and Touchstone) outputs
plus a ``manifest.json`` recording the tool version and SHA-256 digests of
every input and output, so runs are reproducible byte for byte. Exit
codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .traces import GridError
from .touchstone import (
    TouchstoneParseError,
    read_touchstone_file,
    write_touchstone,
)
from .solcal import CalibrationError, StandardsSet, apply_correction, solve_error_model
from .timegate import (
    GATE_PRESETS,
    GateError,
    GateSpec,
    apply_gate,
    extract_insertion_loss,
    insertion_loss_db,
)
from .uncertainty import (
    ErrorBudget,
    UncertaintyError,
    UncertaintyTable,
    combine_rss,
    format_return_loss,
    interp_ecal_sigma,
    to_return_loss,
)
from .distortion import DistortionError, MismatchModel, impulse_response_taps, distort
from .qubitsim import (
    GateOp,
    QubitParams,
    SimulationError,
    sweep_length,
    sweep_return_loss,
    synth_gate_pulse,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DEFAULT_TABLE_GHZ = (1.0, 2.0, 4.0, 5.0, 8.0, 16.0)
CROSSING_THRESHOLDS = (1e-3, 1e-4)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- plumbing


def _fmt(x: float) -> str:
    """Fixed 9-significant-digit formatting for regression-stable CSVs."""
    return f"{x:.9g}"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_config(path_str: str) -> dict:
    path = Path(path_str)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return cfg


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where} is missing required key {key!r}")
    return cfg[key]


def _input_file(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    return path


def _read_trace(path: Path):
    trace = read_touchstone_file(path, expected_ports=1)
    return trace


def _write_manifest(out_dir: Path, command: str, inputs: dict[str, Path], outputs: list[Path]):
    manifest = {
        "tool": "cryocal",
        "version": __version__,
        "command": command,
        "inputs": {role: {"path": str(p), "sha256": _sha256(p)} for role, p in sorted(inputs.items())},
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows: list[list[str]]):
    lines = [",".join(header)] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")


# ------------------------------------------------------------- subcommands


def cmd_cal(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    std_cfg = _require(cfg, "standards")
    inputs: dict[str, Path] = {"config": Path(args.config)}
    traces = {}
    for std in ("short", "open", "load"):
        block = _require(std_cfg, std, "standards block")
        for role in ("defined", "measured"):
            path = _input_file(_require(block, role, f"standards.{std}"))
            inputs[f"{std}.{role}"] = path
            traces[f"{role}_{std}"] = _read_trace(path)
    standards = StandardsSet(**traces)
    model = solve_error_model(standards)

    outputs = []
    rows = []
    for f, e00, e11, de in zip(model.grid.frequencies, model.e00, model.e11, model.delta_e):
        rows.append([_fmt(f)] + [_fmt(v) for v in (e00.real, e00.imag, e11.real, e11.imag, de.real, de.imag)])
    error_csv = out / "error_model.csv"
    _write_csv(
        error_csv,
        ["freq_hz", "e00_re", "e00_im", "e11_re", "e11_im", "delta_e_re", "delta_e_im"],
        rows,
    )
    outputs.append(error_csv)

    for i, dut_path_str in enumerate(cfg.get("duts", [])):
        dut_path = _input_file(dut_path_str)
        inputs[f"dut[{i}]"] = dut_path
        corrected = apply_correction(model, _read_trace(dut_path))
        out_path = out / f"corrected_{dut_path.stem}.s1p"
        out_path.write_text(write_touchstone(corrected))
        outputs.append(out_path)

    _write_manifest(out, "cal", inputs, outputs)
    return EXIT_OK


def _gate_from_config(cfg: dict, preset_flag: str | None) -> GateSpec:
    name = preset_flag or cfg.get("preset")
    if name is not None:
        if name not in GATE_PRESETS:
            raise ConfigError(
                f"unknown gate preset {name!r}; choose from {sorted(GATE_PRESETS)}"
            )
        return GATE_PRESETS[name]
    block = _require(cfg, "gate")
    return GateSpec(
        center_s=float(_require(block, "center_ns", "gate block")) * 1e-9,
        span_s=float(_require(block, "span_ns", "gate block")) * 1e-9,
        kaiser_beta=float(block.get("kaiser_beta", 6.0)),
        splice_below_cutoff=bool(block.get("splice", False)),
    )


def cmd_gate(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    in_path = _input_file(_require(cfg, "input"))
    gate = _gate_from_config(cfg, args.preset)
    trace = _read_trace(in_path)
    gated = apply_gate(trace, gate)

    gated_path = out / f"gated_{in_path.stem}.s1p"
    gated_path.write_text(write_touchstone(gated))
    mags = np.abs(gated.values)
    rows = [
        [_fmt(f), _fmt(m), _fmt(-20.0 * math.log10(m)) if m > 0 else "inf"]
        for f, m in zip(gated.grid.frequencies, mags)
    ]
    rl_csv = out / "return_loss.csv"
    _write_csv(rl_csv, ["freq_hz", "s11_mag", "rl_db"], rows)

    _write_manifest(out, "gate", {"config": Path(args.config), "input": in_path}, [gated_path, rl_csv])
    return EXIT_OK


def cmd_extract_loss(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    in_path = _input_file(_require(cfg, "input"))
    if args.preset is None and "preset" not in cfg and "gate" not in cfg:
        cfg = dict(cfg, preset="through-short")
    gate = _gate_from_config(cfg, args.preset)
    gated = apply_gate(_read_trace(in_path), gate)
    s21 = extract_insertion_loss(gated)
    loss = insertion_loss_db(s21)
    rows = [
        [_fmt(f), _fmt(m), _fmt(ld)]
        for f, m, ld in zip(gated.grid.frequencies, s21, loss)
    ]
    loss_csv = out / "insertion_loss.csv"
    _write_csv(loss_csv, ["freq_hz", "s21_mag", "loss_db"], rows)
    _write_manifest(out, "extract-loss", {"config": Path(args.config), "input": in_path}, [loss_csv])
    return EXIT_OK


def _read_ecal_table(path: Path) -> UncertaintyTable:
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    start = 1 if lines and not lines[0].split(",")[0].lstrip("+-").replace(".", "", 1).isdigit() else 0
    levels, sigmas = [], []
    for ln in lines[start:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise ConfigError(f"{path}: expected two columns (s11_db,sigma_linear), got {ln!r}")
        levels.append(float(parts[0]))
        sigmas.append(float(parts[1]))
    return UncertaintyTable(np.asarray(levels), np.asarray(sigmas))


def cmd_uncertainty(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    inputs: dict[str, Path] = {"config": Path(args.config)}

    freqs_ghz = cfg.get("frequencies_ghz", list(DEFAULT_TABLE_GHZ))
    if not freqs_ghz:
        raise ConfigError("frequencies_ghz must be a non-empty list")

    rows_out = []
    if "rows" in cfg:
        # Direct (s11, sigma) rows, bypassing trace + table lookup.
        for row in cfg["rows"]:
            f_ghz = float(_require(row, "freq_ghz", "rows entry"))
            s11 = float(_require(row, "s11", "rows entry"))
            sigma = float(_require(row, "sigma", "rows entry"))
            rows_out.append((f_ghz, s11, sigma))
    else:
        in_path = _input_file(_require(cfg, "input"))
        inputs["input"] = in_path
        table_path = _input_file(_require(cfg, "ecal_table"))
        inputs["ecal_table"] = table_path
        trace = _read_trace(in_path)
        table = _read_ecal_table(table_path)
        sigma_var = float(_require(cfg, "sigma_switch_var"))
        sigma_rep = float(cfg.get("sigma_switch_rep", 0.0))
        include_rep = bool(cfg.get("include_rep", False))
        freqs = trace.grid.frequencies
        for f_ghz in freqs_ghz:
            f_hz = float(f_ghz) * 1e9
            idx = int(np.argmin(np.abs(freqs - f_hz)))
            if abs(freqs[idx] - f_hz) > trace.grid.step_hz:
                raise UncertaintyError(f"no grid point near {f_ghz} GHz in {in_path}")
            s11 = float(abs(trace.values[idx]))
            level_db = -20.0 * math.log10(s11)
            budget = ErrorBudget(
                sigma_ecal=interp_ecal_sigma(table, level_db),
                sigma_switch_var=sigma_var,
                sigma_switch_rep=sigma_rep,
            )
            rows_out.append((float(f_ghz), s11, combine_rss(budget, include_rep=include_rep)))

    csv_rows = []
    for f_ghz, s11, sigma in rows_out:
        res = to_return_loss(s11, sigma)
        upper = "inf" if res.lower_bound_only else _fmt(res.upper_db)
        csv_rows.append(
            [
                _fmt(f_ghz),
                _fmt(s11),
                _fmt(sigma),
                _fmt(res.rl_db),
                upper,
                _fmt(res.lower_db),
                format_return_loss(res),
            ]
        )
    table_csv = out / "return_loss_table.csv"
    _write_csv(
        table_csv,
        ["freq_ghz", "s11_linear", "sigma_rss", "rl_db", "upper_db", "lower_db", "display"],
        csv_rows,
    )
    _write_manifest(out, "uncertainty", inputs, [table_csv])
    return EXIT_OK


def _qubit_params(cfg: dict) -> QubitParams:
    block = cfg.get("qubit", {})
    return QubitParams(
        omega_q=2.0 * math.pi * float(block.get("f_q_ghz", 5.0)) * 1e9,
        dt_s=float(block.get("dt_ps", 1.0)) * 1e-12,
    )


def _mismatch_model(cfg: dict) -> MismatchModel:
    block = _require(cfg, "model")
    rl = block.get("rl_db")
    rl1 = float(block.get("rl1_db", rl if rl is not None else 15.0))
    rl2 = float(block.get("rl2_db", rl if rl is not None else 15.0))
    return MismatchModel(
        rl1_db=rl1,
        rl2_db=rl2,
        length_m=float(_require(block, "length_m", "model block")),
        v_p=float(block.get("v_p_over_c", 0.7)) * 299792458.0,
        max_reflections=int(block.get("max_reflections", 5)),
    )


def _axis(cfg: dict) -> np.ndarray:
    block = _require(cfg, "axis")
    return np.linspace(
        float(_require(block, "start", "axis block")),
        float(_require(block, "stop", "axis block")),
        int(_require(block, "count", "axis block")),
    )


def _crossing(axis: np.ndarray, dev: np.ndarray, threshold: float) -> float | None:
    """Log-interpolated axis value where a decreasing deviation crosses threshold."""
    with np.errstate(divide="ignore"):
        ld = np.log10(np.maximum(dev, 1e-300))
    lt = math.log10(threshold)
    for i in range(len(axis) - 1):
        if (ld[i] - lt) * (ld[i + 1] - lt) <= 0 and dev[i] > dev[i + 1]:
            frac = (ld[i] - lt) / (ld[i] - ld[i + 1])
            return float(axis[i] + frac * (axis[i + 1] - axis[i]))
    return None


def cmd_fidelity(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    params = _qubit_params(cfg)
    model = _mismatch_model(cfg)
    axis = _axis(cfg)
    duration_s = float(cfg.get("duration_ns", 5.0)) * 1e-9
    pairs = tuple(tuple(p) for p in cfg.get("pairs", [["X", "Y"]]))
    method = cfg.get("method", "taps")

    if args.mode == "sweep-length":
        result = sweep_length(model, axis, duration_s, params, pairs, method, args.threads)
    else:
        result = sweep_return_loss(model, axis, duration_s, params, pairs, method, args.threads)

    rows = []
    for i, value in enumerate(result.axis):
        for j, pair in enumerate(result.pairs):
            rows.append([_fmt(value), "".join(pair), _fmt(result.deviation[i, j])])
    sweep_csv = out / f"{args.mode}.csv"
    _write_csv(sweep_csv, ["axis_value", "pair", "one_minus_f"], rows)
    outputs = [sweep_csv]

    if args.mode == "sweep-rl":
        cross_rows = []
        for j, pair in enumerate(result.pairs):
            for thr in CROSSING_THRESHOLDS:
                rl = _crossing(result.axis, result.deviation[:, j], thr)
                cross_rows.append(["".join(pair), _fmt(thr), "" if rl is None else _fmt(rl)])
        cross_csv = out / "crossings.csv"
        _write_csv(cross_csv, ["pair", "threshold", "rl_db"], cross_rows)
        outputs.append(cross_csv)

    _write_manifest(out, f"fidelity {args.mode}", {"config": Path(args.config)}, outputs)
    return EXIT_OK


def cmd_pulse_synth(args) -> int:
    cfg = _load_config(args.config)
    out = _out_dir(args)
    params = _qubit_params(cfg)
    gate = GateOp(cfg.get("gate", "X"))
    duration_s = float(cfg.get("duration_ns", 5.0)) * 1e-9
    amplitude = cfg.get("amplitude")
    pulse = synth_gate_pulse(gate, duration_s, params, None if amplitude is None else float(amplitude))
    if "model" in cfg:
        pulse = distort(pulse, impulse_response_taps(_mismatch_model(cfg)))
    rows = [[_fmt(t), _fmt(v)] for t, v in zip(pulse.times, pulse.samples)]
    pulse_csv = out / "pulse.csv"
    _write_csv(pulse_csv, ["time_s", "amplitude"], rows)
    _write_manifest(out, "pulse synth", {"config": Path(args.config)}, [pulse_csv])
    return EXIT_OK


# ------------------------------------------------------------------ driver


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryocal",
        description="S-parameter calibration, time gating, uncertainty, and qubit fidelity pipeline",
    )
    parser.add_argument("--version", action="version", version=f"cryocal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset=False, threads=False):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        if preset:
            p.add_argument("--preset", default=None, help="gate preset name (overrides config)")
        if threads:
            p.add_argument("--threads", type=int, default=1, help="parallel sweep workers")

    common(sub.add_parser("cal", help="solve SOL error model and correct DUT traces"))
    common(sub.add_parser("gate", help="apply a time gate to a reflection trace"), preset=True)
    common(sub.add_parser("extract-loss", help="gated insertion loss from a shorted-line reflection"), preset=True)
    common(sub.add_parser("uncertainty", help="return-loss table with RSS error bars"))

    fid = sub.add_parser("fidelity", help="gate-fidelity deviation sweeps")
    fid_sub = fid.add_subparsers(dest="mode", required=True)
    common(fid_sub.add_parser("sweep-length", help="1-F versus line length"), threads=True)
    common(fid_sub.add_parser("sweep-rl", help="1-F versus return loss"), threads=True)

    pulse = sub.add_parser("pulse", help="pulse utilities")
    pulse_sub = pulse.add_subparsers(dest="mode", required=True)
    common(pulse_sub.add_parser("synth", help="synthesize a calibrated (optionally distorted) gate pulse"))

    return parser


_HANDLERS = {
    "cal": cmd_cal,
    "gate": cmd_gate,
    "extract-loss": cmd_extract_loss,
    "uncertainty": cmd_uncertainty,
    "fidelity": cmd_fidelity,
    "pulse": cmd_pulse_synth,
}

_CONFIG_ERRORS = (ConfigError,)
_DATA_ERRORS = (TouchstoneParseError, GridError, GateError, UncertaintyError, DistortionError, OSError)
_NUMERIC_ERRORS = (CalibrationError, SimulationError, FloatingPointError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except _CONFIG_ERRORS as exc:
        print(f"cryocal: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"cryocal: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"cryocal: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
