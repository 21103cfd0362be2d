"""Command-line front end.

Subcommands: ``ber`` (BER vs SNR sweep), ``snr-target`` (SNR required for
a target BER per antenna count), ``zpdf`` (histograms of the column
cross-correlation statistic), ``verify`` (pass/fail checks of the
fixed-point, region-uniqueness, and oracle-agreement properties).

Option resolution order: command-line flag, then ``LASMIMO_*`` environment
variable, then config file (``--config``, JSON or flat ``key=value``
lines; a manifest from a previous run also works), then built-in default.
Exit codes: 0 success, 1 verification failure, 2 usage or config error.

Each run writes ``<name>.csv`` / ``<name>.json`` data files (CSV floats
carry 17 significant digits; both are byte-reproducible for a given
config and seed, independent of ``--workers``) plus ``<name>.manifest.json``
recording the resolved config, seed, timestamps, and output hashes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, asymptotics, harness

ENV_PREFIX = "LASMIMO_"

# Default operating point for the oracle-agreement trend; chosen so the
# smallest system agrees with the oracle 80-99% of the time.
DEFAULT_AGREEMENT_SNR_DB = 10.0
DEFAULT_LEMMA2_SNR_DB = 6.0
DEFAULT_FIXEDPOINT_SNR_DB = 8.0

VERIFY_SUITES = ("lemma2", "theorem2", "fixedpoint")


class ConfigError(Exception):
    """Unusable option set; reported on stderr with exit code 2."""


def _parse_float_list(value) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(tok) for tok in str(value).split(",") if tok.strip()]


def _parse_int_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(tok) for tok in str(value).split(",") if tok.strip()]


_PARSERS = {
    "seed": int,
    "workers": int,
    "out_dir": str,
    "name": str,
    "ntx": int,
    "qam": int,
    "init": str,
    "snr_grid": _parse_float_list,
    "trials": int,
    "min_errors": int,
    "target_ber": float,
    "ntx_list": _parse_int_list,
    "bins": int,
    "suite": str,
    "snr": float,
}

_COMMON = {
    "seed": (0, False),
    "workers": (1, False),
    "out_dir": (".", False),
    "name": (None, False),
}

_SPECS: dict[str, dict[str, tuple[object, bool]]] = {
    "ber": {
        "ntx": (None, True),
        "qam": (4, False),
        "init": ("mmse", False),
        "snr_grid": (None, True),
        "trials": (100_000, False),
        "min_errors": (100, False),
    },
    "snr-target": {
        "ntx_list": (None, True),
        "target_ber": (None, True),
        "qam": (4, False),
        "init": ("mmse", False),
        "snr_grid": ([0.0, 25.0], False),
        "trials": (500_000, False),
        "min_errors": (100, False),
    },
    "zpdf": {
        "ntx_list": (None, True),
        "trials": (2000, False),
        "bins": (200, False),
    },
    "verify": {
        "suite": (None, True),
        "ntx": (None, False),
        "ntx_list": ([2, 4, 6, 8], False),
        "trials": (1000, False),
        "snr": (None, False),
        "qam": (4, False),
        "init": ("mmse", False),
    },
}

_DEFAULT_NAMES = {"ber": "ber", "snr-target": "snr_target", "zpdf": "zpdf", "verify": "verify"}

# Options that steer execution but not the numbers; kept out of the data
# files so reruns are byte-identical regardless of workers or location.
_EXECUTION_KEYS = ("out_dir", "name", "workers")


def _data_config(opts: dict) -> dict:
    return {k: v for k, v in opts.items() if k not in _EXECUTION_KEYS}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lasmimo",
        description="Monte Carlo experiments for likelihood-ascent MIMO detection.",
    )
    parser.add_argument("--version", action="version", version=f"lasmimo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in _SPECS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="JSON or key=value config file (a manifest works too)")
        for key in list(spec) + list(_COMMON):
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line (expected key=value): {line!r}")
            key, _, value = line.partition("=")
            data[key.strip()] = value.strip()
        return data
    if not isinstance(data, dict):
        raise ConfigError("JSON config must be an object")
    if isinstance(data.get("config"), dict):  # manifest from a previous run
        data = data["config"]
    return data


def _resolve(command: str, args: argparse.Namespace) -> dict:
    spec = {**_SPECS[command], **_COMMON}
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for key, (default, required) in spec.items():
        value = getattr(args, key, None)
        if value is None:
            value = os.environ.get(ENV_PREFIX + key.upper())
        if value is None and key in file_cfg:
            value = file_cfg[key]
        if value is None:
            value = default
        if value is None:
            if required:
                flag = "--" + key.replace("_", "-")
                raise ConfigError(f"missing required option {flag} (or config key {key!r})")
            resolved[key] = None
            continue
        try:
            resolved[key] = _PARSERS[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    if resolved["workers"] < 1:
        raise ConfigError("workers must be at least 1")
    if resolved["name"] is None:
        resolved["name"] = _DEFAULT_NAMES[command]
    return resolved


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_manifest(out_dir: Path, name: str, command: str, opts: dict, started: str, files: list[Path]) -> None:
    manifest = {
        "tool": "lasmimo",
        "version": __version__,
        "command": command,
        "master_seed": opts["seed"],
        "config": dict(opts),
        "started_utc": started,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": {
            f.name: "sha256:" + hashlib.sha256(f.read_bytes()).hexdigest() for f in files
        },
    }
    _write_json(out_dir / f"{name}.manifest.json", manifest)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _out_dir(opts) -> Path:
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _experiment_config(opts) -> harness.ExperimentConfig:
    try:
        return harness.ExperimentConfig(
            n_tx=opts.get("ntx") or (opts.get("ntx_list") or [None])[0],
            qam_order=opts["qam"],
            snr_grid_db=tuple(opts["snr_grid"]),
            initializer=opts["init"],
            target_ber=opts.get("target_ber"),
            min_bit_errors=opts["min_errors"],
            max_trials=opts["trials"],
            master_seed=opts["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_ber(opts: dict) -> int:
    started = _utcnow()
    cfg = _experiment_config(opts)
    points = harness.ber_sweep(cfg, workers=opts["workers"])
    out = _out_dir(opts)
    name = opts["name"]
    csv_path = out / f"{name}.csv"
    json_path = out / f"{name}.json"
    _write_csv(
        csv_path,
        ["snr_db", "ber", "bit_errors", "bits", "trials"],
        [(p.snr_db, p.ber, p.bit_errors, p.bits_simulated, p.trials) for p in points],
    )
    _write_json(
        json_path,
        {
            "command": "ber",
            "config": _data_config(opts),
            "points": [
                {
                    "snr_db": p.snr_db,
                    "ber": p.ber,
                    "bit_errors": p.bit_errors,
                    "bits": p.bits_simulated,
                    "trials": p.trials,
                    "resolved": p.resolved,
                }
                for p in points
            ],
        },
    )
    _write_manifest(out, name, "ber", opts, started, [csv_path, json_path])
    return 0


def _cmd_snr_target(opts: dict) -> int:
    started = _utcnow()
    base = _experiment_config(opts)
    points = [
        harness.snr_for_target_ber(base, n_tx=n, workers=opts["workers"])
        for n in opts["ntx_list"]
    ]
    out = _out_dir(opts)
    name = opts["name"]
    csv_path = out / f"{name}.csv"
    json_path = out / f"{name}.json"
    header = ["n_tx", "snr_required_db", "achieved_ber", "reference_siso_db", "gap_db", "status"]
    rows = [
        (p.n_tx, p.snr_required_db, p.achieved_ber, p.reference_siso_db, p.gap_db, p.status)
        for p in points
    ]
    _write_csv(csv_path, header, rows)
    _write_json(
        json_path,
        {
            "command": "snr-target",
            "config": _data_config(opts),
            "points": [
                {
                    "n_tx": p.n_tx,
                    "snr_required_db": p.snr_required_db,
                    "achieved_ber": p.achieved_ber,
                    "reference_siso_db": p.reference_siso_db,
                    "gap_db": p.gap_db,
                    "status": p.status,
                    "bracket_lo_db": p.bracket_lo_db,
                    "bracket_hi_db": p.bracket_hi_db,
                }
                for p in points
            ],
        },
    )
    _write_manifest(out, name, "snr-target", opts, started, [csv_path, json_path])
    return 0


def _cmd_zpdf(opts: dict) -> int:
    started = _utcnow()
    try:
        histograms = asymptotics.z_pdf_experiment(
            opts["ntx_list"], opts["trials"], bins=opts["bins"], master_seed=opts["seed"]
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _out_dir(opts)
    name = opts["name"]
    files = []
    summary = []
    for hist in histograms:
        path = out / f"{name}_nt{hist.n_tx}.csv"
        rows = [
            (float(lo), float(hi), float(dens))
            for lo, hi, dens in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.density)
        ]
        _write_csv(path, ["bin_lo", "bin_hi", "density"], rows)
        files.append(path)
        summary.append(
            {
                "n_tx": hist.n_tx,
                "n": hist.n,
                "trials": hist.trials,
                "sample_std": hist.sample_std,
                "frac_near_zero": hist.frac_near_zero,
                "file": path.name,
            }
        )
    json_path = out / f"{name}.json"
    _write_json(
        json_path,
        {"command": "zpdf", "config": _data_config(opts), "histograms": summary},
    )
    files.append(json_path)
    _write_manifest(out, name, "zpdf", opts, started, files)
    return 0


def _verify_lemma2(opts: dict) -> tuple[bool, dict]:
    n_tx = opts["ntx"] or 2
    snr = opts["snr"] if opts["snr"] is not None else DEFAULT_LEMMA2_SNR_DB
    report = asymptotics.ml_region_uniqueness_experiment(
        opts["trials"], snr, opts["seed"], n_tx=n_tx, qam_order=opts["qam"]
    )
    detail = {
        "n_tx": n_tx,
        "snr_db": snr,
        "draws": report.draws,
        "zero_member_draws": report.zero_member_draws,
        "multi_member_draws": report.multi_member_draws,
        "ml_mismatch_draws": report.ml_mismatch_draws,
        "violations": report.violations,
    }
    return report.ok, detail


def _verify_theorem2(opts: dict) -> tuple[bool, dict]:
    snr = opts["snr"] if opts["snr"] is not None else DEFAULT_AGREEMENT_SNR_DB
    results = [
        harness.las_vs_ml_agreement(
            n, snr, opts["trials"], opts["seed"], qam_order=opts["qam"], initializer=opts["init"]
        )
        for n in opts["ntx_list"]
    ]
    rates = [r.vector_match_rate for r in results]
    ok, inversions = harness.trend_non_decreasing(rates, opts["trials"])
    detail = {
        "snr_db": snr,
        "points": [
            {
                "n_tx": r.n_tx,
                "vector_match_rate": r.vector_match_rate,
                "bit_match_rate": r.bit_match_rate,
                "trials": r.trials,
            }
            for r in results
        ],
        "inversions": inversions,
    }
    return ok, detail


def _verify_fixedpoint(opts: dict) -> tuple[bool, dict]:
    n_tx = opts["ntx"] or 16
    snr = opts["snr"] if opts["snr"] is not None else DEFAULT_FIXEDPOINT_SNR_DB
    report = harness.fixed_point_suite(
        n_tx, snr, opts["trials"], opts["seed"], qam_order=opts["qam"], initializer=opts["init"]
    )
    ok = report.margin_violations == 0 and report.descent_violations == 0
    detail = {
        "n_tx": n_tx,
        "snr_db": snr,
        "runs": report.runs,
        "min_margin": None if math.isinf(report.min_margin) else report.min_margin,
        "margin_violations": report.margin_violations,
        "descent_violations": report.descent_violations,
        "clip_events": report.clip_events,
        "max_iterations": report.max_iterations,
    }
    return ok, detail


def _cmd_verify(opts: dict) -> int:
    started = _utcnow()
    suite = opts["suite"].lower()
    runners = {
        "lemma2": _verify_lemma2,
        "theorem2": _verify_theorem2,
        "fixedpoint": _verify_fixedpoint,
    }
    if suite not in runners:
        raise ConfigError(f"unknown suite {suite!r}; expected one of {VERIFY_SUITES}")
    passed, detail = runners[suite](opts)
    out = _out_dir(opts)
    name = opts["name"]
    json_path = out / f"{name}.json"
    _write_json(
        json_path,
        {
            "command": "verify",
            "suite": suite,
            "passed": passed,
            "config": _data_config(opts),
            "detail": detail,
        },
    )
    _write_manifest(out, name, "verify", opts, started, [json_path])
    print(f"verify {suite}: {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


_COMMANDS = {
    "ber": _cmd_ber,
    "snr-target": _cmd_snr_target,
    "zpdf": _cmd_zpdf,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args.command, args)
        return _COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"lasmimo: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
