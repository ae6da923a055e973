"""Command-line entry point: ``nvflux <experiment> [--config FILE] ...``.

Exit codes: 0 success, 1 configuration error, 2 calibration residual failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from . import experiments as ex
from .circuit import evolution_circuit, entangling_circuit, extended_circuit
from .errors import CalibrationFailed, ConfigInvalid, NVFluxError
from .qasm import export_qasm

COMMANDS = {
    "relaxation": "relaxation",
    "coherence": "coherence_evolution",
    "fidelity": "fidelity",
    "steps-sweep": "steps_sweep",
    "scaling": "scaling",
}

PRESET_CIRCUITS = {"evolution": evolution_circuit, "entangling": entangling_circuit, "extended": extended_circuit}


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved for calibration
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file, or a manifest.json to replay")
    p.add_argument("--seed", type=int, help="base seed (trajectory j uses seed + j)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--trajectories", type=int, help="Monte-Carlo trajectories per point")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--workers", type=int, default=1, help="threads for trajectory chunks")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nvflux", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(sub.add_parser(name, help=f"run the {name} experiment"))
    cal = sub.add_parser("calibrate", help="fit noise magnitudes to target summaries")
    _common(cal)
    cal.add_argument("--budget", type=int, help="maximum simulator evaluations")
    q = sub.add_parser("export-qasm", help="write a preset circuit as OpenQASM 2.0")
    _common(q)
    q.add_argument("--preset", choices=sorted(PRESET_CIRCUITS), default="entangling")
    q.add_argument("--time", type=float, default=0.05, help="evolution time in us")
    q.add_argument("--steps", type=int, help="Trotter steps (default: trotter.steps)")
    return ap


def _overrides(args, experiment: str | None) -> dict:
    raw: dict = dict(cfgmod.load(args.config)) if args.config else {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigInvalid(f"--set expects KEY=VALUE, got {item!r}")
        raw[key.strip()] = value.strip()
    if experiment is not None:
        if raw.get("experiment", experiment) != experiment:
            raise ConfigInvalid(f"config is for {raw['experiment']!r}, command runs {experiment!r}")
        raw["experiment"] = experiment
    if args.seed is not None:
        raw["noise.seed"] = args.seed
    if args.trajectories is not None:
        raw["noise.trajectories"] = args.trajectories
    if args.out is not None:
        raw["output.path"] = args.out
    return raw


def _replayed_provenance(args, prov: dict) -> dict:
    """Keep the provenance recorded in a replayed manifest for keys the flags did not touch."""
    if not (args.config and args.config.endswith(".json")):
        return prov
    recorded = json.loads(Path(args.config).read_text()).get("provenance", {})
    touched = {k.partition("=")[0].strip() for k in args.set}
    touched |= {k for k, flag in (("noise.seed", args.seed), ("noise.trajectories", args.trajectories),
                                  ("output.path", args.out)) if flag is not None}
    return {k: (recorded.get(k, v) if k not in touched else v) for k, v in prov.items()}


def _run(args) -> int:
    cfg, prov = cfgmod.resolve(_overrides(args, COMMANDS[args.command]))
    prov = _replayed_provenance(args, prov)
    result = ex.run_experiment(cfg, prov, workers=args.workers)
    for p in ex.write_result(result, cfg["output.path"]):
        print(p)
    return 0


def _calibrate(args) -> int:
    raw = _overrides(args, None)
    raw.setdefault("experiment", "scaling")
    cfg, prov = cfgmod.resolve(raw)
    # start from zero noise unless the user set a starting point
    for key in ("noise.ou.sigma_b", "noise.gate.p1", "noise.gate.p2"):
        if prov[key] == "calibrated":
            cfg[key] = 0.0
    targets = ex.parse_targets(cfg["calibrate.targets"])
    out = Path(cfg["output.path"])
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    try:
        fitted, report = ex.calibrate_noise(
            cfg, targets, cfg["calibrate.free"],
            budget=args.budget or cfg["calibrate.budget"],
            trajectories=cfg["calibrate.trajectories"],
            tolerance=cfg["calibrate.tolerance"],
        )
    except CalibrationFailed as exc:
        report, fitted, status = exc.report, exc.report["fitted"], 2
        print(f"calibration failed: {exc}", file=sys.stderr)
    (out / "calibration.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "calibrated.conf").write_text(cfgmod.to_text(fitted))
    print(json.dumps(report["relative_residuals"], sort_keys=True))
    print(out / "calibration.json")
    return status


def _export(args) -> int:
    cfg, _ = cfgmod.resolve(_overrides(args, None))
    params = ex.hamiltonian_params(cfg, 3 if args.preset == "extended" else 1)
    c = PRESET_CIRCUITS[args.preset](params, args.time, args.steps or cfg["trotter.steps"])
    out = Path(cfg["output.path"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.preset}.qasm"
    path.write_text(export_qasm(c))
    print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"calibrate": _calibrate, "export-qasm": _export}.get(args.command, _run)
    try:
        return handler(args)
    except (ConfigInvalid, NVFluxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
