"""Virtual experiments on the NV/flux-qubit model, noise calibration and outputs.

Every run function takes the typed dict produced by :func:`nvflux.config.resolve`
and returns an :class:`ExperimentResult`. Time grids are given in
``grid.units``; circuits are built in microseconds.

Circuits that must be the identity without noise (relaxation, coherence,
scaling) evolve for half the window under the Trotterized Hamiltonian and
then apply its exact inverse, so the noise-free observable is 1 at every time.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from . import config as cfgmod
from .circuit import (
    ROLES_3Q,
    Circuit,
    Gate,
    build_entangling_circuit,
    build_extended_circuit,
    extended_block,
    evolution_circuit,
    run_circuit,
    sample_counts,
)
from .decoupling import DDSequence, interleave
from .errors import CalibrationFailed, ConfigInvalid
from .hamiltonian import HamiltonianParams
from .linalg import basis_state
from .noise import GateNoiseParams, NoiseModel, OUParams, StaticBathParams, average, monte_carlo_trajectories
from .observables import (
    Curve,
    coherence_samples,
    coherence_time,
    fidelity_samples,
    population_samples,
    trajectory_stats,
)

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    curves: dict[str, Curve]
    manifest: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# config -> model objects


def hamiltonian_params(cfg: dict, n_nv: int | None = None) -> HamiltonianParams:
    return HamiltonianParams(
        d_zfs=cfg["hamiltonian.d_zfs"],
        gamma_e=cfg["hamiltonian.gamma_e"],
        gamma_n=cfg["hamiltonian.gamma_n"],
        b0=cfg["hamiltonian.b0"],
        q_quad=cfg["hamiltonian.q_quad"],
        j_c=cfg["hamiltonian.j_c"],
        j_n=cfg["hamiltonian.j_n"],
        delta=cfg["hamiltonian.delta"],
        g_f=cfg["hamiltonian.g_f"],
        n_nv=n_nv if n_nv is not None else cfg["hamiltonian.n_nv"],
    )


def _resolve_roles(c: Circuit, roles: list[str]) -> list[int]:
    qubits: set[int] = set()
    for r in roles:
        qubits.update(c.roles_of(r))
    return sorted(qubits)


def noise_model(cfg: dict, c: Circuit, trajectories: int | None = None, seed: int | None = None) -> NoiseModel:
    """Bind role-based noise settings to the qubits of ``c``."""
    ou = {}
    if cfg["noise.ou.sigma_b"] > 0:
        p = OUParams(cfg["noise.ou.tau_c"], cfg["noise.ou.sigma_b"], cfg["noise.ou.dt"])
        ou = {q: p for q in _resolve_roles(c, cfg["noise.ou.roles"])}
    static = {}
    if cfg["noise.static.sigma"] > 0:
        s = StaticBathParams(cfg["noise.static.sigma"])
        static = {q: s for q in _resolve_roles(c, cfg["noise.static.roles"])}
    t1 = cfg["noise.gate.t1"] or None
    gate = GateNoiseParams(cfg["noise.gate.p1"], cfg["noise.gate.p2"], t1)
    return NoiseModel(
        ou=ou,
        static=static,
        gate=gate if gate.active else None,
        n_trajectories=trajectories or cfg["noise.trajectories"],
        base_seed=cfg["noise.seed"] if seed is None else seed,
    )


def noise_disabled(cfg: dict) -> dict:
    out = dict(cfg)
    out.update({"noise.ou.sigma_b": 0.0, "noise.static.sigma": 0.0, "noise.gate.p1": 0.0,
                "noise.gate.p2": 0.0, "noise.gate.t1": 0.0})
    return out


def time_grid(cfg: dict) -> np.ndarray:
    return np.linspace(cfg["grid.start"], cfg["grid.stop"], cfg["grid.points"])


def _to_us(cfg: dict, t: float) -> float:
    return float(t) * cfgmod.UNITS_US[cfg["grid.units"]]


def _with_dd(cfg: dict, c: Circuit, step_us: float, window_us: float) -> Circuit:
    kind = cfg["dd.kind"]
    if kind == "none" or window_us <= 0:
        return c
    n = cfg["dd.n_pulses"] or (1 if kind == "echo" else 4)
    window = cfg["dd.window"] or window_us
    window = min(window, window_us)
    targets = c.roles_of(cfg["dd.role"])
    if not targets:
        raise ConfigInvalid(f"dd.role {cfg['dd.role']!r} not present in this register")
    return interleave(c, DDSequence(kind, n, window), targets[0], step_us)


def _echo_block(u1: Circuit) -> list[Gate]:
    """``u1`` followed by its exact inverse."""
    return list(u1.gates) + list(u1.inverse().gates)


# ---------------------------------------------------------------------------
# circuits


def relaxation_circuit(params: HamiltonianParams, prep: str, t_us: float, steps: int) -> Circuit:
    u1 = evolution_circuit(params, t_us / 2, steps)
    preps = {
        "ms0": [],
        "ms+1": [Gate("X", (0,))],
        "ms-1": [Gate("U3", (0,), (math.pi, math.pi / 2, math.pi / 2))],
    }
    gates = preps[prep] + _echo_block(u1) + [Gate("MEASURE_Z", (0,))]
    return Circuit(3, gates, dict(ROLES_3Q))


def coherence_circuit(params: HamiltonianParams, t_us: float, steps: int) -> Circuit:
    """Entangling circuit with ``U3 = U1^-1`` and the fan-out undone before readout."""
    ent = build_entangling_circuit(3, evolution_circuit(params, t_us / 2, steps), include_inverse=True)
    body = [g for g in ent.gates if g.kind != "MEASURE_Z"]
    body += [Gate("CNOT", (0, 2)), Gate("CNOT", (0, 1)), Gate("MEASURE_Z", (0,))]
    return Circuit(3, body, ent.qubit_roles, ent.global_phase)


def fidelity_circuit(params: HamiltonianParams, t_us: float, steps: int) -> Circuit:
    return build_extended_circuit(params.n_nv, extended_block(params, t_us, steps))


def flux_coherence_circuit(params: HamiltonianParams, t_us: float, steps: int) -> Circuit:
    """Flux-line GHZ preparation, echo of the extended evolution, un-preparation."""
    n = params.n_nv
    block = extended_block(params, t_us / 2, steps)
    ext = build_extended_circuit(n, Circuit(n + 1, _echo_block(block), block.qubit_roles))
    body = [g for g in ext.gates if g.kind != "MEASURE_Z"]
    body += [Gate("CNOT", (n, i)) for i in reversed(range(n))]
    body.append(Gate("MEASURE_Z", (n,)))
    return Circuit(n + 1, body, ext.qubit_roles)


# ---------------------------------------------------------------------------
# experiments


def _simulate(cfg: dict, c: Circuit, step_us: float, window_us: float, workers: int, **kw) -> np.ndarray:
    c = _with_dd(cfg, c, step_us, window_us)
    model = noise_model(cfg, c, **kw)
    return monte_carlo_trajectories(c, model, basis_state(c.n_qubits), workers)


def run_relaxation(cfg: dict, workers: int = 1) -> ExperimentResult:
    """Survival probability of three electron preparations vs pulse duration."""
    _require(cfg, "relaxation")
    params = hamiltonian_params(cfg, 1)
    steps = cfg["trotter.steps"]
    times = time_grid(cfg)
    curves = {}
    for prep, level in (("ms0", 0), ("ms+1", 1), ("ms-1", 1)):
        vals, errs = [], []
        for t in times:
            t_us = _to_us(cfg, t)
            c = relaxation_circuit(params, prep, t_us, steps)
            rhos = _simulate(cfg, c, t_us / 2 / steps, t_us, workers)
            m, se = trajectory_stats(population_samples(rhos, 0, level))
            vals.append(m)
            errs.append(se)
        curves[f"relaxation_{prep}"] = Curve(times, vals, errs, f"relaxation_{prep}", cfg["grid.units"])
    return ExperimentResult(curves)


def run_coherence_evolution(cfg: dict, workers: int = 1) -> ExperimentResult:
    _require(cfg, "coherence_evolution")
    params = hamiltonian_params(cfg, 1)
    steps = cfg["trotter.steps"]
    times = time_grid(cfg)
    vals, errs = [], []
    for t in times:
        t_us = _to_us(cfg, t)
        rhos = _simulate(cfg, coherence_circuit(params, t_us, steps), t_us / 2 / steps, t_us, workers)
        m, se = trajectory_stats(coherence_samples(rhos, 0))
        vals.append(m)
        errs.append(se)
    return ExperimentResult({"coherence": Curve(times, vals, errs, "coherence", cfg["grid.units"])})


def _fidelity_point(cfg, params, t_us, steps, workers, **kw) -> tuple[float, float]:
    c = fidelity_circuit(params, t_us, steps)
    target = run_circuit(c, basis_state(c.n_qubits))
    rhos = _simulate(cfg, c, t_us / steps, t_us, workers, **kw)
    return trajectory_stats(fidelity_samples(rhos, target))


def run_fidelity(cfg: dict, workers: int = 1, times=None, **kw) -> ExperimentResult:
    """Fidelity of the noisy extended-model state against its noise-free twin."""
    _require(cfg, "fidelity")
    params = hamiltonian_params(cfg)
    times = time_grid(cfg) if times is None else np.asarray(times, dtype=float)
    vals, errs = [], []
    for t in times:
        m, se = _fidelity_point(cfg, params, _to_us(cfg, t), cfg["trotter.steps"], workers, **kw)
        vals.append(m)
        errs.append(se)
    curve = Curve(times, vals, errs, "fidelity", cfg["grid.units"])
    curve.meta["plateau"] = plateau(curve, cfg["fidelity.plateau_fraction"])
    return ExperimentResult({"fidelity": curve})


def plateau(curve: Curve, fraction: float = 0.5) -> float:
    """Mean of the curve over its final ``fraction`` of the time span."""
    t0 = curve.times[0] + (1 - fraction) * (curve.times[-1] - curve.times[0])
    return float(np.mean(curve.values[curve.times >= t0]))


def run_steps_sweep(cfg: dict, workers: int = 1) -> ExperimentResult:
    """Fidelity and flux coherence vs Trotter step count at fixed physical time."""
    _require(cfg, "steps_sweep")
    params = hamiltonian_params(cfg)
    t_us = cfg["sweep.time"]
    steps_list = cfg["sweep.steps"]
    fv, fe, cv, ce = [], [], [], []
    for s in steps_list:
        m, se = _fidelity_point(cfg, params, t_us, s, workers)
        fv.append(m)
        fe.append(se)
        rhos = _simulate(cfg, flux_coherence_circuit(params, t_us, s), t_us / 2 / s, t_us, workers)
        m, se = trajectory_stats(coherence_samples(rhos, params.n_nv))
        cv.append(m)
        ce.append(se)
    return ExperimentResult({
        "steps_fidelity": Curve(steps_list, fv, fe, "steps_fidelity", "steps"),
        "steps_coherence": Curve(steps_list, cv, ce, "steps_coherence", "steps"),
    })


def scaling_curve(cfg: dict, n: int, times, workers: int = 1, **kw) -> Curve:
    params = hamiltonian_params(cfg, n)
    steps = cfg["trotter.steps"]
    vals, errs = [], []
    for t in times:
        t_us = _to_us(cfg, t)
        rhos = _simulate(cfg, flux_coherence_circuit(params, t_us, steps), t_us / 2 / steps, t_us, workers, **kw)
        m, se = trajectory_stats(coherence_samples(rhos, n))
        vals.append(m)
        errs.append(se)
    return Curve(times, vals, errs, f"scaling_n{n}", cfg["grid.units"])


def crossing_with_error(curve: Curve, threshold: float) -> tuple[float, float]:
    """Threshold crossing time and its standard error from the local slope."""
    t, crossed = coherence_time(curve, threshold)
    if not crossed:
        return t, 0.0
    k = int(np.searchsorted(curve.times, t))
    k = min(max(k, 1), len(curve.times) - 1)
    slope = (curve.values[k] - curve.values[k - 1]) / (curve.times[k] - curve.times[k - 1])
    se = max(curve.std_errors[k - 1], curve.std_errors[k])
    return t, float(se / abs(slope)) if slope else float("inf")


def run_scaling(cfg: dict, workers: int = 1) -> ExperimentResult:
    """Flux-line coherence vs time for each NV count and the 0.4-crossing times."""
    _require(cfg, "scaling")
    times = time_grid(cfg)
    thr = cfg["scaling.threshold"]
    curves = {}
    ns, tc, te = [], [], []
    for n in cfg["scaling.n_list"]:
        curve = scaling_curve(cfg, n, times, workers)
        curves[curve.label] = curve
        t, se = crossing_with_error(curve, thr)
        ns.append(n)
        tc.append(t)
        te.append(se)
    curves["coherence_time_vs_n"] = Curve(ns, tc, te, "coherence_time_vs_n", "n",
                                          meta={"time_units": cfg["grid.units"], "threshold": thr})
    return ExperimentResult(curves)


RUNNERS = {
    "relaxation": run_relaxation,
    "coherence_evolution": run_coherence_evolution,
    "fidelity": run_fidelity,
    "steps_sweep": run_steps_sweep,
    "scaling": run_scaling,
}


def _require(cfg: dict, name: str) -> None:
    if cfg.get("experiment") != name:
        raise ConfigInvalid(f"config is for {cfg.get('experiment')!r}, not {name!r}")


def readout_counts(cfg: dict) -> dict[str, int]:
    """Shot counts of the measured line at the last grid time, noise-free circuit, noisy state."""
    exp = cfg["experiment"]
    if exp == "steps_sweep":
        params = hamiltonian_params(cfg)
        c = fidelity_circuit(params, cfg["sweep.time"], cfg["sweep.steps"][-1])
        step = cfg["sweep.time"] / cfg["sweep.steps"][-1]
    else:
        t_us = _to_us(cfg, cfg["grid.stop"])
        s = cfg["trotter.steps"]
        if exp == "relaxation":
            c, step = relaxation_circuit(hamiltonian_params(cfg, 1), "ms+1", t_us, s), t_us / 2 / s
        elif exp == "coherence_evolution":
            c, step = coherence_circuit(hamiltonian_params(cfg, 1), t_us, s), t_us / 2 / s
        elif exp == "fidelity":
            c, step = fidelity_circuit(hamiltonian_params(cfg), t_us, s), t_us / s
        else:
            n = max(cfg["scaling.n_list"])
            c, step = flux_coherence_circuit(hamiltonian_params(cfg, n), t_us, s), t_us / 2 / s
    rho = average(_simulate(cfg, c, step, c.duration(), 1))
    return sample_counts(rho, c.measured_qubits(), cfg["shots"], cfg["noise.seed"])


def run_experiment(cfg: dict, provenance: dict | None = None, workers: int = 1) -> ExperimentResult:
    result = RUNNERS[cfg["experiment"]](cfg, workers=workers)
    result.manifest = build_manifest(cfg, provenance or {}, result)
    result.manifest["readout_counts"] = readout_counts(cfg)
    return result


# ---------------------------------------------------------------------------
# outputs


def _fmt(x: float) -> str:
    return repr(float(x))


def curve_csv(curve: Curve) -> str:
    lines = ["time,value,stderr"]
    for t, v, e in zip(curve.times, curve.values, curve.std_errors):
        lines.append(f"{_fmt(t)},{_fmt(v)},{_fmt(e)}")
    return "\n".join(lines) + "\n"


def build_manifest(cfg: dict, provenance: dict, result: ExperimentResult | None = None) -> dict:
    flagged = sorted(k for k, p in provenance.items() if p != "paper" and k.startswith(("hamiltonian.", "noise.")))
    m = {
        "tool": "nvflux",
        "version": __version__,
        "experiment": cfg["experiment"],
        "config": {k: cfg[k] for k in cfgmod.SCHEMA},
        "provenance": dict(sorted(provenance.items())),
        "non_paper_parameters": flagged,
        "seeds": {"base_seed": cfg["noise.seed"], "trajectories": cfg["noise.trajectories"],
                  "scheme": "trajectory j uses seed base_seed + j"},
        "fidelity_reference": "noise-free evolution of the same circuit at the same time point",
    }
    if result is not None:
        m["curves"] = {
            k: {"units": c.units, "points": len(c.times),
                **{mk: (mv if not isinstance(mv, float) or math.isfinite(mv) else repr(mv)) for mk, mv in c.meta.items()}}
            for k, c in result.curves.items()
        }
    return m


def write_result(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, curve in result.curves.items():
        p = out / f"{name}.csv"
        p.write_text(curve_csv(curve))
        written.append(p)
    p = out / "manifest.json"
    p.write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    written.append(p)
    return written


# ---------------------------------------------------------------------------
# calibration

FREE_PARAMS = {
    # name -> (config key, log10 lower bound, log10 upper bound)
    "tau_c": ("noise.ou.tau_c", 3.0, 7.0),
    "sigma_b": ("noise.ou.sigma_b", -8.0, -3.0),
    "sigma_static": ("noise.static.sigma", -8.0, -2.0),
    "p_depol_1q": ("noise.gate.p1", -5.0, math.log10(0.2)),
    "p_depol_2q": ("noise.gate.p2", -5.0, math.log10(0.2)),
    "t1": ("noise.gate.t1", 0.0, 8.0),
}

TARGETS = {
    "coherence_time_s": "single-NV 0.4-crossing time of the flux coherence, seconds",
    "fidelity_plateau": "late-time mean of the three-NV fidelity curve",
    "crossing_ms_n1": "0.4-crossing time for one NV, milliseconds",
    "crossing_ms_n4": "0.4-crossing time for four NVs, milliseconds",
}


class _BudgetExhausted(Exception):
    pass


def parse_targets(items: list[str]) -> dict[str, float]:
    out = {}
    for item in items:
        name, _, value = item.partition("=")
        if name not in TARGETS or not value:
            raise ConfigInvalid(f"unknown calibration target {item!r}")
        out[name] = float(value)
    return out


NOISE_KEYS = tuple(k for k in cfgmod.SCHEMA if k.startswith("noise.") and k not in ("noise.trajectories", "noise.seed"))


def target_config(cfg: dict, experiment: str) -> dict:
    """``experiment``'s preset structure carrying the noise settings of ``cfg``."""
    out, _ = cfgmod.resolve({"experiment": experiment})
    out.update({k: cfg[k] for k in NOISE_KEYS + ("scaling.threshold", "fidelity.plateau_fraction")})
    out.update({k: v for k, v in cfg.items() if k.startswith("hamiltonian.") and k != "hamiltonian.n_nv"})
    return out


def _crossing_in(cfg: dict, n: int, stop_us: float, units: str, traj: int, seed: int, points: int = 41) -> float:
    c = dict(target_config(cfg, "scaling"), **{"grid.units": "us"})
    times = np.linspace(0.0, stop_us, points)
    curve = scaling_curve(c, n, times, trajectories=traj, seed=seed)
    if not curve.values[0] > c["scaling.threshold"]:
        return 0.0
    t, _ = coherence_time(curve, c["scaling.threshold"])
    return t / cfgmod.UNITS_US[units]


def evaluate_targets(cfg: dict, targets: dict[str, float], trajectories: int, seed: int) -> dict[str, float]:
    """Simulated value of every named calibration target under the noise of ``cfg``.

    Each target is simulated with the circuit structure of the experiment it
    summarises (Trotter steps, register size), whatever ``cfg['experiment']`` is.
    """
    out = {}
    for name, goal in targets.items():
        if name == "coherence_time_s":
            out[name] = _crossing_in(cfg, 1, 3 * goal * 1e6, "s", trajectories, seed)
        elif name in ("crossing_ms_n1", "crossing_ms_n4"):
            n = 1 if name.endswith("n1") else 4
            out[name] = _crossing_in(cfg, n, 3 * goal * 1e3, "ms", trajectories, seed)
        elif name == "fidelity_plateau":
            fc = target_config(cfg, "fidelity")
            res = run_fidelity(fc, trajectories=trajectories, seed=seed)
            out[name] = res.curves["fidelity"].meta["plateau"]
    return out


def _residuals(sim: dict, targets: dict) -> dict[str, float]:
    return {k: (sim[k] - v) / v if math.isfinite(sim[k]) else 10.0 for k, v in targets.items()}


def calibrate_noise(
    base: dict,
    targets: dict[str, float],
    free_params: list[str],
    budget: int = 500,
    trajectories: int = 200,
    tolerance: float = 0.25,
    seed: int | None = None,
) -> tuple[dict, dict]:
    """Fit noise magnitudes so simulated summaries match ``targets``.

    Minimises the sum of squared relative errors. One target with one free
    parameter uses bisection in log space (dephasing is monotone in each
    magnitude); otherwise coordinate descent over a log grid followed by a
    bounded scalar refinement of each coordinate. Simulations use common
    random numbers so the objective is deterministic.

    Returns ``(fitted_overrides, report)``. Raises :class:`CalibrationFailed`
    when any relative residual exceeds ``tolerance``.
    """
    for p in free_params:
        if p not in FREE_PARAMS:
            raise ConfigInvalid(f"unknown free parameter {p!r}")
    seed = base["noise.seed"] if seed is None else seed
    x = {}
    for p in free_params:
        key, lo, hi = FREE_PARAMS[p]
        v = base[key]
        x[p] = math.log10(v) if v > 0 else (lo + hi) / 2
    evals = 0
    best: dict = {"loss": math.inf}

    def cfg_for(xs: dict) -> dict:
        c = dict(base)
        for p, lv in xs.items():
            c[FREE_PARAMS[p][0]] = 10.0**lv
        if "tau_c" in xs:
            c["noise.ou.dt"] = c["noise.ou.tau_c"] / 10
        return c

    def loss(xs: dict) -> float:
        nonlocal evals
        if evals >= budget:
            raise _BudgetExhausted
        evals += 1
        sim = evaluate_targets(cfg_for(xs), targets, trajectories, seed)
        res = _residuals(sim, targets)
        val = float(sum(r * r for r in res.values()))
        best["last_res"] = res
        log.info("calibration eval %d: %s -> %s", evals, {k: 10**v for k, v in xs.items()}, res)
        if val < best["loss"]:
            best.update(loss=val, x=dict(xs), sim=sim, res=res)
        return val

    exhausted = False
    try:
        loss(x)
        if max(abs(r) for r in best["res"].values()) > 0.02:
            if len(free_params) == 1 and len(targets) == 1:
                _bisect(loss, x, free_params[0], best)
            else:
                _coordinate_descent(loss, x, free_params, best)
    except _BudgetExhausted:
        exhausted = True

    fitted = {FREE_PARAMS[p][0]: 10.0 ** best["x"][p] for p in free_params}
    if "tau_c" in free_params:
        fitted["noise.ou.dt"] = fitted["noise.ou.tau_c"] / 10
    report = {
        "targets": targets,
        "simulated": best["sim"],
        "relative_residuals": best["res"],
        "fitted": fitted,
        "evaluations": evals,
        "budget_exhausted": exhausted,
        "trajectories": trajectories,
        "seed": seed,
        "iterations_beyond_verification": evals - 1,
    }
    worst = max(abs(r) for r in best["res"].values())
    report["status"] = "ok" if worst <= tolerance else "failed"
    if worst > tolerance:
        raise CalibrationFailed(f"worst relative residual {worst:.3f} exceeds {tolerance}", report)
    return fitted, report


def _bisect(loss, x: dict, p: str, best: dict, iters: int = 40) -> None:
    """Log-space bisection on the sign of the single relative residual."""
    _, lo, hi = FREE_PARAMS[p]
    name = next(iter(best["res"]))

    def signed(lv: float) -> float:
        loss({**x, p: lv})
        return best["last_res"][name]

    r_lo, r_hi = signed(lo), signed(hi)
    if r_lo * r_hi > 0:
        return
    for _ in range(iters):
        mid = (lo + hi) / 2
        r_mid = signed(mid)
        if abs(r_mid) < 1e-3:
            return
        if (r_mid > 0) == (r_lo > 0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid


def _coordinate_descent(loss, x: dict, free_params: list[str], best: dict, rounds: int = 2, grid: int = 11,
                         refine_rounds: int = 5) -> None:
    for _ in range(rounds):
        for p in free_params:
            _, lo, hi = FREE_PARAMS[p]
            cands = np.linspace(lo, hi, grid)
            for c in cands:
                loss({**best["x"], p: float(c)})
    step = {p: (FREE_PARAMS[p][2] - FREE_PARAMS[p][1]) / (grid - 1) for p in free_params}
    for _ in range(refine_rounds):
        if max(abs(r) for r in best["res"].values()) < 0.005:
            return
        for p in free_params:
            centre = best["x"][p]
            lo = max(FREE_PARAMS[p][1], centre - step[p])
            hi = min(FREE_PARAMS[p][2], centre + step[p])
            minimize_scalar(lambda lv: loss({**best["x"], p: float(lv)}), bounds=(lo, hi),
                            method="bounded", options={"maxiter": 15, "xatol": 1e-3})
            step[p] /= 2
