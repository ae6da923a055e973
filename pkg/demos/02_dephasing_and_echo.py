"""Slow magnetic noise on one qubit: free decay, the OU closed form, and what pulses buy back.

Run: python demos/02_dephasing_and_echo.py
"""
import math

from nvflux.circuit import Circuit, Gate
from nvflux.decoupling import DDSequence, idle_circuit, interleave
from nvflux.linalg import ket
from nvflux.noise import NoiseModel, OUParams, monte_carlo_trajectories
from nvflux.observables import coherence_samples, trajectory_stats

T, steps = 1.0, 32
tau_c, sigma = 2.0, 3.0
model = NoiseModel(ou={0: OUParams(tau_c, sigma, T / steps)}, n_trajectories=4000, base_seed=5)


def run(seq: DDSequence, stop: int = steps):
    base = idle_circuit(1, stop, T / steps)
    c = Circuit(1, [Gate("H", (0,))] + base.gates)
    if seq.kind != "none":
        c = interleave(c, DDSequence(seq.kind, seq.n_pulses, stop * T / steps), 0, T / steps)
    return trajectory_stats(coherence_samples(monte_carlo_trajectories(c, model, ket("0")), 0))


print("free decay against exp[-s^2 tc^2 (e^{-t/tc} - 1 + t/tc)]")
for k in (8, 16, 32):
    t = k * T / steps
    mean, se = run(DDSequence(), k)
    exact = math.exp(-sigma**2 * tau_c**2 * (math.exp(-t / tau_c) - 1 + t / tau_c))
    print(f"  t={t:.2f}  MC {mean:.4f} +- {se:.4f}   closed form {exact:.4f}")

print(f"\ncoherence at T={T} us")
for seq in (DDSequence(), DDSequence("echo", 1, T), DDSequence("cpmg", 4, T), DDSequence("xy4", 8, T)):
    mean, se = run(seq)
    print(f"  {seq.kind:5s} N={seq.n_pulses}: {mean:.4f} +- {se:.4f}")
print("\nshorter gaps between pulses leave the noise less time to wander, so coherence rises with N")
