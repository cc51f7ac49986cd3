"""Sifting perfect-square Fock states with the blue sideband.

With Omega = a^+ the conditional map is cos(gamma tau sqrt(N)).  At
gamma tau = 2 pi it is the identity on n = 0, 1, 4, 9, 16 and a strict
contraction elsewhere.  The contraction is weak for n = 12: sqrt 12 = 3.464
lies near a half-integer, so cos(2 pi sqrt 12) = -0.975 and that component
flips sign at every step while shrinking only slowly.  Removing it to
1e-6 takes a few hundred steps.
"""

import math

import numpy as np

from distill.distillation import ProtocolConfig, distillate_projector, run_postselected
from distill.fockspace import superposition
from distill.scenarios import CouplingScenario

scenario = CouplingScenario.blue_sideband(16)
basis = scenario.basis
phi0 = superposition(basis, basis.states)
gamma_tau = 2 * math.pi

dist = distillate_projector(scenario, gamma_tau)
print("resonant n:", [round(m.eigenvalue) for m in dist.resonances.members])
print(f"slowest non-square |cos|: {dist.resonances.leakage_bound:.6f}")

squares = {0, 1, 4, 9, 16}
for steps in (10, 40, 100, 250, 400):
    rec = run_postselected(ProtocolConfig(scenario, gamma_tau, steps, phi0))
    pops = np.abs(rec.final_state.amplitudes) ** 2
    tail = sum(p for (n,), p in zip(basis.states, pops) if n not in squares)
    worst = max((p, n) for (n,), p in zip(basis.states, pops) if n not in squares)
    print(f"N = {steps:3d}  non-square population {tail:.3e}  (largest: n = {worst[1]}, {worst[0]:.3e})")
