"""Picking one Fock state with the carrier coupling.

On the carrier, Omega = f(n, eta) = exp(-eta^2/2) L_n(eta^2) is diagonal in
the Fock basis and the measurement never changes n, only reweights it.
Choosing gamma tau = 2 pi / f(2, eta) makes n = 2 the only resonant number
state.  Small eta makes f nearly flat, so neighbouring n are damped slowly.
"""

import math

import numpy as np

from distill.distillation import ProtocolConfig, distillate_projector, run_postselected
from distill.fockspace import superposition
from distill.scenarios import CouplingScenario, laguerre_f

eta = 0.2
scenario = CouplingScenario.qnd(eta, 8)
basis = scenario.basis
gamma_tau = 2 * math.pi / laguerre_f(2, eta)

print(" n   f(n, eta)   |cos(gamma tau f)|")
for n in range(9):
    f = laguerre_f(n, eta)
    print(f"{n:2d}   {f:.6f}    {abs(math.cos(gamma_tau * f)):.6f}")

dist = distillate_projector(scenario, gamma_tau)
print("resonant set:", [round(m.eigenvalue, 8) for m in dist.resonances.members])

phi0 = superposition(basis, basis.states)
for steps in (20, 60, 100, 150, 200):
    rec = run_postselected(ProtocolConfig(scenario, gamma_tau, steps, phi0))
    pop = np.abs(rec.final_state.amplitudes) ** 2
    print(f"N = {steps:3d}  population of n = 2: {pop[2]:.8f}   joint probability {rec.joint_prob:.6f}")
