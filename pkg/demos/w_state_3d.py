"""A three-mode entangled state from a single-axis excitation.

In an isotropic trap, Omega = a_x^2 + a_y^2 + a_z^2 gives
Omega Omega^+ = N_T^2 + 5 N_T - L^2 + 6.  In the two-quantum shell this is
20 on the rotationally invariant state (l = 0) and 14 on the five l = 2
states, so gamma tau = pi/sqrt 5 keeps only the scalar combination
(|200> + |020> + |002>)/sqrt 3.
"""

from distill.distillation import ProtocolConfig, run_postselected
from distill.fockspace import fock_state, superposition
from distill.scenarios import CouplingScenario, angular_eigenbasis_3d, omega_spectrum
from distill.spectral import choose_gamma_tau

scenario = CouplingScenario.second_red_3d(2)
basis = scenario.basis

spectrum = omega_spectrum(scenario)
shell = [round(float(w), 10) for w, v in zip(spectrum.eigenvalues, spectrum.eigenvectors.T)
         if abs(v[[basis.position(s) for s in basis.sector(2).states]]).sum() > 0.5]
print("Omega Omega^+ on the two-quantum shell:", shell)

(scalar,) = angular_eigenbasis_3d(2, 0, basis)
print("l = 0 state amplitudes:",
      {basis.label(i): round(float(abs(a)), 6) for i, a in enumerate(scalar.amplitudes) if abs(a) > 1e-12})

w_state = superposition(basis, [(2, 0, 0), (0, 2, 0), (0, 0, 2)])
gamma_tau = choose_gamma_tau(20, 2)
record = run_postselected(ProtocolConfig(scenario, gamma_tau, 50, fock_state(basis, (2, 0, 0)), w_state))

for k in (1, 2, 3, 4, 5, 10, 50):
    print(f"N = {k:2d}   fidelity {record.fidelity_trace[k - 1]:.6f}   joint probability {record.joint_probs[k - 1]:.6f}")
print(f"efficiency limit {record.distillate_overlap:.6f}")
