"""The linear-algebra layer on its own.

The conditional map is a function of the Hermitian operator Omega Omega^+,
evaluated through its eigendecomposition.  The eigensolver here is a
cyclic Jacobi method; this script checks it against LAPACK on the 2D
coupling and shows how a coupling time is chosen for a target eigenvalue.
"""

import numpy as np

from distill.scenarios import CouplingScenario, omega_omega_dag
from distill.spectral import choose_gamma_tau, cos_sqrt, hermitian_eig, leakage_after_N, resonant_set

scenario = CouplingScenario.second_red_2d(8)
m = omega_omega_dag(scenario)
dec = hermitian_eig(m)
print(f"dimension {m.dim}, Jacobi vs LAPACK max eigenvalue difference "
      f"{np.abs(dec.eigenvalues - np.linalg.eigvalsh(m.matrix)).max():.2e}")
print(f"reconstruction error {np.abs(dec.reconstruct() - m.matrix).max():.2e}")

# closed form (n + 2)^2 - m^2 in each shell; 80 = 9^2 - 1 also resonates, with l = 4
for n in range(5):
    block = hermitian_eig(m.restrict(scenario.basis.sector(n)))
    print(f"N_T = {n}: {np.round(block.eigenvalues, 10).tolist()}")

gamma_tau = choose_gamma_tau(20, 2)
rs = resonant_set(dec, gamma_tau)
print(f"\ngamma tau = {gamma_tau:.6f} selects {[(round(m.eigenvalue, 9), m.l) for m in rs.members]}")
print(f"leakage bound {rs.leakage_bound:.4f}, after 50 steps {leakage_after_N(rs, 50):.2e}")

v = cos_sqrt(dec, gamma_tau)
print(f"conditional map is Hermitian: {v.hermitian}, spectral radius "
      f"{np.abs(np.linalg.eigvalsh(v.matrix)).max():.6f}")
