"""Sampling measurement records instead of following the lucky branch.

Every run of the experiment either keeps finding the internal state in |+>
or fails at some step.  Sampling many runs with a fixed seed reproduces
the joint probability of the post-selected branch, and the histogram of
failure steps shows that almost all failures happen in the first few
measurements.
"""

import math

from distill.distillation import ProtocolConfig, run_monte_carlo
from distill.fockspace import fock_state
from distill.scenarios import CouplingScenario

scenario = CouplingScenario.second_red_2d(4)
config = ProtocolConfig(scenario, math.pi / math.sqrt(5), 50, fock_state(scenario.basis, (4, 0)))

ensemble = run_monte_carlo(config, trials=100_000, seed=2024)
print(f"success rate  {ensemble.success_rate:.5f}")
print(f"expected      {ensemble.expected_rate:.5f} +- {ensemble.binomial_sigma:.5f}")

print("\nfailures by step")
for step, count in enumerate(ensemble.failure_histogram[1:11], start=1):
    print(f"{step:3d} {count:6d} {'#' * (count // 2000)}")
print(f"later: {ensemble.failure_histogram[11:].sum()}")

again = run_monte_carlo(config, trials=100_000, seed=2024)
print("\nsame seed, same record:", (again.failure_histogram == ensemble.failure_histogram).all())
