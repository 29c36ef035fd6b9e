"""
Does the chain sample the Gibbs field?
======================================

The collective update is a Langevin step on the fused energy, so its
long-run histogram should match ``exp(-E_fused / T_fused)``. We compare a
short and a long chain on the empty context and watch the total-variation
distance fall toward zero as sampling noise averages out.
"""

from planchette.board import Grid
from planchette.dynamics import energy_context, fused_temperature
from planchette.harness import Experiment, ExperimentConfig
from planchette.oracle import coarsen, empirical_histogram, gibbs_oracle, total_variation

exp = Experiment(ExperimentConfig())
noise = [a.noise_d for a in exp.agents]
T = fused_temperature(noise, exp.cfg.eta)
ctx = energy_context(exp.agents, [], exp.board, exp.dyn.params)

# the oracle is built on a fine grid and summed onto the histogram bins
grid = Grid(exp.board.bounds, 0.1)
target = coarsen(gibbs_oracle(ctx, T, 0.02), grid)

for steps in (50_000, 200_000, 1_000_000, 4_000_000):
    counts = empirical_histogram(ctx, noise, exp.dyn, steps, burn_in=10_000, seed=0)
    tv = total_variation(counts / counts.sum(), target)
    print(f"{steps:>9,d} steps  TV = {tv:.4f}")
