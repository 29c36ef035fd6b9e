"""
The fused energy landscape of two agents
========================================

Two character models trained on oppositely weighted flower lists each
turn their next-letter distribution into an energy over the board. The
planchette feels the sum. This script prints the most probable first
letters under each agent and under the fused Gibbs field, then writes a
heatmap of that field to ``fused_field.svg``.
"""

import numpy as np

from planchette.dynamics import energy_context, fused_temperature
from planchette.harness import Experiment, ExperimentConfig
from planchette.oracle import char_mass_oracle, gibbs_oracle
from planchette.render import render_svg

exp = Experiment(ExperimentConfig())
board = exp.board

# what does each agent want to write first?
for name, model in (("agent1", exp.models[0]), ("agent2", exp.models[1])):
    p = model.next_char_dist([])
    top = np.argsort(p)[::-1][:5]
    print(name, " ".join(f"{board.symbols[i]}:{p[i]:.3f}" for i in top))

# the collective runs at T_fused = sum(D_i) / eta
noise = [a.noise_d for a in exp.agents]
T = fused_temperature(noise, exp.cfg.eta)
ctx = energy_context(exp.agents, [], board, exp.dyn.params)
print(f"T_fused = {T:.2f}")

# Gibbs mass per Voronoi cell, BOS removed because it is never selected
mass = char_mass_oracle(ctx, T).without()
top = np.argsort(mass.probs)[::-1][:5]
print("fused ", " ".join(f"{mass.symbols[i]}:{mass.probs[i]:.3f}" for i in top))

field = gibbs_oracle(ctx, T, grid_step=0.05)
with open("fused_field.svg", "w") as fh:
    fh.write(render_svg(board, field.cell_probs, field.grid))
print("wrote fused_field.svg")
