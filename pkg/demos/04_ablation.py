"""
Trading reliability for diversity
=================================

Sweeping the collective temperature from zero upward shows the
familiar trade-off: noiseless agents repeat one word forever, a little
noise yields varied valid names, and a lot of noise spells gibberish.
"""

from planchette.harness import Experiment, ExperimentConfig, ablation_sweep

cfg = ExperimentConfig()
exp = Experiment(cfg)

# each agent gets D_i = T * eta / N so that T is the fused temperature
for point in ablation_sweep(cfg, [0.0, 0.1, 0.2, 0.5, 1.0], scale="fused", experiment=exp):
    s = point.summary
    print(f"T={point.temperature:4.1f}  valid={s.valid_count:3d}  distinct={s.distinct:3d}  "
          f"entropy={s.entropy:.3f}")
