"""
Words from one agent, the other, and both
=========================================

Each condition spells 100 words. The single agents lean toward their own
end of the colorfulness scale; the collective lands in between. The
perplexity matrix shows each group of words is best explained by the
model (or fused model) that produced it.
"""

from planchette.harness import Experiment, ExperimentConfig, display_word, perplexity_matrix

exp = Experiment(ExperimentConfig())

generated = {}
for name, agents in exp.conditions().items():
    summary, _ = exp.run(agents)
    generated[name] = summary.valid_words()
    top = list(summary.frequencies.items())[:5]
    print(f"{name:7s} distinct={summary.distinct:3d} valid={summary.valid_count:3d} "
          f"mean weight={summary.mean_weight:.3f}")
    for word, count in top:
        print(f"    {display_word(word):12s} {count:3d}  p={summary.likelihoods[word]:.3g}")

print()
matrix = perplexity_matrix(generated, exp.evaluators, exp.vocab)
cols = list(next(iter(matrix.values())))
print("generated_by " + " ".join(f"{c:>8s}" for c in cols))
for cond, row in matrix.items():
    print(f"{cond:12s} " + " ".join(f"{row[c]:8.3f}" for c in cols))
