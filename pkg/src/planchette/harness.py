"""Multi-trial experiments: corpora, generation runs, tables and sweeps."""

from __future__ import annotations

import json
import logging
import math
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .board import BoardLayout, default_board, load_board
from .corpus import (
    FusedCharModel,
    Vocabulary,
    default_vocabulary,
    load_vocabulary,
    perplexity,
    sequence_logprob,
    train_weighted,
)
from .dynamics import AgentSpec, DynamicsConfig, GenerationRecord, generate_sequence, trial_seed
from .energy import PotentialParams

log = logging.getLogger(__name__)

SCHEMES = ("colorful", "reverse", "uniform")


class ConfigError(ValueError):
    pass


def build_agent_corpora(vocab: Vocabulary, scheme: str) -> Vocabulary:
    """Reweight ``vocab`` for one agent; weights come back normalized to sum 1."""
    w = vocab.weights
    if scheme == "colorful":
        new = w.copy()
    elif scheme == "reverse":
        new = 1.0 - w
    elif scheme == "uniform":
        new = np.ones_like(w)
    else:
        raise ValueError(f"unknown corpus scheme {scheme!r}")
    if new.sum() <= 0:
        raise ValueError(f"scheme {scheme!r} leaves every weight at zero")
    new = new / new.sum()
    return Vocabulary(tuple(zip(vocab.words, new.tolist())))


@dataclass
class AgentConfig:
    scheme: str = "colorful"
    noise_d: float = 0.01


def _default_agents():
    return [AgentConfig("colorful"), AgentConfig("reverse")]


@dataclass
class ExperimentConfig:
    board: str = "default"
    vocabulary: str = "default"
    agents: list = field(default_factory=_default_agents)
    order: int = 6
    alpha: float = 1e-3
    corpus_mode: str = "expectation"
    corpus_samples: int = 100_000
    eta: float = 0.1
    delta_t: int = 1
    t_max_inner: int = 2000
    vote_fraction: float = 0.05
    t_max_outer: int = 20
    mode: str = "marginal"
    r0: float = 0.3
    phi0: float = 0.0
    continue_from_previous: bool = False
    trials: int = 100
    seed: int = 0
    out: str = "out"
    evaluator: str = "fused"
    workers: int = 1

    def __post_init__(self):
        self.agents = [a if isinstance(a, AgentConfig) else AgentConfig(**a) for a in self.agents]
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.agents:
            raise ConfigError("at least one agent is required")
        for a in self.agents:
            if a.scheme not in SCHEMES:
                raise ConfigError(f"unknown corpus scheme {a.scheme!r}")
            if a.noise_d < 0:
                raise ConfigError("noise_d must be >= 0")
        for name in ("board", "vocabulary"):
            value = getattr(self, name)
            if value != "default" and not Path(value).exists():
                raise ConfigError(f"{name} file not found: {value}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def dynamics(self) -> DynamicsConfig:
        try:
            return DynamicsConfig(
                eta=self.eta, delta_t=self.delta_t, t_max_inner=self.t_max_inner,
                vote_fraction=self.vote_fraction, t_max_outer=self.t_max_outer, mode=self.mode,
                params=PotentialParams(self.r0, self.phi0), seed=self.seed,
                continue_from_previous=self.continue_from_previous,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def display_word(word: str) -> str:
    return word if word else "EOS"


@dataclass
class TrialSummary:
    """Aggregate of one condition's trials.

    ``frequencies`` is ordered by count (descending) then word. Words are
    the generated letters without the terminal EOS; an empty word means
    EOS was selected first.
    """

    trials: int
    frequencies: dict[str, int]
    likelihoods: dict[str, float]
    valid: dict[str, bool]
    entropy: float
    mean_weight: float
    evaluator: str

    @property
    def valid_count(self) -> int:
        return sum(c for w, c in self.frequencies.items() if self.valid[w])

    @property
    def distinct(self) -> int:
        return len(self.frequencies)

    def valid_words(self) -> list[str]:
        """Valid generated words with multiplicity."""
        return [w for w, c in self.frequencies.items() if self.valid[w] for _ in range(c)]

    def table_csv(self) -> str:
        rows = ["rank,word,freq,prob,valid"]
        for rank, (w, c) in enumerate(self.frequencies.items(), 1):
            rows.append(f"{rank},{display_word(w)},{c},{self.likelihoods[w]!r},{int(self.valid[w])}")
        return "\n".join(rows) + "\n"

    def to_json(self) -> str:
        doc = {
            "trials": self.trials, "distinct": self.distinct, "valid_count": self.valid_count,
            "entropy": self.entropy, "mean_weight": self.mean_weight, "evaluator": self.evaluator,
            "frequencies": self.frequencies,
        }
        return json.dumps(doc, indent=1)


def summarize(records: Sequence[GenerationRecord], vocab: Vocabulary, evaluator, evaluator_name: str) -> TrialSummary:
    counts = Counter(r.word for r in records)
    ordered = dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    n = len(records)
    probs = np.array(list(ordered.values()), dtype=float) / n
    entropy = float(-(probs * np.log(probs)).sum()) + 0.0
    likelihoods = {w: math.exp(sequence_logprob(evaluator, w)) for w in ordered}
    valid = {w: w in vocab for w in ordered}
    weights = [vocab.weight_of(w) for w, c in ordered.items() if valid[w] for _ in range(c)]
    mean_weight = float(np.mean(weights)) if weights else float("nan")
    return TrialSummary(n, ordered, likelihoods, valid, entropy, mean_weight, evaluator_name)


def _run_one(args):
    agents, board, dyn, seed = args
    return generate_sequence(agents, board, dyn, seed)


class Experiment:
    """Board, vocabulary, trained agent models and evaluators for one config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dyn = cfg.dynamics()
        self.board: BoardLayout = default_board() if cfg.board == "default" else load_board(cfg.board)
        self.vocab: Vocabulary = default_vocabulary() if cfg.vocabulary == "default" else load_vocabulary(cfg.vocabulary)
        trained = {}
        for a in cfg.agents:
            if a.scheme not in trained:
                corpus = build_agent_corpora(self.vocab, a.scheme)
                trained[a.scheme] = train_weighted(
                    corpus, cfg.order, cfg.alpha, cfg.corpus_mode, cfg.corpus_samples, cfg.seed,
                    alphabet=self.board.symbols,
                )
        self.models = [trained[a.scheme] for a in cfg.agents]
        self.agents = [AgentSpec(m, a.noise_d) for m, a in zip(self.models, cfg.agents)]
        self.evaluators = {f"agent{i + 1}": m for i, m in enumerate(self.models)}
        if len(self.models) > 1:
            self.evaluators["fused"] = FusedCharModel(self.models, self.fusion_exponents())
        else:
            self.evaluators["fused"] = self.models[0]

    def fusion_exponents(self) -> list[float]:
        """``T_i / T_fused`` per agent; equal shares when every agent is noiseless."""
        d = np.array([a.noise_d for a in self.agents], dtype=float)
        if d.sum() == 0:
            return [1.0 / len(d)] * len(d)
        if (d == 0).any():
            raise ValueError("fused evaluator needs all agents noisy or all noiseless")
        return (d / d.sum()).tolist()

    def conditions(self) -> dict[str, list[AgentSpec]]:
        """Each agent alone, plus all agents together."""
        out = {f"agent{i + 1}": [a] for i, a in enumerate(self.agents)}
        out["collective"] = list(self.agents)
        return out

    def run(self, agents: Sequence[AgentSpec] | None = None, trials: int | None = None,
            evaluator: str | None = None) -> tuple[TrialSummary, list[GenerationRecord]]:
        agents = list(self.agents if agents is None else agents)
        trials = self.cfg.trials if trials is None else trials
        evaluator = self.cfg.evaluator if evaluator is None else evaluator
        if evaluator not in self.evaluators:
            raise ConfigError(f"unknown evaluator {evaluator!r}; choose from {sorted(self.evaluators)}")
        jobs = [(agents, self.board, self.dyn, trial_seed(self.cfg.seed, i)) for i in range(trials)]
        if self.cfg.workers > 1:
            with ProcessPoolExecutor(self.cfg.workers) as pool:
                records = list(pool.map(_run_one, jobs))
        else:
            records = [_run_one(j) for j in jobs]
        summary = summarize(records, self.vocab, self.evaluators[evaluator], evaluator)
        return summary, records


def run_trials(cfg: ExperimentConfig) -> tuple[TrialSummary, list[GenerationRecord]]:
    return Experiment(cfg).run()


def perplexity_matrix(generated: Mapping[str, Sequence[str]], evaluators: Mapping, vocab: Vocabulary) -> dict:
    """Rows: generating condition; columns: evaluator; valid words only.

    A row with no valid words is left out with a warning.
    """
    matrix = {}
    for cond, words in generated.items():
        valid = [w for w in words if w in vocab]
        if not valid:
            warnings.warn(f"condition {cond!r} produced no valid words; row omitted")
            continue
        matrix[cond] = {name: perplexity(model, valid) for name, model in evaluators.items()}
    return matrix


def perplexity_csv(matrix: Mapping[str, Mapping[str, float]]) -> str:
    if not matrix:
        return "generated_by\n"
    cols = list(next(iter(matrix.values())))
    rows = ["generated_by," + ",".join(cols)]
    for cond, row in matrix.items():
        rows.append(cond + "," + ",".join(repr(row[c]) for c in cols))
    return "\n".join(rows) + "\n"


@dataclass
class AblationPoint:
    temperature: float
    summary: TrialSummary


def ablation_sweep(cfg: ExperimentConfig, temperatures: Sequence[float], scale: str = "fused",
                   experiment: Experiment | None = None) -> list[AblationPoint]:
    """Rerun the collective condition across noise temperatures.

    With ``scale="fused"`` each point sets the collective temperature, so
    every agent gets ``D_i = T * eta / N``. With ``scale="agent"`` every
    agent runs at temperature ``T``, i.e. ``D_i = T * eta``.
    """
    if any(t < 0 for t in temperatures):
        raise ValueError("temperatures must be >= 0")
    if scale not in ("fused", "agent"):
        raise ValueError("scale must be 'fused' or 'agent'")
    exp = experiment or Experiment(cfg)
    share = len(exp.agents) if scale == "fused" else 1
    points = []
    for t in temperatures:
        agents = [replace(a, noise_d=t * cfg.eta / share) for a in exp.agents]
        summary, _ = exp.run(agents)
        points.append(AblationPoint(float(t), summary))
        log.info("T=%g valid=%d entropy=%.3f", t, summary.valid_count, summary.entropy)
    return points


def ablation_csv(points: Sequence[AblationPoint]) -> str:
    rows = ["temperature,trials,valid_count,distinct,entropy"]
    for p in points:
        s = p.summary
        rows.append(f"{p.temperature!r},{s.trials},{s.valid_count},{s.distinct},{s.entropy!r}")
    return "\n".join(rows) + "\n"


def export_weight_density(records: Mapping[str, Sequence[GenerationRecord]], vocab: Vocabulary,
                          bins: int = 20) -> tuple[str, str]:
    """Per-word weights and a fixed-bin histogram for each condition.

    Returns ``(weights_csv, histogram_csv)``.
    """
    weight_rows = ["condition,word,weight"]
    hist_rows = ["condition,bin_lo,bin_hi,count"]
    edges = np.arange(bins + 1) / bins
    for cond, recs in records.items():
        weights = []
        for r in recs:
            if r.word in vocab:
                w = vocab.weight_of(r.word)
                weights.append(w)
                weight_rows.append(f"{cond},{r.word},{w!r}")
        if weights:
            counts, _ = np.histogram(weights, bins=edges)
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                hist_rows.append(f"{cond},{float(lo)!r},{float(hi)!r},{int(c)}")
    return "\n".join(weight_rows) + "\n", "\n".join(hist_rows) + "\n"


def mean_weights(records: Mapping[str, Sequence[GenerationRecord]], vocab: Vocabulary) -> dict[str, float]:
    out = {}
    for cond, recs in records.items():
        w = [vocab.weight_of(r.word) for r in recs if r.word in vocab]
        out[cond] = float(np.mean(w)) if w else float("nan")
    return out
