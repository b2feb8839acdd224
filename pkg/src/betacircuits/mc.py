"""Monte Carlo baseline: sample leaf probabilities, condition per sample.

Each sample draws one concrete probability for every labelled leaf
variable from its beta distribution (the complement leaf is forced to one
minus that draw, honoring cov[v, not v] = -var[v]) and evaluates the
conditioned query in the point-probability semiring.  The sample mean and
variance then estimate the query's posterior mean and epistemic variance.

Samples whose evidence probability is zero leave the conditional undefined
and are rejected and redrawn (counted); when rejections exceed 99% of the
draws the evidence is reported as almost surely inconsistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import betacalc
from .betacalc import BetaLabel, Moments
from .circuit import Circuit, LabelTable, NodeKind
from .semirings import InconsistentEvidenceError


@dataclass
class MCResult:
    mean: float
    variance: float
    samples: np.ndarray
    rejections: int


def _sample_leaf_probs(label: BetaLabel, size: int,
                       rng: np.random.Generator) -> np.ndarray:
    if label.certain is not None:
        return np.full(size, 1.0 if label.certain else 0.0)
    return rng.beta(label.alpha_pos, label.alpha_neg, size=size)


def _eval_batch(c: Circuit, leaf_probs: dict[int, np.ndarray], size: int,
                zero_literals: frozenset[int]) -> np.ndarray:
    """Vectorized probability-semiring sweep over a batch of samples."""
    values: list[np.ndarray] = [None] * len(c.nodes)  # type: ignore[list-item]
    ones = np.ones(size)
    zeros = np.zeros(size)
    for n in c.nodes:
        if n.kind is NodeKind.LITERAL:
            if n.lam == 0 or n.literal in zero_literals:
                values[n.id] = zeros
            elif n.var not in leaf_probs:
                # Derived (unlabelled) atom: weight 1 for both polarities.
                values[n.id] = ones
            else:
                p = leaf_probs[n.var]
                values[n.id] = p if n.literal > 0 else 1.0 - p
        elif n.kind is NodeKind.TRUE:
            values[n.id] = ones
        elif n.kind is NodeKind.FALSE:
            values[n.id] = zeros
        elif n.kind is NodeKind.AND:
            acc = values[n.children[0]]
            for ch in n.children[1:]:
                acc = acc * values[ch]
            values[n.id] = acc
        else:
            acc = values[n.children[0]]
            for ch in n.children[1:]:
                acc = acc + values[ch]
            values[n.id] = acc
    return values[c.root]


def mc_eval(c: Circuit, labels: LabelTable, n_samples: int,
            seed: int | np.random.Generator | None = 0,
            max_rejection_rate: float = 0.99) -> MCResult:
    """Monte Carlo estimate of the conditioned query on a staged circuit.

    Requires a query staged by ``set_condition``.  Deterministic for a
    fixed seed.  Raises InconsistentEvidenceError when more than
    ``max_rejection_rate`` of the draws produce zero-probability evidence.
    """
    if c.query_literal is None:
        raise ValueError("circuit has no staged query; call set_condition first")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = (seed if isinstance(seed, np.random.Generator)
           else np.random.default_rng(seed))
    circuit_vars = sorted({n.var for n in c.nodes
                           if n.kind is NodeKind.LITERAL and n.var in labels})
    qneg = frozenset((-c.query_literal,))

    accepted: list[np.ndarray] = []
    n_acc = 0
    rejections = 0
    total = 0
    while n_acc < n_samples:
        batch = n_samples - n_acc
        leaf_probs = {v: _sample_leaf_probs(labels.label_of(v), batch, rng)
                      for v in circuit_vars}
        ev = _eval_batch(c, leaf_probs, batch, frozenset())
        joint = _eval_batch(c, leaf_probs, batch, qneg)
        ok = ev > 0.0
        rejections += int(batch - ok.sum())
        total += batch
        if ok.any():
            accepted.append(joint[ok] / ev[ok])
            n_acc += int(ok.sum())
        if total >= max(100, 2 * n_samples) and rejections / total > max_rejection_rate:
            raise InconsistentEvidenceError(
                f"evidence almost surely inconsistent: "
                f"{rejections}/{total} samples rejected")
    samples = np.concatenate(accepted)[:n_samples]
    mean = float(np.mean(samples))
    var = float(np.var(samples, ddof=1)) if n_samples > 1 else 0.0
    return MCResult(mean, var, samples, rejections)


def mc_strength(samples: np.ndarray,
                base_rate: float = betacalc.DEFAULT_BASE_RATE,
                prior_weight: float = betacalc.DEFAULT_PRIOR_WEIGHT) -> float:
    """Dirichlet strength of the beta fitted to a sample set.

    s = mean (1 - mean) / var - 1 with the usual prior floors; degenerate
    samples (zero variance) map to the certain sentinel's infinite
    strength.
    """
    samples = np.asarray(samples, dtype=float)
    mean = float(np.mean(samples))
    var = float(np.var(samples, ddof=1)) if samples.size > 1 else 0.0
    if var <= 0.0:
        return float("inf")
    label = betacalc.moment_match(Moments(mean, var), base_rate, prior_weight)
    return label.strength
