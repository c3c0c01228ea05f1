"""Dataset quality scores: static, dynamic, and frontier components.

Three component scores feed one composite:

  S1 (static)   = weighted mix of metadata hygiene (S1a), learnability
                  (S1b), and leakage-freeness (S1c)
  S2 (dynamic)  = observed mean-accuracy improvement blended with
                  learnability
  S3 (frontier) = observed pass-rate improvement blended the same way
  Q             = weighted mix of S1, S2, S3

Every weight that varies with model capacity is linearly interpolated in
log10 of the parameter count between anchors at 1e9 and 8e9 parameters,
so scores transition smoothly across scales instead of jumping at
arbitrary size buckets.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ScoreCard",
    "ScoringConfig",
    "compute_scorecard",
    "diversity_bonus",
    "interpolate",
    "logistic",
    "normalize_delta",
    "q",
    "s1",
    "s1a",
    "s1b",
    "s1c",
    "s2",
    "s3",
    "write_scorecards",
]

logger = logging.getLogger(__name__)

ONE_B = 1e9
EIGHT_B = 8e9
_LOG10_8 = math.log10(8.0)


def interpolate(m: float, v_1b: float, v_8b: float) -> float:
    """Linear-in-log10 interpolation between the 1e9 and 8e9 anchors.

    Values outside the anchor range extrapolate on the same line; that
    is allowed but logged, since the anchors are the only calibrated
    points.
    """
    if m <= 0:
        raise ValueError("model scale must be positive")
    if not (ONE_B <= m <= EIGHT_B):
        logger.warning(
            "model scale %.3g outside calibrated range [1e9, 8e9]; "
            "extrapolating",
            m,
        )
    return v_1b + (v_8b - v_1b) * math.log10(m / ONE_B) / _LOG10_8


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    # Rearranged for large negative x to avoid overflow in exp.
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class ScoringConfig:
    """Score coefficients, with capacity-dependent ones given as
    (value at 1e9 params, value at 8e9 params) anchor pairs."""

    alpha_con: float = 0.5
    alpha_mcq: float = 0.3
    beta_mcq: float = 0.5
    alpha_reuse: float = 0.2
    s1_weights_1b: tuple[float, float, float] = (0.20, 0.55, 0.25)
    s1_weights_8b: tuple[float, float, float] = (0.20, 0.50, 0.30)
    q_weights_1b: tuple[float, float, float] = (0.50, 0.30, 0.20)
    q_weights_8b: tuple[float, float, float] = (0.35, 0.35, 0.30)
    c_div: float = 0.05
    lambda_1b: float = 0.5
    lambda_8b: float = 0.8
    # Raw learnability can be negative; squashing it through the logistic
    # keeps both mixture terms of S2/S3 on the same [0,1] scale. Turn off
    # to mix the raw value instead.
    squash_lsca: bool = True

    def __post_init__(self) -> None:
        for name, triple in (
            ("s1_weights_1b", self.s1_weights_1b),
            ("s1_weights_8b", self.s1_weights_8b),
            ("q_weights_1b", self.q_weights_1b),
            ("q_weights_8b", self.q_weights_8b),
        ):
            if abs(sum(triple) - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1, got {triple}")

    def s1_weights(self, m: float) -> tuple[float, float, float]:
        return tuple(
            interpolate(m, a, b)
            for a, b in zip(self.s1_weights_1b, self.s1_weights_8b)
        )  # type: ignore[return-value]

    def q_weights(self, m: float) -> tuple[float, float, float]:
        return tuple(
            interpolate(m, a, b)
            for a, b in zip(self.q_weights_1b, self.q_weights_8b)
        )  # type: ignore[return-value]

    def lam(self, m: float) -> float:
        return interpolate(m, self.lambda_1b, self.lambda_8b)

    def to_dict(self) -> dict:
        return {
            "alpha_con": self.alpha_con,
            "alpha_mcq": self.alpha_mcq,
            "beta_mcq": self.beta_mcq,
            "alpha_reuse": self.alpha_reuse,
            "s1_weights_1b": list(self.s1_weights_1b),
            "s1_weights_8b": list(self.s1_weights_8b),
            "q_weights_1b": list(self.q_weights_1b),
            "q_weights_8b": list(self.q_weights_8b),
            "c_div": self.c_div,
            "lambda_1b": self.lambda_1b,
            "lambda_8b": self.lambda_8b,
            "squash_lsca": self.squash_lsca,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScoringConfig":
        kwargs = dict(d)
        for key in ("s1_weights_1b", "s1_weights_8b", "q_weights_1b", "q_weights_8b"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0,1], got {value}")


def s1a(
    r_con: float,
    r_mcq: float,
    p_reuse: float,
    config: ScoringConfig | None = None,
) -> float:
    """Metadata hygiene: answer consistency, MCQ penalty, reuse penalty."""
    config = config or ScoringConfig()
    _check_unit("R_con", r_con)
    _check_unit("R_mcq", r_mcq)
    _check_unit("P_reuse", p_reuse)
    return (
        config.alpha_con * r_con
        + config.alpha_mcq * (1.0 - config.beta_mcq * r_mcq)
        + config.alpha_reuse * p_reuse
    )


def diversity_bonus(
    source_histogram: Mapping[str, float], c_div: float = 0.05
) -> float:
    """Entropy bonus over the dataset's atomic-source distribution.

    Normalized Shannon entropy (natural log) over the K labels with
    positive mass, scaled by c_div. A single-source dataset earns no
    bonus.
    """
    masses = [v for v in source_histogram.values() if v > 0]
    if not masses:
        raise ValueError("source histogram is empty")
    if len(masses) == 1:
        return 0.0
    total = sum(masses)
    ps = [v / total for v in masses]
    entropy = -sum(p * math.log(p) for p in ps)
    return c_div * entropy / math.log(len(ps))


def s1b(l_sca: float, eps_div: float = 0.0) -> float:
    """Learnability component: squashed utility plus diversity bonus."""
    return logistic(l_sca) + eps_div


def s1c(n_leak: int, n: int) -> float:
    """Leakage-freeness: fraction of instances with no confirmed leak."""
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    if not (0 <= n_leak <= n):
        raise ValueError(f"n_leak must lie in [0, {n}], got {n_leak}")
    return 1.0 - n_leak / n


def s1(
    s1a_value: float,
    s1b_value: float,
    s1c_value: float,
    m: float,
    config: ScoringConfig | None = None,
) -> float:
    config = config or ScoringConfig()
    w = config.s1_weights(m)
    return w[0] * s1a_value + w[1] * s1b_value + w[2] * s1c_value


def normalize_delta(deltas: Sequence[float]) -> list[float]:
    """Min-max normalize a cohort of raw improvements to [0,1].

    A degenerate cohort (all equal, including a single dataset) maps to
    0.5 everywhere: no information either way.
    """
    if len(deltas) < 1:
        raise ValueError("cohort must contain at least one value")
    lo, hi = min(deltas), max(deltas)
    if hi == lo:
        return [0.5] * len(deltas)
    return [(d - lo) / (hi - lo) for d in deltas]


def _blend(delta_norm: float, l_sca: float, m: float, config: ScoringConfig) -> float:
    lam = config.lam(m)
    utility = logistic(l_sca) if config.squash_lsca else l_sca
    return lam * delta_norm + (1.0 - lam) * utility


def s2(
    delta_mean_norm: float,
    l_sca: float,
    m: float,
    config: ScoringConfig | None = None,
) -> float:
    """Dynamic gain: normalized mean-accuracy improvement blended with
    learnability; larger models weight the observed improvement more."""
    return _blend(delta_mean_norm, l_sca, m, config or ScoringConfig())


def s3(
    delta_pass_norm: float,
    l_sca: float,
    m: float,
    config: ScoringConfig | None = None,
) -> float:
    """Frontier gain: same blend over the pass-rate improvement."""
    return _blend(delta_pass_norm, l_sca, m, config or ScoringConfig())


def q(
    s1_value: float,
    s2_value: float,
    s3_value: float,
    m: float,
    config: ScoringConfig | None = None,
) -> float:
    config = config or ScoringConfig()
    w = config.q_weights(m)
    return w[0] * s1_value + w[1] * s2_value + w[2] * s3_value


@dataclass
class ScoreCard:
    """All inputs and outputs of one dataset's quality evaluation."""

    dataset_id: str
    model_scale: float
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "model_scale": self.model_scale,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }


def compute_scorecard(
    dataset_id: str,
    m: float,
    r_con: float,
    r_mcq: float,
    p_reuse: float,
    l_sca: float,
    n_leak: int,
    n: int,
    delta_mean_norm: float,
    delta_pass_norm: float,
    source_histogram: Mapping[str, float] | None = None,
    config: ScoringConfig | None = None,
) -> ScoreCard:
    """Evaluate every component score and the composite for one dataset."""
    config = config or ScoringConfig()
    eps_div = (
        diversity_bonus(source_histogram, config.c_div)
        if source_histogram
        else 0.0
    )
    v1a = s1a(r_con, r_mcq, p_reuse, config)
    v1b = s1b(l_sca, eps_div)
    v1c = s1c(n_leak, n)
    v1 = s1(v1a, v1b, v1c, m, config)
    v2 = s2(delta_mean_norm, l_sca, m, config)
    v3 = s3(delta_pass_norm, l_sca, m, config)
    return ScoreCard(
        dataset_id=dataset_id,
        model_scale=m,
        inputs={
            "r_con": r_con,
            "r_mcq": r_mcq,
            "p_reuse": p_reuse,
            "l_sca": l_sca,
            "eps_div": eps_div,
            "n_leak": n_leak,
            "n": n,
            "delta_mean_norm": delta_mean_norm,
            "delta_pass_norm": delta_pass_norm,
        },
        outputs={
            "s1a": v1a,
            "s1b": v1b,
            "s1c": v1c,
            "s1": v1,
            "s2": v2,
            "s3": v3,
            "q": q(v1, v2, v3, m, config),
        },
    )


def write_scorecards(
    cards: Iterable[ScoreCard],
    path: str | Path,
    config: ScoringConfig | None = None,
) -> None:
    """Persist scorecards with the config snapshot that produced them."""
    config = config or ScoringConfig()
    cards = list(cards)
    payload = {
        "config": config.to_dict(),
        "weights_at_scale": {
            str(c.model_scale): {
                "s1": list(config.s1_weights(c.model_scale)),
                "q": list(config.q_weights(c.model_scale)),
                "lambda": config.lam(c.model_scale),
            }
            for c in cards
        },
        "scorecards": [c.to_dict() for c in cards],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
