"""Load predictor: watches backlog length and its rate of change, and asks
for more processing engines before the queue runs away."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class QueueMetrics:
    length: int
    roc: float  # messages/second, signed
    sampled_at: float


@dataclass
class ScalingDecision:
    kind: str  # "none" | "small" | "large"
    count: int = 0


class LoadPredictor:
    """Threshold table over (queue length, ROC).

    A long queue or a fast-growing one asks for a large batch of PEs; a
    moderate signal asks for a small one. After any non-none decision the
    predictor stays quiet for a timeout so freshly scheduled PEs get a
    chance to bite.
    """

    def __init__(self, config):
        self.config = config
        self._prev_length = None
        self._prev_at = None
        self._last_fired = None

    def sample(self, length: int, now: float) -> QueueMetrics:
        if self._prev_at is None or now <= self._prev_at:
            roc = 0.0
        else:
            roc = (length - self._prev_length) / (now - self._prev_at)
        self._prev_length = length
        self._prev_at = now
        return QueueMetrics(length=length, roc=roc, sampled_at=now)

    def evaluate(self, metrics: QueueMetrics) -> ScalingDecision:
        cfg = self.config
        if (
            self._last_fired is not None
            and metrics.sampled_at - self._last_fired < cfg.predictor_timeout
        ):
            return ScalingDecision("none")

        length, roc = metrics.length, metrics.roc
        if length >= cfg.len_high or roc >= cfg.roc_high:
            decision = ScalingDecision("large", cfg.scale_large)
        elif length >= cfg.len_low and roc >= cfg.roc_low:
            decision = ScalingDecision("large", cfg.scale_large)
        elif length >= cfg.len_low and roc < cfg.roc_low:
            decision = ScalingDecision("small", cfg.scale_small)
        elif length < cfg.len_low and roc >= cfg.roc_low:
            decision = ScalingDecision("small", cfg.scale_small)
        else:
            decision = ScalingDecision("none")

        if decision.kind != "none":
            self._last_fired = metrics.sampled_at
        return decision
