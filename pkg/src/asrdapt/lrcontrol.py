"""Metric-driven learning-rate control.

Two families of models are handled differently:

* encoder_decoder -- training is split into fixed-step cycles at constant
  learning rate; the WER standard deviation observed within a cycle sets
  the next cycle's rate:

      eta_next = eta_max - (eta_max - eta_min) * clip(sigma / sigma_ref, 0, 1)

* llm -- the rate is set once from the baseline WER as a proxy for the
  domain gap and then held constant:

      eta = eta_min + (eta_max - eta_min) * clip(wer0, 0, 100) / 100

The control loop talks to any trainer exposing train_steps(n, eta) -> mean
loss and evaluate() -> WER percent. SyntheticTrainer provides a seeded,
fully deterministic stand-in for verification; FileBridgeTrainer drives a
real training job through a pair of append-only JSONL files.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import InsufficientData, InvalidArgument, ParseError

FAMILIES = ("encoder_decoder", "llm")
DEFAULT_SIGMA_REF = 0.5

# Default rate boundaries per model family.
ENCODER_DECODER_BOUNDS = (1e-7, 1e-5)
LLM_BOUNDS = (1e-6, 1e-4)


@dataclass(frozen=True)
class LrBounds:
    eta_min: float
    eta_max: float
    family: str = "encoder_decoder"

    def __post_init__(self):
        if not 0.0 < self.eta_min < self.eta_max:
            raise InvalidArgument(f"need 0 < eta_min < eta_max, got [{self.eta_min}, {self.eta_max}]")
        if self.family not in FAMILIES:
            raise InvalidArgument(f"family must be one of {FAMILIES}, got {self.family!r}")


def default_bounds(family: str) -> LrBounds:
    if family == "encoder_decoder":
        return LrBounds(*ENCODER_DECODER_BOUNDS, family=family)
    if family == "llm":
        return LrBounds(*LLM_BOUNDS, family=family)
    raise InvalidArgument(f"family must be one of {FAMILIES}, got {family!r}")


@dataclass
class CycleRecord:
    cycle_index: int
    eta: float
    wer_evals: list[float]

    @property
    def sigma_wer(self) -> float:
        """Sample (n-1) standard deviation of the in-cycle WERs."""
        if len(self.wer_evals) < 2:
            raise InsufficientData(f"need >= 2 WER evaluations, got {len(self.wer_evals)}")
        return statistics.stdev(self.wer_evals)


@dataclass(frozen=True)
class SchedulerConfig:
    bounds: LrBounds
    sigma_ref: float = DEFAULT_SIGMA_REF
    steps_per_cycle: int = 500
    eval_every: int = 50
    patience: int = 5
    min_delta: float = 0.1

    def __post_init__(self):
        if self.sigma_ref <= 0:
            raise InvalidArgument(f"sigma_ref must be positive, got {self.sigma_ref}")
        if not 0 < self.eval_every <= self.steps_per_cycle:
            raise InvalidArgument("need 0 < eval_every <= steps_per_cycle")
        if self.steps_per_cycle % self.eval_every:
            raise InvalidArgument("steps_per_cycle must be a multiple of eval_every")
        if self.patience < 1:
            raise InvalidArgument(f"patience must be >= 1, got {self.patience}")
        if self.min_delta < 0:
            raise InvalidArgument(f"min_delta must be >= 0, got {self.min_delta}")


# ---------------------------------------------------------------------------
# Rate rules
# ---------------------------------------------------------------------------


def next_cycle_lr(record: CycleRecord, config: SchedulerConfig) -> float:
    """Rate for the next cycle from the in-cycle WER spread.

    sigma = 0 returns eta_max and sigma >= sigma_ref returns eta_min,
    both exactly (the clip boundaries short-circuit so float rounding in
    the interpolation cannot leak through).
    """
    sigma = record.sigma_wer
    b = config.bounds
    ratio = sigma / config.sigma_ref
    if ratio <= 0.0:
        return b.eta_max
    if ratio >= 1.0:
        return b.eta_min
    return b.eta_max - (b.eta_max - b.eta_min) * ratio


def initial_lr_llm(wer0: float, bounds: LrBounds) -> float:
    """Initial rate scaled linearly with the baseline WER, clipped at 100%.

    The clip boundaries (wer0 = 0 and wer0 >= 100) return the bounds
    exactly.
    """
    if wer0 < 0:
        raise InvalidArgument(f"wer0 must be >= 0, got {wer0}")
    if wer0 == 0.0:
        return bounds.eta_min
    if wer0 >= 100.0:
        return bounds.eta_max
    return bounds.eta_min + (bounds.eta_max - bounds.eta_min) * wer0 / 100.0


def initial_lr_encdec(bounds: LrBounds) -> float:
    """Geometric mean of the bounds: the scale-symmetric starting point."""
    return math.sqrt(bounds.eta_min * bounds.eta_max)


def should_stop(wer_history: list[float], patience: int, min_delta: float) -> bool:
    """True once the best WER stops improving by >= min_delta.

    Compares the best WER of the last `patience` evaluations against the
    best before them; histories of length <= patience never stop.
    """
    if patience < 1:
        raise InvalidArgument(f"patience must be >= 1, got {patience}")
    if len(wer_history) <= patience:
        return False
    return min(wer_history[-patience:]) > min(wer_history[:-patience]) - min_delta


# ---------------------------------------------------------------------------
# Trainer contract and control loop
# ---------------------------------------------------------------------------


@runtime_checkable
class TrainerInterface(Protocol):
    """What any trainer must expose to the control loop."""

    def train_steps(self, n: int, eta: float) -> float:
        """Run n optimizer steps at rate eta; return the mean loss."""

    def evaluate(self) -> float:
        """Return the current validation WER percent without training."""


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    eta: float
    loss: float
    wer: float


@dataclass
class AdaptationResult:
    points: list[TrajectoryPoint]
    cycles: list[CycleRecord]
    stopped_reason: str
    wer0: float | None = None

    @property
    def best_index(self) -> int:
        wers = [p.wer for p in self.points]
        return int(np.argmin(wers))

    @property
    def best_point(self) -> TrajectoryPoint:
        return self.points[self.best_index]

    @property
    def final_eta(self) -> float:
        return self.points[-1].eta

    def summary(self) -> dict:
        best = self.best_point
        return {
            "best_step": best.step,
            "best_wer": best.wer,
            "final_eta": self.final_eta,
            "stopped_reason": self.stopped_reason,
        }


def run_adaptation(trainer: TrainerInterface, config: SchedulerConfig,
                   family: str | None = None, max_cycles: int = 50,
                   adapt_llm_per_cycle: bool = False) -> AdaptationResult:
    """Cycle loop: train in eval_every chunks, evaluate, adapt the rate.

    encoder_decoder starts at the geometric mean of the bounds and
    re-applies the sigma rule after every full cycle; llm evaluates a
    baseline WER first, maps it through the linear rule and holds the
    result (unless adapt_llm_per_cycle is set). Stops on the patience
    rule or after max_cycles.
    """
    family = family or config.bounds.family
    if family not in FAMILIES:
        raise InvalidArgument(f"family must be one of {FAMILIES}, got {family!r}")

    wer0 = None
    if family == "llm":
        wer0 = trainer.evaluate()
        eta = initial_lr_llm(wer0, config.bounds)
    else:
        eta = initial_lr_encdec(config.bounds)

    points: list[TrajectoryPoint] = []
    cycles: list[CycleRecord] = []
    wers: list[float] = []
    step = 0
    stopped = "max_cycles"
    evals_per_cycle = config.steps_per_cycle // config.eval_every

    for j in range(max_cycles):
        record = CycleRecord(cycle_index=j, eta=eta, wer_evals=[])
        cycles.append(record)
        for _ in range(evals_per_cycle):
            loss = trainer.train_steps(config.eval_every, eta)
            wer = trainer.evaluate()
            step += config.eval_every
            points.append(TrajectoryPoint(step, eta, loss, wer))
            record.wer_evals.append(wer)
            wers.append(wer)
            if should_stop(wers, config.patience, config.min_delta):
                stopped = "early_stop"
                break
        if stopped == "early_stop":
            break
        if (family == "encoder_decoder" or adapt_llm_per_cycle) and len(record.wer_evals) >= 2:
            eta = next_cycle_lr(record, config)

    return AdaptationResult(points=points, cycles=cycles, stopped_reason=stopped, wer0=wer0)


def write_trajectory_csv(points: list[TrajectoryPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "eta", "loss", "wer"])
        for p in points:
            writer.writerow([p.step, repr(p.eta), repr(p.loss), repr(p.wer)])


# ---------------------------------------------------------------------------
# Synthetic trainer
# ---------------------------------------------------------------------------


class SyntheticTrainer:
    """Seeded stand-in for a fine-tuning job.

    The hidden WER state contracts toward wer_floor at a speed set by
    convergence_gain * eta; evaluations add measurement noise whose
    standard deviation is

        noise_gain * WER * max(0, eta / stability_threshold - 1) + base_jitter

    so rates above the stability threshold destabilize the metric while
    the loss keeps decaying monotonically. Optional overfitting raises
    the hidden WER by overfit_gain per step past overfit_start_step.
    """

    def __init__(self, wer0: float, wer_floor: float, convergence_gain: float,
                 stability_threshold: float, noise_gain: float, seed: int = 0,
                 base_jitter: float = 0.05, overfit_start_step: int | None = None,
                 overfit_gain: float = 0.0, loss_scale: float = 2.0,
                 loss_rate: float = 500.0, loss_floor: float = 0.5):
        if wer_floor >= wer0:
            raise InvalidArgument(f"wer_floor must be below wer0, got {wer_floor} >= {wer0}")
        if convergence_gain < 0 or noise_gain < 0 or base_jitter < 0:
            raise InvalidArgument("gains must be >= 0")
        if stability_threshold <= 0:
            raise InvalidArgument(f"stability_threshold must be positive, got {stability_threshold}")
        self.wer_floor = float(wer_floor)
        self.convergence_gain = float(convergence_gain)
        self.stability_threshold = float(stability_threshold)
        self.noise_gain = float(noise_gain)
        self.base_jitter = float(base_jitter)
        self.overfit_start_step = overfit_start_step
        self.overfit_gain = float(overfit_gain)
        self.loss_scale = float(loss_scale)
        self.loss_rate = float(loss_rate)
        self.loss_floor = float(loss_floor)
        self._wer = float(wer0)
        self._step = 0
        self._eta_integral = 0.0
        self._last_eta = 0.0
        self._rng = np.random.Generator(np.random.Philox(key=np.uint64(seed & (2**64 - 1))))

    def _loss_at(self, eta_integral: float) -> float:
        return self.loss_scale * math.exp(-self.loss_rate * eta_integral) + self.loss_floor

    def train_steps(self, n: int, eta: float) -> float:
        if n < 1 or eta <= 0:
            raise InvalidArgument(f"need n >= 1 and eta > 0, got n={n}, eta={eta}")
        self._last_eta = eta
        losses = 0.0
        for _ in range(n):
            self._step += 1
            self._wer = max(self.wer_floor,
                            self._wer - self.convergence_gain * eta * (self._wer - self.wer_floor))
            if self.overfit_start_step is not None and self._step > self.overfit_start_step:
                self._wer += self.overfit_gain
            self._eta_integral += eta
            losses += self._loss_at(self._eta_integral)
        return losses / n

    def evaluate(self) -> float:
        """Hidden WER plus measurement noise; never trains."""
        excess = max(0.0, self._last_eta / self.stability_threshold - 1.0)
        std = self.noise_gain * self._wer * excess + self.base_jitter
        jitter = float(self._rng.normal(0.0, std)) if std > 0 else 0.0
        return max(0.0, self._wer + jitter)


# ---------------------------------------------------------------------------
# File-based trainer bridge
# ---------------------------------------------------------------------------


class FileBridgeTrainer:
    """Drives an external training job through two append-only JSONL files.

    Each exchange appends one {"eta": float, "steps": int} command line
    and waits for the matching {"loss": float|null, "wer": float} result
    line; steps=0 requests an evaluation-only pass. Exchanges are
    strictly ordered, so line k of the result file answers command k.
    """

    def __init__(self, command_path: str | Path, result_path: str | Path,
                 timeout: float = 600.0, poll_interval: float = 0.05):
        self.command_path = Path(command_path)
        self.result_path = Path(result_path)
        self.timeout = float(timeout)
        self.poll_interval = float(poll_interval)
        self._exchanges = 0
        self._last_wer: float | None = None

    def _exchange(self, eta: float, steps: int) -> dict:
        with open(self.command_path, "a") as f:
            f.write(json.dumps({"eta": eta, "steps": steps}) + "\n")
        wanted = self._exchanges
        deadline = time.monotonic() + self.timeout
        while True:
            if self.result_path.exists():
                lines = self.result_path.read_text().splitlines()
                if len(lines) > wanted:
                    self._exchanges += 1
                    try:
                        reply = json.loads(lines[wanted])
                        return {"loss": reply.get("loss"), "wer": float(reply["wer"])}
                    except (ValueError, KeyError, TypeError) as exc:
                        raise ParseError(f"bad result line {wanted}: {lines[wanted]!r}") from exc
            if time.monotonic() > deadline:
                raise TimeoutError(f"no result line {wanted} within {self.timeout} s")
            time.sleep(self.poll_interval)

    def train_steps(self, n: int, eta: float) -> float:
        reply = self._exchange(eta, n)
        self._last_wer = reply["wer"]
        if reply["loss"] is None:
            raise ParseError("training exchange returned no loss")
        return float(reply["loss"])

    def evaluate(self) -> float:
        if self._last_wer is None:
            self._last_wer = self._exchange(0.0, 0)["wer"]
        return self._last_wer
