"""Gated Monte Carlo photon counting for the four detector arrangements.

Everything that can make a detector click arrives as an independent Poisson
stream per gate: pairs detected on both sides, pairs or noise photons detected
on one side only, and dark counts. Over a block of gates each stream yields a
Poisson number of events placed on uniformly drawn gates. A detector clicks on
a gate when any of its streams lands there, at most once per gate.

Channel 1 is the idler detector and channel 2 the signal detector.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import pairwise

import numpy as np
from numpy.typing import NDArray

from .core import (
    Channel,
    CountRecord,
    EmptyRunError,
    ExperimentKind,
    InvalidInputError,
    InvalidPlanError,
    PhotonStatistics,
)
from .polarization import (
    TwoPhotonState,
    analyzer_joint_probs,
    coincidence_prob,
    marginal_pass_prob,
)
from .source import sample_pair_count
from .utils import block_generator, require_finite

logger = logging.getLogger(__name__)

BLOCK_GATES = 1 << 25
FOCK_CHUNK = 1 << 20

Seed = int | np.random.SeedSequence


@dataclass(frozen=True)
class DetectorConfig:
    """Gated InGaAs detector pair; efficiencies include all collection loss."""

    eta_signal: float = 0.007
    eta_idler: float = 0.008
    dark_prob: float = 5e-6  # per gate per detector
    gate_rate_khz: float = 780.0

    def __post_init__(self) -> None:
        for name in ("eta_signal", "eta_idler", "dark_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.gate_rate_khz > 0 or not math.isfinite(self.gate_rate_khz):
            raise InvalidInputError("gate_rate_khz must be > 0")

    def efficiency(self, channel: Channel) -> float:
        """Detection efficiency of ``channel``."""
        match channel:
            case Channel.SIGNAL:
                return self.eta_signal
            case Channel.IDLER:
                return self.eta_idler


@dataclass(frozen=True)
class AnalyzerSetting:
    """Detection angles in radians; theta1 on the idler, theta2 on the signal.

    ``compensation_offset`` is a physical half-wave-plate setting added to
    HWP2 and HWP3, so it rotates both detection angles by twice its value.
    """

    theta1: float = 0.0
    theta2: float = 0.0
    compensation_offset: float = 0.0

    def __post_init__(self) -> None:
        require_finite(self.theta1, self.theta2, self.compensation_offset)

    def angles(self) -> tuple[float, float]:
        """Analyzer angles with the compensation offset applied."""
        shift = 2.0 * self.compensation_offset
        return self.theta1 + shift, self.theta2 + shift


@dataclass(frozen=True)
class NoisePolarization:
    """Polarization of noise photons: a polarized fraction at a fixed angle."""

    fraction: float = 0.0
    angle: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise InvalidInputError("polarized noise fraction must lie in [0, 1]")
        require_finite(self.angle)

    def pass_prob(self, theta: float) -> float:
        """Probability that a noise photon passes a polarizer at ``theta``."""
        polarized = math.cos(theta - self.angle) ** 2
        return (1.0 - self.fraction) * 0.5 + self.fraction * polarized


@dataclass(frozen=True)
class EventRates:
    """Per-gate means of the independent click-producing event streams."""

    both: float = 0.0
    only_1: float = 0.0
    only_2: float = 0.0
    dark_prob: float = 0.0

    def __post_init__(self) -> None:
        require_finite(self.both, self.only_1, self.only_2)
        # round-off in the thinning differences can leave tiny negatives
        for name in ("both", "only_1", "only_2"):
            if getattr(self, name) < 0:
                object.__setattr__(self, name, 0.0)
        if not 0.0 <= self.dark_prob <= 1.0:
            raise InvalidInputError("dark probability must lie in [0, 1]")


@dataclass(frozen=True)
class ClickProbabilities:
    click_1: float
    click_2: float
    coincidence: float

    @property
    def accidental(self) -> float:
        """Delayed-gate coincidence probability; gates are independent."""
        return self.click_1 * self.click_2


def _check_means(*means: float) -> None:
    for mean in means:
        if not math.isfinite(mean) or mean < 0:
            raise InvalidInputError(f"means must be finite and >= 0, got {mean!r}")


def signal_idler_rates(
    state: TwoPhotonState,
    mu: float,
    noise_mu: float,
    analyzers: AnalyzerSetting,
    det: DetectorConfig,
    *,
    noise: NoisePolarization | None = None,
    classical_surrogate: bool = False,
) -> EventRates:
    """Event streams of the signal-idler arrangement.

    With ``classical_surrogate`` the pair streams are replaced by independent
    streams with the same per-channel means.
    """
    _check_means(mu, noise_mu)
    noise = noise or NoisePolarization()
    theta1, theta2 = analyzers.angles()
    eta1, eta2 = det.eta_idler, det.eta_signal
    pp, pf, fp, _ = analyzer_joint_probs(state, theta1, theta2)
    single_1 = eta1 * (pp + pf)
    single_2 = eta2 * (pp + fp)
    both = 0.0 if classical_surrogate else eta1 * eta2 * pp
    return EventRates(
        both=mu * both,
        only_1=mu * (single_1 - both) + noise_mu * eta1 * noise.pass_prob(theta1),
        only_2=mu * (single_2 - both) + noise_mu * eta2 * noise.pass_prob(theta2),
        dark_prob=det.dark_prob,
    )


def degenerate_rates(
    state: TwoPhotonState,
    mu: float,
    noise_mu: float,
    analyzers: AnalyzerSetting,
    det: DetectorConfig,
    *,
    noise: NoisePolarization | None = None,
) -> EventRates:
    """Event streams behind the 50/50 splitter of the degenerate channel.

    Half of the pairs split and follow the joint analyzer law. A quarter put
    both photons on each side, where they can produce one click at most.
    Noise photons take either side with probability 1/2.
    """
    _check_means(mu, noise_mu)
    noise = noise or NoisePolarization()
    theta1, theta2 = analyzers.angles()
    eta1, eta2 = det.eta_idler, det.eta_signal
    pp, pf, fp, _ = analyzer_joint_probs(state, theta1, theta2)
    split_both = eta1 * eta2 * pp

    def bunched(theta: float, eta: float) -> float:
        marginals = marginal_pass_prob(state, 1, theta) + marginal_pass_prob(state, 2, theta)
        return eta * marginals - eta**2 * coincidence_prob(state, theta, theta)

    only_1 = 0.5 * (eta1 * (pp + pf) - split_both) + 0.25 * bunched(theta1, eta1)
    only_2 = 0.5 * (eta2 * (pp + fp) - split_both) + 0.25 * bunched(theta2, eta2)
    return EventRates(
        both=mu * 0.5 * split_both,
        only_1=mu * only_1 + 0.5 * noise_mu * eta1 * noise.pass_prob(theta1),
        only_2=mu * only_2 + 0.5 * noise_mu * eta2 * noise.pass_prob(theta2),
        dark_prob=det.dark_prob,
    )


def self_split_rates(
    channel: Channel, mu: float, noise_mu: float, det: DetectorConfig
) -> EventRates:
    """Event streams of one channel sent through a 50/50 splitter, no analyzer."""
    _check_means(mu, noise_mu)
    arm = 0.5 * det.efficiency(channel) * (mu + noise_mu)
    return EventRates(only_1=arm, only_2=arm, dark_prob=det.dark_prob)


def click_probabilities(rates: EventRates) -> ClickProbabilities:
    """Exact per-gate click and coincidence probabilities for ``rates``."""
    keep = 1.0 - rates.dark_prob
    no_1 = keep * math.exp(-(rates.both + rates.only_1))
    no_2 = keep * math.exp(-(rates.both + rates.only_2))
    neither = keep**2 * math.exp(-(rates.both + rates.only_1 + rates.only_2))
    return ClickProbabilities(
        click_1=1.0 - no_1,
        click_2=1.0 - no_2,
        coincidence=1.0 - no_1 - no_2 + neither,
    )


@dataclass(frozen=True)
class BlockTally:
    """Counts of one gate block plus the flags needed to join neighbours."""

    gates: int
    singles_1: int
    singles_2: int
    coincidences: int
    accidentals: int
    first_click_2: bool
    last_click_1: bool


@dataclass(frozen=True)
class _BlockTask:
    seed: Seed
    key: tuple[int, ...]
    index: int
    gates: int
    rates: EventRates
    # set for Fock-state self-split runs
    fock_photons: int | None = None
    fock_eta: float = 0.0
    fock_noise_mu: float = 0.0


def _scatter(rng: np.random.Generator, gates: int, mean: float) -> NDArray[np.int64]:
    """Gate indices of a Poisson stream with ``mean`` events per gate."""
    count = sample_pair_count(gates * mean, rng)
    return rng.integers(0, gates, size=count, dtype=np.int64)


def _dark_gates(rng: np.random.Generator, gates: int, prob: float) -> NDArray[np.int64]:
    """Gate indices of dark clicks with per-gate probability ``prob``."""
    if prob >= 1.0:
        return np.arange(gates, dtype=np.int64)
    return _scatter(rng, gates, -math.log1p(-prob))


def _tally(click_1: NDArray[np.int64], click_2: NDArray[np.int64], gates: int) -> BlockTally:
    """Tally sorted, duplicate-free click gate indices of one block."""
    coincidences = np.intersect1d(click_1, click_2, assume_unique=True).size
    delayed = click_1[click_1 < gates - 1] + 1
    accidentals = np.intersect1d(delayed, click_2, assume_unique=True).size
    return BlockTally(
        gates=gates,
        singles_1=int(click_1.size),
        singles_2=int(click_2.size),
        coincidences=int(coincidences),
        accidentals=int(accidentals),
        first_click_2=bool(click_2.size and click_2[0] == 0),
        last_click_1=bool(click_1.size and click_1[-1] == gates - 1),
    )


def _sparse_block(task: _BlockTask) -> BlockTally:
    """Tally one block by scattering each event stream over its gates."""
    rng = block_generator(task.seed, task.key, task.index)
    rates, gates = task.rates, task.gates
    both = _scatter(rng, gates, rates.both)
    only_1 = _scatter(rng, gates, rates.only_1)
    only_2 = _scatter(rng, gates, rates.only_2)
    dark_1 = _dark_gates(rng, gates, rates.dark_prob)
    dark_2 = _dark_gates(rng, gates, rates.dark_prob)
    click_1 = np.unique(np.concatenate([both, only_1, dark_1]))
    click_2 = np.unique(np.concatenate([both, only_2, dark_2]))
    return _tally(click_1, click_2, gates)


def _fock_block(task: _BlockTask) -> BlockTally:
    """Dense per-gate sampling with a fixed photon number in every gate."""
    rng = block_generator(task.seed, task.key, task.index)
    photons = task.fock_photons or 0
    eta = task.fock_eta
    arms = [0.5 * eta, 0.5 * eta, 1.0 - eta]
    clicks_1: list[NDArray[np.int64]] = []
    clicks_2: list[NDArray[np.int64]] = []
    for start in range(0, task.gates, FOCK_CHUNK):
        n = min(FOCK_CHUNK, task.gates - start)
        detected = np.zeros((n, 2), dtype=np.int64)
        if photons:
            detected += rng.multinomial(photons, arms, size=n)[:, :2]
        if task.fock_noise_mu > 0:
            detected += rng.poisson(0.5 * eta * task.fock_noise_mu, size=(n, 2))
        dark = rng.random((n, 2)) < task.rates.dark_prob
        fired = (detected > 0) | dark
        clicks_1.append(np.flatnonzero(fired[:, 0]).astype(np.int64) + start)
        clicks_2.append(np.flatnonzero(fired[:, 1]).astype(np.int64) + start)
    return _tally(np.concatenate(clicks_1), np.concatenate(clicks_2), task.gates)


def _run_block(task: _BlockTask) -> BlockTally:
    """Tally one block with the sampler its task asks for."""
    tally = _fock_block(task) if task.fock_photons is not None else _sparse_block(task)
    logger.debug(
        "block %d of stream %s: %d/%d singles, %d coincidences",
        task.index,
        task.key,
        tally.singles_1,
        tally.singles_2,
        tally.coincidences,
    )
    return tally


def merge_tallies(tallies: list[BlockTally]) -> CountRecord:
    """Join consecutive blocks, counting delayed pairs across each boundary."""
    boundary = sum(
        1 for a, b in pairwise(tallies) if a.last_click_1 and b.first_click_2
    )
    return CountRecord(
        gates=sum(t.gates for t in tallies),
        singles_1=sum(t.singles_1 for t in tallies),
        singles_2=sum(t.singles_2 for t in tallies),
        coincidences=sum(t.coincidences for t in tallies),
        accidentals_estimate=sum(t.accidentals for t in tallies) + boundary,
    )


def _check_gates(n_gates: int) -> None:
    if n_gates == 0:
        raise EmptyRunError("a counting run needs at least one gate")
    if n_gates < 0:
        raise InvalidInputError(f"gate count must be >= 0, got {n_gates}")


def _blocks(n_gates: int) -> list[int]:
    """Block sizes covering ``n_gates``."""
    full, rest = divmod(n_gates, BLOCK_GATES)
    return [BLOCK_GATES] * full + ([rest] if rest else [])


def _execute(tasks: list[_BlockTask], workers: int) -> CountRecord:
    """Run block tasks serially or in a process pool and join their tallies."""
    if workers < 1:
        raise InvalidInputError(f"workers must be >= 1, got {workers}")
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            tallies = list(pool.map(_run_block, tasks))
    else:
        tallies = [_run_block(task) for task in tasks]
    return merge_tallies(tallies)


def simulate(
    n_gates: int,
    rates: EventRates,
    seed: Seed,
    *,
    key: tuple[int, ...] = (),
    workers: int = 1,
) -> CountRecord:
    """Sample a counting run for precomputed event streams.

    Block ``b`` draws from the substream ``(*key, b)`` of ``seed``, so the
    record does not depend on ``workers``.
    """
    _check_gates(n_gates)
    tasks = [
        _BlockTask(seed=seed, key=key, index=i, gates=g, rates=rates)
        for i, g in enumerate(_blocks(n_gates))
    ]
    record = _execute(tasks, workers)
    logger.info(
        "%d gates: singles %d/%d, coincidences %d, accidentals %d",
        record.gates,
        record.singles_1,
        record.singles_2,
        record.coincidences,
        record.accidentals_estimate,
    )
    return record


def run_gates(
    n_gates: int,
    state: TwoPhotonState,
    mu: float,
    noise_mu: float,
    analyzers: AnalyzerSetting,
    det: DetectorConfig,
    kind: ExperimentKind,
    seed: Seed,
    *,
    key: tuple[int, ...] = (),
    workers: int = 1,
    noise: NoisePolarization | None = None,
    classical_surrogate: bool = False,
    statistics: PhotonStatistics = PhotonStatistics.POISSON,
) -> CountRecord:
    """Run ``n_gates`` gates of the arrangement ``kind``.

    ``state`` and ``analyzers`` are ignored by the self-split kinds.
    """
    match kind:
        case ExperimentKind.SIGNAL_IDLER:
            if statistics is not PhotonStatistics.POISSON:
                raise InvalidInputError("signal-idler runs support Poisson pairs only")
            rates = signal_idler_rates(
                state,
                mu,
                noise_mu,
                analyzers,
                det,
                noise=noise,
                classical_surrogate=classical_surrogate,
            )
            return simulate(n_gates, rates, seed, key=key, workers=workers)
        case ExperimentKind.DEGENERATE:
            if statistics is not PhotonStatistics.POISSON:
                raise InvalidInputError("degenerate runs support Poisson pairs only")
            return run_degenerate(
                n_gates,
                state,
                mu,
                noise_mu,
                analyzers,
                det,
                seed,
                key=key,
                workers=workers,
                noise=noise,
            )
        case ExperimentKind.SIGNAL_SPLIT | ExperimentKind.IDLER_SPLIT:
            channel = Channel.SIGNAL if kind is ExperimentKind.SIGNAL_SPLIT else Channel.IDLER
            return run_self_split(
                n_gates,
                channel,
                mu,
                noise_mu,
                det,
                seed,
                key=key,
                workers=workers,
                statistics=statistics,
            )
        case _:
            raise InvalidPlanError(f"unknown experiment kind {kind!r}")


def run_degenerate(
    n_gates: int,
    state: TwoPhotonState,
    mu: float,
    noise_mu: float,
    analyzers: AnalyzerSetting,
    det: DetectorConfig,
    seed: Seed,
    *,
    key: tuple[int, ...] = (),
    workers: int = 1,
    noise: NoisePolarization | None = None,
) -> CountRecord:
    """Degenerate pairs post-selected on splitting at the 50/50 splitter."""
    rates = degenerate_rates(state, mu, noise_mu, analyzers, det, noise=noise)
    return simulate(n_gates, rates, seed, key=key, workers=workers)


def run_self_split(
    n_gates: int,
    channel: Channel,
    mu: float,
    noise_mu: float,
    det: DetectorConfig,
    seed: Seed,
    *,
    key: tuple[int, ...] = (),
    workers: int = 1,
    statistics: PhotonStatistics = PhotonStatistics.POISSON,
) -> CountRecord:
    """One output channel through a 50/50 splitter onto both detectors.

    Under ``PhotonStatistics.FOCK`` every gate holds exactly ``mu`` channel
    photons (``mu`` must be a whole number) and gates are sampled densely.
    """
    match statistics:
        case PhotonStatistics.POISSON:
            rates = self_split_rates(channel, mu, noise_mu, det)
            return simulate(n_gates, rates, seed, key=key, workers=workers)
        case PhotonStatistics.FOCK:
            _check_gates(n_gates)
            _check_means(mu, noise_mu)
            if mu != int(mu):
                raise InvalidInputError(f"Fock photon number must be whole, got {mu!r}")
            rates = EventRates(dark_prob=det.dark_prob)
            tasks = [
                _BlockTask(
                    seed=seed,
                    key=key,
                    index=i,
                    gates=g,
                    rates=rates,
                    fock_photons=int(mu),
                    fock_eta=det.efficiency(channel),
                    fock_noise_mu=noise_mu,
                )
                for i, g in enumerate(_blocks(n_gates))
            ]
            return _execute(tasks, workers)
