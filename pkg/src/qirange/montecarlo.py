"""Event-level Monte Carlo oracle for the detection and error statistics.

Coincidences are built from single-photon Bernoulli draws (one per signal
photon) rather than from the closed-form coincidence probabilities, so the
squared structure of the two-photon formulas is checked, not assumed.

Randomness: the trial index space is cut into fixed blocks of
``BLOCK_SIZE`` trials. Block ``b`` draws from its own Philox stream seeded by
``SeedSequence(seed, spawn_key=(purpose, b))``, so every trial's randomness
is a function of ``(seed, trial index)`` only. Workers take whole blocks and
counts are summed as integers, which makes aggregates bit-identical for any
number of workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .detection import ALL_PROTOCOLS, ChannelParams, Protocol, detection_probabilities, single_photon_false_alarm
from .errors import InvalidParameterError
from .hypothesis import PriorPair
from .range_delay import DelayWindow

BLOCK_SIZE = 1 << 16
EXACT_CI_BELOW = 30
Z95 = 1.959963984540054

_PURPOSE_COINCIDENCE = 1
_PURPOSE_ERROR = 2
_PURPOSE_DELAY = 3


class Hypothesis(str, enum.Enum):
    H0 = "h0"
    H1 = "h1"

    @classmethod
    def parse(cls, value: "str | Hypothesis") -> "Hypothesis":
        if isinstance(value, Hypothesis):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise InvalidParameterError(f"unknown hypothesis {value!r}") from None


def _check_count(name: str, value: int, minimum: int = 1) -> None:
    if int(value) != value or value < minimum:
        raise InvalidParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")


def _check_seed(seed: int) -> None:
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise InvalidParameterError(f"seed must be an unsigned 64-bit integer, got {seed!r}")


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo campaign under a fixed hypothesis.

    ``required_positives`` selects the k-of-m rule; None means all ``shots``
    must fire, which is the rule behind the p**m formulas.
    """

    protocol: Protocol
    params: ChannelParams
    hypothesis: Hypothesis
    num_trials: int
    seed: int = 0
    shots: int = 1
    required_positives: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Protocol.parse(self.protocol))
        object.__setattr__(self, "hypothesis", Hypothesis.parse(self.hypothesis))
        _check_count("num_trials", self.num_trials)
        _check_count("shots", self.shots)
        _check_seed(self.seed)
        if self.required_positives is not None:
            _check_count("required_positives", self.required_positives)
            if self.required_positives > self.shots:
                raise InvalidParameterError("required_positives cannot exceed shots")

    @property
    def threshold(self) -> int:
        return self.shots if self.required_positives is None else self.required_positives


@dataclass(frozen=True)
class TrialOutcome:
    positives: int
    trials: int
    frequency: float
    ci95_half_width: float
    ci_low: float
    ci_high: float
    ci_method: str

    @classmethod
    def from_counts(cls, positives: int, trials: int) -> "TrialOutcome":
        if not 0 <= positives <= trials:
            raise InvalidParameterError(f"positives={positives} outside [0, {trials}]")
        freq = positives / trials
        if positives < EXACT_CI_BELOW:
            # Clopper-Pearson
            lo = 0.0 if positives == 0 else float(stats.beta.ppf(0.025, positives, trials - positives + 1))
            hi = 1.0 if positives == trials else float(stats.beta.ppf(0.975, positives + 1, trials - positives))
            return cls(positives, trials, freq, 0.5 * (hi - lo), lo, hi, "exact")
        half = Z95 * math.sqrt(freq * (1.0 - freq) / trials)
        return cls(positives, trials, freq, half, max(0.0, freq - half), min(1.0, freq + half), "normal")

    def z_score(self, expected: float) -> float:
        """Deviation from ``expected`` in binomial standard deviations at ``expected``."""
        sigma = math.sqrt(expected * (1.0 - expected) / self.trials)
        diff = self.frequency - expected
        if sigma == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / sigma


def block_rng(seed: int, purpose: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(purpose, block))))


def _blocks(num_trials: int) -> list[tuple[int, int]]:
    """(block index, trials in block) pairs covering ``num_trials``."""
    full, rest = divmod(num_trials, BLOCK_SIZE)
    out = [(b, BLOCK_SIZE) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out


def _run_blocks(fn: Callable, args: tuple, blocks: list[tuple[int, int]], workers: int) -> list:
    """Apply ``fn(*args, block, size)`` to every block, results in block order."""
    _check_count("workers", workers)
    if workers == 1 or len(blocks) == 1:
        return [fn(*args, b, n) for b, n in blocks]
    chunks = np.array_split(np.arange(len(blocks)), min(workers, len(blocks)))
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [pool.submit(_run_chunk, fn, args, [blocks[i] for i in chunk]) for chunk in chunks]
        results = []
        for fut in futures:
            results.extend(fut.result())
    return results


def _run_chunk(fn: Callable, args: tuple, blocks: list[tuple[int, int]]) -> list:
    return [fn(*args, b, n) for b, n in blocks]


def sample_shots(
    rng: np.random.Generator,
    shape: int | tuple[int, ...],
    protocol: Protocol,
    params: ChannelParams,
    present: bool | np.ndarray,
) -> np.ndarray:
    """Boolean coincidence outcome of one shot for each element of ``shape``.

    Each signal photon slot independently picks up a (gated) background
    photon; the coincidence needs every slot filled. When the target is
    present the return survives with probability eta and then fires the
    coincidence outright. ``present`` may be an array broadcastable to
    ``shape``; the literal ``False`` skips the return draw.
    """
    p_single = min(single_photon_false_alarm(protocol, params), 1.0)
    fires = rng.random(shape) < p_single
    for _ in range(protocol.signal_photons - 1):
        fires &= rng.random(shape) < p_single
    if present is False:
        return fires
    returned = rng.random(shape) < params.eta
    return fires | (returned & present)


def _coincidence_block(config: TrialConfig, block: int, size: int) -> int:
    rng = block_rng(config.seed, _PURPOSE_COINCIDENCE, block)
    present = config.hypothesis is Hypothesis.H1
    hits = np.zeros(size, dtype=np.int64)
    for _ in range(config.shots):
        hits += sample_shots(rng, size, config.protocol, config.params, present)
    return int(np.count_nonzero(hits >= config.threshold))


def simulate_coincidence(config: TrialConfig, *, workers: int = 1) -> TrialOutcome:
    """Count trials declared positive under the configured hypothesis."""
    counts = _run_blocks(_coincidence_block, (config,), _blocks(config.num_trials), workers)
    return TrialOutcome.from_counts(sum(counts), config.num_trials)


def _error_block(
    protocol: Protocol, params: ChannelParams, priors: PriorPair, seed: int, block: int, size: int
) -> int:
    rng = block_rng(seed, _PURPOSE_ERROR, block)
    present = rng.random(size) < priors.p1
    declared = sample_shots(rng, size, protocol, params, present)
    return int(np.count_nonzero(declared != present))


def estimate_error_probability(
    protocol: Protocol | str,
    params: ChannelParams,
    priors: PriorPair | None = None,
    num_trials: int = 1_000_000,
    seed: int = 0,
    *,
    workers: int = 1,
) -> TrialOutcome:
    """Empirical error rate of the single-shot rule 'declare H1 iff the coincidence fires'.

    The true hypothesis of each trial is drawn from ``priors``; the outcome's
    ``positives`` field counts wrong decisions.
    """
    protocol = Protocol.parse(protocol)
    priors = priors or PriorPair()
    _check_count("num_trials", num_trials)
    _check_seed(seed)
    counts = _run_blocks(_error_block, (protocol, params, priors, seed), _blocks(num_trials), workers)
    return TrialOutcome.from_counts(sum(counts), num_trials)


@dataclass(frozen=True)
class DelayEstimationConfig:
    """Toy delay estimator over ``num_bins`` bins of the prior window.

    ``true_bin`` None draws the true bin uniformly per trial, matching a
    uniform delay prior.
    """

    window: DelayWindow
    num_bins: int
    pulses: int
    protocol: Protocol
    params: ChannelParams
    num_trials: int
    seed: int = 0
    true_bin: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Protocol.parse(self.protocol))
        _check_count("num_bins", self.num_bins, 2)
        _check_count("pulses", self.pulses)
        _check_count("num_trials", self.num_trials)
        _check_seed(self.seed)
        if self.true_bin is not None and not 0 <= self.true_bin < self.num_bins:
            raise InvalidParameterError(f"true_bin must lie in [0, {self.num_bins}), got {self.true_bin}")

    @property
    def bin_width(self) -> float:
        return self.window.delta_tau / self.num_bins


@dataclass(frozen=True)
class DelayEstimate:
    """Empirical delay error. ``rmse_se`` is a one-sigma upward uncertainty of ``rmse``."""

    rmse: float
    rmse_se: float
    mse: float
    mse_se: float
    trials: int
    error_trials: int


def _delay_block(config: DelayEstimationConfig, block: int, size: int) -> tuple[int, int, int]:
    rng = block_rng(config.seed, _PURPOSE_DELAY, block)
    k = config.num_bins
    if config.true_bin is None:
        truth = rng.integers(0, k, size)
    else:
        truth = np.full(size, config.true_bin)
    present = np.zeros((size, k), dtype=bool)
    present[np.arange(size), truth] = True
    counts = np.zeros((size, k), dtype=np.int64)
    for _ in range(config.pulses):
        counts += sample_shots(rng, (size, k), config.protocol, config.params, present)
    # uniform tie-breaking among the bins sharing the maximum count
    tied = counts == counts.max(axis=1, keepdims=True)
    estimate = np.argmax(np.where(tied, rng.random((size, k)), -1.0), axis=1)
    d = (estimate - truth).astype(np.int64)
    d2 = d * d
    return int(d2.sum()), int((d2 * d2).sum()), int(np.count_nonzero(d))


def delay_estimation_experiment(config: DelayEstimationConfig, *, workers: int = 1) -> DelayEstimate:
    """RMSE of the argmax-count delay estimator, with its standard error.

    Errors are whole bins, so the sums are exact integers. The standard error
    of the MSE comes from the sample variance of the squared errors; when
    fewer than 30 trials erred that variance is unreliable, and it is
    replaced by its bound ``D**2 * p_hi`` where ``D`` is the largest possible
    squared error and ``p_hi`` the exact 95% upper limit on the rate of
    erring trials (whichever is larger).
    """
    parts = _run_blocks(_delay_block, (config,), _blocks(config.num_trials), workers)
    s2 = sum(p[0] for p in parts)
    s4 = sum(p[1] for p in parts)
    nonzero = sum(p[2] for p in parts)
    n = config.num_trials
    w2 = config.bin_width**2
    mse = w2 * s2 / n
    var = w2 * w2 * (s4 / n - (s2 / n) ** 2) * n / max(n - 1, 1)
    if nonzero < EXACT_CI_BELOW:
        d_max = w2 * (config.num_bins - 1) ** 2
        p_hi = TrialOutcome.from_counts(nonzero, n).ci_high
        var = max(var, d_max * d_max * p_hi)
    mse_se = math.sqrt(max(var, 0.0) / n)
    rmse = math.sqrt(mse)
    return DelayEstimate(
        rmse=rmse,
        rmse_se=math.sqrt(mse + mse_se) - rmse,
        mse=mse,
        mse_se=mse_se,
        trials=n,
        error_trials=nonzero,
    )


# --- oracle campaign -------------------------------------------------------

ORACLE_NB = (0.001, 0.01, 0.05)
ORACLE_MODES = (10.0, 100.0, 1000.0)
ORACLE_ETA = (0.0, 0.1, 0.5, 1.0)


@dataclass(frozen=True)
class OracleCase:
    protocol: Protocol
    params: ChannelParams
    hypothesis: Hypothesis
    expected: float
    trials: int | None
    outcome: TrialOutcome | None
    z: float | None
    n_sigma: float

    @property
    def status(self) -> str:
        if self.outcome is None:
            return "undersampled"
        return "pass" if abs(self.z) <= self.n_sigma else "fail"


def auto_trials(
    p: float,
    *,
    min_trials: int = 1_000_000,
    cap: int = 100_000_000,
    min_expected: float = 100.0,
) -> int | None:
    """Trials needed for ``min_expected`` positives, or None if that exceeds ``cap``.

    Certain outcomes (p of 0 or 1) need no scaling and use ``min_trials``.
    """
    if p <= 0.0 or p >= 1.0:
        return min_trials
    need = math.ceil(min_expected / p)
    if need > cap:
        return None
    return max(min_trials, need)


def oracle_grid(
    protocols=ALL_PROTOCOLS, n_bs=ORACLE_NB, modes=ORACLE_MODES, etas=ORACLE_ETA
) -> list[tuple[Protocol, ChannelParams, Hypothesis]]:
    """Cases of the closed-form/oracle comparison. H0 cases do not depend on eta."""
    cases = []
    for protocol in protocols:
        for n_b in n_bs:
            for m in modes:
                cases.append((protocol, ChannelParams(n_b, m, 0.0), Hypothesis.H0))
                for eta in etas:
                    cases.append((protocol, ChannelParams(n_b, m, eta), Hypothesis.H1))
    return cases


def check_case(
    protocol: Protocol,
    params: ChannelParams,
    hypothesis: Hypothesis,
    seed: int,
    *,
    n_sigma: float = 4.0,
    workers: int = 1,
    **trial_kw,
) -> OracleCase:
    probs = detection_probabilities(protocol, params)
    expected = probs.p_false_alarm if hypothesis is Hypothesis.H0 else probs.p_detect
    trials = auto_trials(expected, **trial_kw)
    if trials is None:
        return OracleCase(protocol, params, hypothesis, expected, None, None, None, n_sigma)
    outcome = simulate_coincidence(TrialConfig(protocol, params, hypothesis, trials, seed), workers=workers)
    return OracleCase(protocol, params, hypothesis, expected, trials, outcome, outcome.z_score(expected), n_sigma)


def run_oracle_campaign(
    seed: int = 0,
    cases: list[tuple[Protocol, ChannelParams, Hypothesis]] | None = None,
    *,
    n_sigma: float = 4.0,
    workers: int = 1,
    **trial_kw,
) -> list[OracleCase]:
    """Compare simulated frequencies with the closed forms over a grid of cases.

    Each case gets its own seed derived from ``seed`` and the case index.
    """
    cases = oracle_grid() if cases is None else cases
    out = []
    for i, (protocol, params, hypothesis) in enumerate(cases):
        case_seed = derive_seed(seed, i)
        out.append(check_case(protocol, params, hypothesis, case_seed, n_sigma=n_sigma, workers=workers, **trial_kw))
    return out


def derive_seed(seed: int, index: int) -> int:
    """Child seed for the ``index``-th sub-campaign of ``seed``."""
    return int(np.random.SeedSequence(seed, spawn_key=(0, index)).generate_state(1, np.uint64)[0])
