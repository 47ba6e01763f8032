"""Monte-Carlo harness for the decoupling analysis of a channel.

Checks three things about a channel T with Choi state tau on [A', B]:

* the Haar-average of ``||T(phi) - T(pi)||_1`` stays below
  ``2^{-H_min(A'|B)/2}``,
* concentration of individual samples around that average (only meaningful
  at large input dimension, where the tail bound is nonvacuous),
* the converse condition under which *no* fixed output state can be close
  to all channel outputs on average.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import Channel
from .entropy import chain_bounds, h_max_smooth, h_min_cond, h_min_smooth
from .linalg import haar_state, maximally_mixed, trace_distance


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    # one independent stream per sample index, so results do not depend on
    # scheduling order or worker count
    return np.random.default_rng([seed, index])


def avg_output_distance(ch: Channel, n_samples: int, seed: int,
                        workers: int = 1):
    """Haar-average of ``||T(phi) - T(pi)||_1`` over pure inputs.

    Returns ``(mean, std, samples)``; deterministic for a given seed
    regardless of ``workers``.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    d = ch.input_dim
    ref = ch.apply(maximally_mixed(d))

    def one(i: int) -> float:
        phi = haar_state(d, _sample_rng(seed, i))
        return trace_distance(ch.apply(phi.density()), ref)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = np.fromiter(pool.map(one, range(n_samples)), dtype=float,
                                  count=n_samples)
    else:
        samples = np.fromiter(map(one, range(n_samples)), dtype=float,
                              count=n_samples)
    return float(samples.mean()), float(samples.std(ddof=1) if n_samples > 1 else 0.0), samples


@dataclass
class DecouplingBound:
    sdp_bits: float      # H_min(A'|B) of the Choi state
    sdp_bound: float     # 2^{-sdp_bits/2}
    chain_bits: float    # best chain-rule lower bound on H_min(A'|B)
    chain_bound: float   # 2^{-chain_bits/2} (weaker, for comparison)


def decoupling_bound(ch: Channel, eps: float = 0.0) -> DecouplingBound:
    """Average-distance bound ``2^{-H_min(A'|B)/2}`` from the Choi state.

    At ``eps = 0`` the bound is sound as stated (the smoothed entropy is at
    least the unsmoothed one, and the additive error term vanishes).  The
    chain-rule variant replaces the conditional entropy with the best of the
    subtraction bounds and is strictly weaker.
    """
    choi = ch.choi().state
    bits = h_min_cond(choi, eps=eps)
    b1, b2 = chain_bounds(choi, eps)
    chain_bits = max(b1, b2)
    return DecouplingBound(
        sdp_bits=bits, sdp_bound=float(2.0 ** (-0.5 * bits)),
        chain_bits=chain_bits, chain_bound=float(2.0 ** (-0.5 * chain_bits)))


@dataclass
class ConcentrationResult:
    delta: float
    tail_fraction: float
    tail_bound: float
    vacuous: bool       # bound >= 1: no assertion possible at this dimension
    passed: bool | None  # None when vacuous (check skipped)


def concentration_check(samples, bound: float, delta: float,
                        d_a: int) -> ConcentrationResult:
    """Fraction of samples exceeding ``bound + delta`` vs ``2 e^{-d_A delta^2/16}``.

    The theoretical tail is only meaningful when it is below 1; otherwise the
    check is reported as vacuous and skipped, which is the expected outcome
    at small input dimension.
    """
    samples = np.asarray(samples, dtype=float)
    tail_fraction = float((samples > bound + delta).mean())
    tail_bound = float(2.0 * np.exp(-d_a * delta * delta / 16.0))
    vacuous = tail_bound >= 1.0
    passed = None if vacuous else bool(tail_fraction <= tail_bound)
    return ConcentrationResult(delta=delta, tail_fraction=tail_fraction,
                               tail_bound=tail_bound, vacuous=vacuous,
                               passed=passed)


@dataclass
class ConverseResult:
    fires: bool
    h_max_joint: float       # smoothed max-entropy of the Choi state
    h_min_output: float      # smoothed min-entropy of the B marginal
    lhs: float               # h_max_joint + both logarithmic penalty terms
    penalty_smoothing: float  # log2 1/(1 - (sqrt(2 delta) + 4 eps)^2)
    penalty_eps: float        # log2 2/eps^2
    trial_min_avg: float | None  # min over trial omega_B of avg distance
    empirical_ok: bool | None    # trial_min_avg > delta/2 (None if not fired)


def converse_check(ch: Channel, eps: float, delta: float,
                   n_samples: int = 50, seed: int = 0,
                   trial_random_inputs: int = 10) -> ConverseResult:
    """Condition under which no fixed output state is delta/2-close on average.

    Fires when ``H_max^eps(A'B) + log2 1/(1-(sqrt(2 delta)+4 eps)^2)
    + log2 2/eps^2 < H_min^eps(B)``, evaluated with the sound one-sided
    smoothing bounds.  When it fires, a finite trial set of candidate output
    states (the channel's average output, the outputs of a few random pure
    inputs, and the flat state) is checked empirically; the theorem covers
    all candidates, the trial set is a spot check.
    """
    if eps <= 0.0 or delta <= 0.0:
        raise ValueError("eps and delta must be positive")
    shift = np.sqrt(2.0 * delta) + 4.0 * eps
    if shift >= 1.0:
        raise ValueError("sqrt(2 delta) + 4 eps must be below 1")
    joint, marg_b = ch.choi_spectra()
    h_max_joint = h_max_smooth(joint, eps)
    h_min_output = h_min_smooth(marg_b, eps)
    penalty_smoothing = float(np.log2(1.0 / (1.0 - shift * shift)))
    penalty_eps = float(np.log2(2.0 / (eps * eps)))
    lhs = h_max_joint + penalty_smoothing + penalty_eps
    fires = lhs < h_min_output
    trial_min_avg = None
    empirical_ok = None
    if fires:
        trial_min_avg = _trial_min_average(ch, n_samples, seed, trial_random_inputs)
        empirical_ok = trial_min_avg > delta / 2.0
    return ConverseResult(fires=fires, h_max_joint=h_max_joint,
                          h_min_output=h_min_output, lhs=lhs,
                          penalty_smoothing=penalty_smoothing,
                          penalty_eps=penalty_eps,
                          trial_min_avg=trial_min_avg, empirical_ok=empirical_ok)


def _trial_min_average(ch: Channel, n_samples: int, seed: int,
                       trial_random_inputs: int) -> float:
    d_in, d_out = ch.input_dim, ch.output_dim
    if ch._analytic == "identity":
        # outputs are the pure inputs themselves; distances in closed form
        trial_vecs = [haar_state(d_in, _sample_rng(seed, 10_000 + j)).amplitudes
                      for j in range(trial_random_inputs)]
        averages = []
        # flat trial state (also equals the average output): constant distance
        averages.append(2.0 * (1.0 - 1.0 / d_in))
        for w in trial_vecs:
            dists = []
            for i in range(n_samples):
                phi = haar_state(d_in, _sample_rng(seed, i)).amplitudes
                ov = abs(np.vdot(w, phi)) ** 2
                dists.append(2.0 * np.sqrt(max(0.0, 1.0 - ov)))
            averages.append(float(np.mean(dists)))
        return float(min(averages))

    trials = [ch.apply(maximally_mixed(d_in)),
              maximally_mixed(d_out).data]
    for j in range(trial_random_inputs):
        phi = haar_state(d_in, _sample_rng(seed, 10_000 + j))
        trials.append(ch.apply(phi.density()))
    outputs = [ch.apply(haar_state(d_in, _sample_rng(seed, i)).density())
               for i in range(n_samples)]
    averages = [float(np.mean([trace_distance(out, w) for out in outputs]))
                for w in trials]
    return float(min(averages))


def convexity_gap(ch: Channel, omega, n_samples: int, seed: int):
    """``(||T(pi) - omega||_1, Haar-average of ||T(phi) - omega||_1)``.

    The first entry never exceeds the second (convexity of the trace norm);
    exposed so the property can be tested on random channels and omegas.
    """
    d = ch.input_dim
    lhs = trace_distance(ch.apply(maximally_mixed(d)), omega)
    dists = [trace_distance(ch.apply(haar_state(d, _sample_rng(seed, i)).density()),
                            omega)
             for i in range(n_samples)]
    return lhs, float(np.mean(dists))


@dataclass
class DecouplingReport:
    n_samples: int
    empirical_mean: float
    empirical_std: float
    bound: float
    bound_bits: float
    chain_bound: float
    tail: dict = field(default_factory=dict)  # delta -> ConcentrationResult
    converse: ConverseResult | None = None
    seed: int = 0

    def to_json(self) -> str:
        obj = {
            "n_samples": self.n_samples,
            "empirical_mean": self.empirical_mean,
            "empirical_std": self.empirical_std,
            "bound": self.bound,
            "bound_bits": self.bound_bits,
            "chain_bound": self.chain_bound,
            "tail": {str(d): {"tail_fraction": r.tail_fraction,
                              "tail_bound": r.tail_bound,
                              "vacuous": r.vacuous,
                              "passed": r.passed}
                     for d, r in self.tail.items()},
            "converse_holds": None if self.converse is None else self.converse.fires,
            "seed": self.seed,
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def decoupling_report(ch: Channel, n_samples: int = 200, seed: int = 0,
                      deltas=(0.5,), eps: float = 0.0,
                      workers: int = 1) -> DecouplingReport:
    """End-to-end report: empirical average, entropic bound, tail checks."""
    mean, std, samples = avg_output_distance(ch, n_samples, seed, workers=workers)
    bounds = decoupling_bound(ch, eps=eps)
    tail = {float(d): concentration_check(samples, bounds.sdp_bound, float(d),
                                          ch.input_dim)
            for d in deltas}
    return DecouplingReport(n_samples=n_samples, empirical_mean=mean,
                            empirical_std=std, bound=bounds.sdp_bound,
                            bound_bits=bounds.sdp_bits,
                            chain_bound=bounds.chain_bound,
                            tail=tail, converse=None, seed=seed)
