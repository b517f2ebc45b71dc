"""Collateral (Dalenius) leakage: what a program reveals about a secret it never touches."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DomainError, InvariantError
from .hmm import HmmMatrix, HmmSteps, effective_channel, effective_channel_steps
from .measures import (
    GainFunction,
    LeakageReport,
    capacity_fixed_prior_ratio,
    leakage,
    min_capacity_ratio,
)
from .prob import (
    ONE,
    ZERO,
    Dist,
    Joint,
    StochMatrix,
    cascade,
    compose_joint,
    factor_joint_left,
    factor_joint_right,
    fmt_bits,
    lg,
    rational_str,
)


class Correlation:
    """A joint distribution on Z x X together with both of its factorizations."""

    __slots__ = ("joint", "z_marginal", "right_conditional", "x_marginal", "left_conditional")

    def __init__(self, joint: Joint):
        self.joint = joint
        self.z_marginal, self.right_conditional = factor_joint_right(joint)
        self.x_marginal, self.left_conditional = factor_joint_left(joint)
        if compose_joint(self.z_marginal, self.right_conditional) != joint:
            raise InvariantError("right factorization does not reconstruct the joint")
        back = compose_joint(self.x_marginal, self.left_conditional)
        if back.dense() != [list(col) for col in zip(*joint.dense())]:
            raise InvariantError("left factorization does not reconstruct the joint")

    @property
    def z_domain(self) -> tuple:
        return self.joint.rows

    @property
    def x_domain(self) -> tuple:
        return self.joint.cols

    @classmethod
    def identity(cls, prior: Dist, z_domain: Iterable | None = None) -> "Correlation":
        """``Z`` is a copy of ``X`` distributed as ``prior``."""
        zs = prior.domain if z_domain is None else tuple(z_domain)
        if len(zs) != len(prior.domain):
            raise DomainError("identity correlation needs |Z| = |X|")
        entries = [[p if i == j else ZERO for j in range(len(zs))] for i, p in enumerate(prior.probs)]
        return cls(Joint(zs, prior.domain, entries))

    @classmethod
    def independent(cls, z_prior: Dist, x_prior: Dist) -> "Correlation":
        entries = [[pz * px for px in x_prior.probs] for pz in z_prior.probs]
        return cls(Joint(z_prior.domain, x_prior.domain, entries))

    @classmethod
    def random(cls, z_domain: Iterable, x_domain: Iterable, seed: int, *, max_weight: int = 9) -> "Correlation":
        """A seeded random correlation with small integer weights (some zero)."""
        rng = random.Random(seed)
        zs, xs = tuple(z_domain), tuple(x_domain)
        while True:
            weights = [[rng.randint(0, max_weight) for _ in xs] for _ in zs]
            total = sum(map(sum, weights))
            if total:
                break
        return cls(Joint(zs, xs, [[Fraction(w, total) for w in r] for r in weights]))

    def __eq__(self, other):
        return isinstance(other, Correlation) and self.joint == other.joint

    __hash__ = None

    def __repr__(self):
        return f"Correlation({len(self.z_domain)}x{len(self.x_domain)})"

    def to_jsonable(self) -> dict:
        out = self.joint.to_jsonable()
        out["zDomain"] = out["rows"]
        return out

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "Correlation":
        return cls(Joint.from_jsonable(data))


def channel_of(program) -> StochMatrix:
    """Effective channel of an HMM, a step list, or a channel given directly."""
    if isinstance(program, StochMatrix):
        return program
    if isinstance(program, HmmMatrix):
        return effective_channel(program)
    if isinstance(program, HmmSteps):
        return effective_channel_steps(program.steps)
    raise TypeError(f"not a program: {program!r}")


def collateral_channel(corr: Correlation, channel: StochMatrix) -> StochMatrix:
    """The channel from Z to observations induced by the correlation."""
    if corr.x_domain != channel.rows:
        raise DomainError("correlation X domain differs from channel rows")
    return cascade(corr.right_conditional, channel)


def collateral_leakage(g: GainFunction, corr: Correlation, program) -> LeakageReport:
    """Leakage about Z, measured by ``g`` on Z."""
    return leakage(g, corr.z_marginal, collateral_channel(corr, channel_of(program)))


def ccap_ratio(steps) -> Fraction:
    """Exponential of the linear-cost collateral capacity bound.

    Works in ratio space: adding capacities multiplies ratios and their
    minimum commutes with the logarithm.
    """
    steps = tuple(steps.steps if isinstance(steps, HmmSteps) else steps)
    if not steps:
        raise InvariantError("a step list needs at least one step")
    acc = min_capacity_ratio(steps[-1].channel)
    for s in reversed(steps[:-1]):
        acc = min_capacity_ratio(s.channel) * min(min_capacity_ratio(s.markov), acc)
    return acc


def ccap(steps) -> float:
    return lg(ccap_ratio(steps))


def maximizing_gains(corr: Correlation) -> tuple[GainFunction, GainFunction]:
    """The gains on Z and on X that attain the fixed-prior collateral capacity.

    ``g_hat`` rewards a correct guess of ``z`` by ``a / pz`` where ``a`` is the
    least nonzero Z-marginal probability; ``g_join`` is the same gain expressed
    on X through the correlation.
    """
    zs = corr.z_domain
    pz = corr.z_marginal.probs
    a = min(p for p in pz if p)
    table = [[a / pz[i] if (i == j and pz[i]) else ZERO for j in range(len(zs))] for i in range(len(zs))]
    g_hat = GainFunction(zs, zs, table)
    lc = corr.left_conditional.data
    join = [
        [sum((lc[x].get(z, ZERO) * g_hat.table[w][z] for z in range(len(zs))), ZERO) for x in range(len(corr.x_domain))]
        for w in range(len(zs))
    ]
    return g_hat, GainFunction(zs, corr.x_domain, join)


@dataclass(frozen=True)
class MaximizingGainReport:
    capacity_ratio: Fraction
    g_hat_ratio: Fraction
    g_join_ratio: Fraction

    @property
    def equal(self) -> bool:
        return self.capacity_ratio == self.g_hat_ratio == self.g_join_ratio

    def to_jsonable(self) -> dict:
        return {
            "fixedPriorCapacity": {"ratio": rational_str(self.capacity_ratio), "bits": fmt_bits(lg(self.capacity_ratio))},
            "gHatLeakage": {"ratio": rational_str(self.g_hat_ratio), "bits": fmt_bits(lg(self.g_hat_ratio))},
            "gJoinLeakage": {"ratio": rational_str(self.g_join_ratio), "bits": fmt_bits(lg(self.g_join_ratio))},
            "equal": self.equal,
        }


def maximizing_gain_report(corr: Correlation, program) -> MaximizingGainReport:
    """Evaluate the three quantities that the maximizing-gain construction equates."""
    chan = channel_of(program)
    d = collateral_channel(corr, chan)
    g_hat, g_join = maximizing_gains(corr)
    return MaximizingGainReport(
        capacity_fixed_prior_ratio(corr.z_marginal, d),
        leakage(g_hat, corr.z_marginal, d).ratio,
        leakage(g_join, corr.x_marginal, chan).ratio,
    )


@dataclass(frozen=True)
class CollateralBoundReport:
    lhs_ratio: Fraction
    rhs_ratio: Fraction
    rhs_support_ratio: Fraction

    @property
    def lhs(self) -> float:
        return lg(self.lhs_ratio)

    @property
    def rhs(self) -> float:
        return lg(self.rhs_ratio)

    @property
    def rhs_support(self) -> float:
        return lg(self.rhs_support_ratio)

    @property
    def equality(self) -> bool:
        return self.lhs_ratio == self.rhs_ratio

    def to_jsonable(self) -> dict:
        return {
            "lhs": {"ratio": rational_str(self.lhs_ratio), "bits": fmt_bits(self.lhs)},
            "rhs": {"ratio": rational_str(self.rhs_ratio), "bits": fmt_bits(self.rhs)},
            "rhsSupport": {"ratio": rational_str(self.rhs_support_ratio), "bits": fmt_bits(self.rhs_support)},
            "equality": self.equality,
        }


def check_collateral_bound(corr: Correlation, program) -> CollateralBoundReport:
    """Collateral capacity at the given correlation against the uniform-prior capacity.

    ``rhs_support`` restricts the right-hand side to the support of the
    X-marginal; it lies between the two sides.
    """
    chan = channel_of(program)
    report = CollateralBoundReport(
        capacity_fixed_prior_ratio(corr.z_marginal, collateral_channel(corr, chan)),
        min_capacity_ratio(chan),
        capacity_fixed_prior_ratio(corr.x_marginal, chan),
    )
    if not report.lhs_ratio <= report.rhs_support_ratio <= report.rhs_ratio:
        raise InvariantError("collateral capacity exceeds its uniform-prior bound")
    return report


__all__ = [
    "Correlation",
    "MaximizingGainReport",
    "CollateralBoundReport",
    "ccap",
    "ccap_ratio",
    "channel_of",
    "check_collateral_bound",
    "collateral_channel",
    "collateral_leakage",
    "maximizing_gains",
    "maximizing_gain_report",
]
