"""Gain functions, vulnerability, g-leakage and capacities."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import CapExceeded, DomainError, InvariantError, UndefinedLeakage
from .hmm import HmmMatrix
from .prob import (
    ONE,
    ZERO,
    Dist,
    Hyper,
    StochMatrix,
    decode_label,
    encode_label,
    fmt_bits,
    index_of,
    lg,
    rational_str,
    to_fraction,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_STRATEGIES = 10**6


class GainFunction:
    """Gain ``g(w, s)`` of choosing ``w`` when the secret is ``s``."""

    __slots__ = ("choices", "domain", "table")

    def __init__(self, choices: Iterable, domain: Iterable, table: Sequence[Sequence]):
        self.choices = tuple(choices)
        self.domain = tuple(domain)
        if not self.choices:
            raise InvariantError("a gain function needs at least one choice")
        index_of(self.choices)
        index_of(self.domain)
        if len(table) != len(self.choices) or any(len(r) != len(self.domain) for r in table):
            raise InvariantError("gain table shape does not match choices x domain")
        self.table = tuple(tuple(to_fraction(v) for v in r) for r in table)

    @classmethod
    def from_function(cls, choices: Iterable, domain: Iterable, f: Callable) -> "GainFunction":
        choices, domain = tuple(choices), tuple(domain)
        return cls(choices, domain, [[f(w, s) for s in domain] for w in choices])

    @property
    def nonnegative(self) -> bool:
        return all(v >= 0 for r in self.table for v in r)

    def __call__(self, w, s) -> Fraction:
        return self.table[index_of(self.choices)[w]][index_of(self.domain)[s]]

    def scaled(self, factor) -> "GainFunction":
        factor = to_fraction(factor)
        return GainFunction(self.choices, self.domain, [[v * factor for v in r] for r in self.table])

    def __eq__(self, other):
        return (
            isinstance(other, GainFunction)
            and self.choices == other.choices
            and self.domain == other.domain
            and self.table == other.table
        )

    __hash__ = None

    def __repr__(self):
        return f"GainFunction({len(self.choices)} choices x {len(self.domain)} secrets)"

    def to_jsonable(self) -> dict:
        return {
            "choices": [encode_label(w) for w in self.choices],
            "domain": [encode_label(s) for s in self.domain],
            "table": [[rational_str(v) for v in r] for r in self.table],
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "GainFunction":
        return cls(
            [decode_label(w) for w in data["choices"]],
            [decode_label(s) for s in data["domain"]],
            data["table"],
        )


def gid(domain: Iterable) -> GainFunction:
    """Identity gain: one for guessing the secret exactly, zero otherwise."""
    domain = tuple(domain)
    n = len(domain)
    return GainFunction(domain, domain, [[ONE if i == j else ZERO for j in range(n)] for i in range(n)])


def shift_to_nonnegative(g: GainFunction) -> GainFunction:
    """Add a constant so that every entry is nonnegative.

    The shift changes every vulnerability over a fixed domain by the same
    amount, so comparisons between hypers survive it but leakage values do not.
    """
    low = min(v for r in g.table for v in r)
    if low >= 0:
        return g
    log.info("shifting gain function by %s to make it nonnegative", -low)
    return GainFunction(g.choices, g.domain, [[v - low for v in r] for r in g.table])


def _check_domain(g: GainFunction, domain: tuple):
    if g.domain != domain:
        raise DomainError("gain function domain differs from the distribution domain")


def vulnerability(g: GainFunction, prior: Dist) -> Fraction:
    """Expected gain of the best single choice against ``prior``."""
    _check_domain(g, prior.domain)
    support = [(i, p) for i, p in enumerate(prior.probs) if p]
    return max(sum(p * r[i] for i, p in support) for r in g.table)


def hyper_vulnerability(g: GainFunction, h: Hyper) -> Fraction:
    """Outer-weighted average of the inner vulnerabilities."""
    return sum((p * vulnerability(g, d) for p, d in h), ZERO)


def posterior_vulnerability(g: GainFunction, prior: Dist, channel: StochMatrix) -> Fraction:
    """Vulnerability of the hyper ``[prior |> channel]``, computed column by column."""
    _check_domain(g, prior.domain)
    if channel.rows != prior.domain:
        raise DomainError("prior domain differs from channel rows")
    columns: dict[int, list] = {}
    for i, (p, row) in enumerate(zip(prior.probs, channel.data)):
        if p:
            for j, v in row.items():
                columns.setdefault(j, []).append((i, p * v))
    total = ZERO
    for entries in columns.values():
        total += max(sum(v * r[i] for i, v in entries) for r in g.table)
    return total


@dataclass(frozen=True)
class LeakageReport:
    prior_vulnerability: Fraction
    posterior_vulnerability: Fraction
    ratio: Fraction
    bits: float

    @classmethod
    def from_vulnerabilities(cls, prior_v: Fraction, post_v: Fraction) -> "LeakageReport":
        if prior_v <= 0:
            raise UndefinedLeakage(f"prior vulnerability {prior_v} is not positive")
        ratio = post_v / prior_v
        return cls(prior_v, post_v, ratio, lg(ratio))

    def to_jsonable(self) -> dict:
        return {
            "priorVulnerability": rational_str(self.prior_vulnerability),
            "posteriorVulnerability": rational_str(self.posterior_vulnerability),
            "ratio": rational_str(self.ratio),
            "bits": fmt_bits(self.bits),
        }


def leakage(g: GainFunction, prior: Dist, channel: StochMatrix) -> LeakageReport:
    """Multiplicative g-leakage of ``channel`` under ``prior``."""
    prior_v = vulnerability(g, prior)
    if prior_v <= 0:
        raise UndefinedLeakage(f"prior vulnerability {prior_v} is not positive")
    return LeakageReport.from_vulnerabilities(prior_v, posterior_vulnerability(g, prior, channel))


def _column_max_sum(channel: StochMatrix, rows: Iterable[int] | None = None) -> Fraction:
    best: dict[int, Fraction] = {}
    if rows is None:
        candidates = channel.unique_rows()
    else:
        seen = {}
        for i in rows:
            seen.setdefault(id(channel.data[i]), channel.data[i])
        candidates = list(seen.values())
    for row in candidates:
        for j, v in row.items():
            if v > best.get(j, ZERO):
                best[j] = v
    return sum(best.values(), ZERO)


def min_capacity_ratio(channel: StochMatrix) -> Fraction:
    """Sum of column maxima; its logarithm is the capacity over all priors and gains."""
    return _column_max_sum(channel)


def min_capacity(channel: StochMatrix) -> float:
    return lg(min_capacity_ratio(channel))


def capacity_fixed_prior_ratio(prior: Dist, channel: StochMatrix) -> Fraction:
    """Sum of column maxima over the rows in the support of ``prior``."""
    if prior.domain != channel.rows:
        raise DomainError("prior domain differs from channel rows")
    return _column_max_sum(channel, [i for i, p in enumerate(prior.probs) if p])


def capacity_fixed_prior(prior: Dist, channel: StochMatrix) -> float:
    return lg(capacity_fixed_prior_ratio(prior, channel))


def shannon(d: Dist) -> float:
    return -sum(float(p) * math.log2(p.numerator / p.denominator) for p in d.probs if p)


def shannon_hyper(h: Hyper) -> float:
    """Expected entropy of the inners."""
    return sum(float(p) * shannon(d) for p, d in h)


def gain_transformer(
    g: GainFunction, h: HmmMatrix, *, max_strategies: int = DEFAULT_MAX_STRATEGIES
) -> GainFunction:
    """Pull a gain on (x, x') back through ``h``.

    Choices of the result are strategies: tuples giving a choice of ``g`` for
    each observation of ``h`` in order.  The transformed gain of strategy
    ``s`` at ``(x, x')`` is the expected gain of playing ``s`` when ``h`` runs
    from ``x'`` and the outcome is compared against ``x``.
    """
    n = h.n
    pairs = tuple((a, b) for a in h.states for b in h.states)
    if g.domain != pairs:
        raise DomainError("gain function must range over (initial, final) pairs of the HMM")
    nw, ny = len(g.choices), len(h.obs)
    count = nw**ny
    if count > max_strategies:
        raise CapExceeded("strategies", max_strategies, count)
    # contrib[w][y][(x, x')] = sum_u g(w, (x, u)) H(x', y, u)
    contrib = []
    for r in g.table:
        per_y = [[ZERO] * (n * n) for _ in range(ny)]
        for b, row in enumerate(h.data):
            for c, v in row.items():
                y, u = divmod(c, n)
                line = per_y[y]
                for a in range(n):
                    gv = r[a * n + u]
                    if gv:
                        line[a * n + b] += gv * v
        contrib.append(per_y)
    strategies, table = [], []
    for combo in itertools.product(range(nw), repeat=ny):
        strategies.append(tuple(g.choices[w] for w in combo))
        acc = [ZERO] * (n * n)
        for y, w in enumerate(combo):
            line = contrib[w][y]
            for k, v in enumerate(line):
                if v:
                    acc[k] += v
        table.append(acc)
    return GainFunction(strategies, pairs, table)


__all__ = [
    "DEFAULT_MAX_STRATEGIES",
    "GainFunction",
    "LeakageReport",
    "capacity_fixed_prior",
    "capacity_fixed_prior_ratio",
    "gain_transformer",
    "gid",
    "hyper_vulnerability",
    "leakage",
    "min_capacity",
    "min_capacity_ratio",
    "posterior_vulnerability",
    "shannon",
    "shannon_hyper",
    "shift_to_nonnegative",
    "vulnerability",
]
