"""Concrete HMMs ``X -> Y x X``, their composition, and their hyper semantics.

An :class:`HmmMatrix` stores one sparse row per initial state; the flat column
index of ``(y, x')`` is ``j * n + k`` where ``j`` indexes the observation and
``k`` the final state among ``n`` states.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import CapExceeded, DomainError, InvariantError
from .prob import (
    ZERO,
    Dist,
    Hyper,
    Joint,
    StochMatrix,
    _row_key,
    cascade,
    decode_label,
    encode_label,
    factor_joint_left,
    index_of,
    pair_domain,
    parallel,
    product_obs,
    rational_str,
    to_fraction,
)

DEFAULT_MAX_COLUMNS = 2**20


class HmmMatrix:
    """Row-stochastic matrix from initial states to (observation, final state)."""

    __slots__ = ("states", "obs", "data")

    def __init__(self, states: Iterable, obs: Iterable, entries: Sequence, *, check: bool = True):
        """Build from nested entries ``entries[x][y][x']`` or from sparse row maps.

        A sparse row is a mapping ``(y, x') -> probability``.
        """
        states = tuple(states)
        obs = tuple(obs)
        n = len(states)
        sidx, oidx = index_of(states), index_of(obs)
        if len(entries) != n:
            raise InvariantError("one row of entries is needed per state")
        data = []
        for r in entries:
            row = {}
            if isinstance(r, Mapping):
                for (y, x2), v in r.items():
                    v = to_fraction(v)
                    if v:
                        row[oidx[y] * n + sidx[x2]] = v
            else:
                if len(r) != len(obs):
                    raise InvariantError("row does not list every observation")
                for j, per_obs in enumerate(r):
                    if len(per_obs) != n:
                        raise InvariantError("observation entry does not list every final state")
                    for k, v in enumerate(per_obs):
                        v = to_fraction(v)
                        if v:
                            row[j * n + k] = v
            data.append(row)
        self._set(states, obs, tuple(data), check)

    def _set(self, states, obs, data, check):
        self.states = states
        self.obs = obs
        self.data = data
        if check:
            index_of(states)
            index_of(obs)
            seen = set()
            for x, row in zip(states, data):
                if id(row) in seen:
                    continue
                seen.add(id(row))
                if any(v < 0 for v in row.values()):
                    raise InvariantError("negative entry")
                if sum(row.values()) != 1:
                    raise InvariantError(f"row {x!r} sums to {sum(row.values())}, not 1")

    @classmethod
    def _raw(cls, states, obs, data, *, check: bool = True) -> "HmmMatrix":
        obj = cls.__new__(cls)
        obj._set(tuple(states), tuple(obs), tuple(data), check)
        return obj

    @property
    def n(self) -> int:
        return len(self.states)

    def entry(self, x, y, x2) -> Fraction:
        sidx = index_of(self.states)
        col = index_of(self.obs)[y] * self.n + sidx[x2]
        return self.data[sidx[x]].get(col, ZERO)

    def columns(self) -> tuple:
        """Column labels ``(y, x')`` in flat-index order."""
        return tuple((y, x2) for y in self.obs for x2 in self.states)

    def dense(self) -> list:
        n, m = self.n, len(self.obs)
        out = []
        for row in self.data:
            nested = [[ZERO] * n for _ in range(m)]
            for c, v in row.items():
                nested[c // n][c % n] = v
            out.append(nested)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, HmmMatrix)
            and self.states == other.states
            and self.obs == other.obs
            and self.data == other.data
        )

    __hash__ = None

    def __repr__(self):
        return f"HmmMatrix({self.n} states, {len(self.obs)} observations)"

    def to_jsonable(self) -> dict:
        return {
            "states": [encode_label(x) for x in self.states],
            "obs": [encode_label(y) for y in self.obs],
            "entries": [[[rational_str(v) for v in per] for per in row] for row in self.dense()],
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "HmmMatrix":
        return cls(
            [decode_label(x) for x in data["states"]],
            [decode_label(y) for y in data["obs"]],
            data["entries"],
        )


def _same_states(a: tuple, b: tuple, what: str):
    if a != b:
        raise DomainError(f"{what}: state spaces differ")


def step(channel: StochMatrix, markov: StochMatrix) -> HmmMatrix:
    """The HMM-step: leak through ``channel`` and update by ``markov`` independently."""
    _same_states(channel.rows, markov.rows, "step")
    _same_states(markov.rows, markov.cols, "step (markov must be square)")
    n = len(markov.rows)
    memo: dict = {}
    data = []
    for crow, mrow in zip(channel.data, markov.data):
        key = (id(crow), id(mrow))
        out = memo.get(key)
        if out is None:
            out = {}
            for j, c in crow.items():
                base = j * n
                for k, m in mrow.items():
                    out[base + k] = c * m
            memo[key] = out
        data.append(out)
    return HmmMatrix._raw(markov.rows, channel.cols, data)


def pure_channel(channel: StochMatrix) -> HmmMatrix:
    return step(channel, StochMatrix.identity(channel.rows))


def pure_markov(markov: StochMatrix) -> HmmMatrix:
    return step(StochMatrix.null(markov.rows), markov)


def identity_hmm(states: Iterable) -> HmmMatrix:
    states = tuple(states)
    return step(StochMatrix.null(states), StochMatrix.identity(states))


def seq(h1: HmmMatrix, h2: HmmMatrix, *, max_columns: int = DEFAULT_MAX_COLUMNS) -> HmmMatrix:
    """Sequential composition: sum over the intermediate state."""
    _same_states(h1.states, h2.states, "seq")
    n = h1.n
    m2 = len(h2.obs)
    ncols = len(h1.obs) * m2
    if ncols > max_columns:
        raise CapExceeded("observation columns", max_columns, ncols)
    obs = product_obs(h1.obs, h2.obs)
    memo: dict = {}
    data = []
    for row in h1.data:
        key = _row_key(row)
        out = memo.get(key)
        if out is None:
            out = {}
            for c1, v in row.items():
                j1, mid = divmod(c1, n)
                base = j1 * m2 * n
                for c2, w in h2.data[mid].items():
                    col = base + c2
                    out[col] = out.get(col, ZERO) + v * w
            memo[key] = out
        data.append(out)
    return HmmMatrix._raw(h1.states, obs, data)


def seq_all(hmms: Sequence[HmmMatrix], *, max_columns: int = DEFAULT_MAX_COLUMNS) -> HmmMatrix:
    if not hmms:
        raise ValueError("cannot compose an empty list of HMMs")
    acc = hmms[0]
    for h in hmms[1:]:
        acc = seq(acc, h, max_columns=max_columns)
    return acc


def effective_channel(h: HmmMatrix) -> StochMatrix:
    """Forget the final state, keeping the channel from initial states to observations."""
    n = h.n
    memo: dict = {}
    data = []
    for row in h.data:
        out = memo.get(id(row))
        if out is None:
            out = {}
            for c, v in row.items():
                j = c // n
                out[j] = out.get(j, ZERO) + v
            memo[id(row)] = out
        data.append(out)
    return StochMatrix._raw(h.states, h.obs, data)


def final_markov(h: HmmMatrix) -> StochMatrix:
    """Forget the observation, keeping the state update."""
    n = h.n
    data = []
    for row in h.data:
        out = {}
        for c, v in row.items():
            k = c % n
            out[k] = out.get(k, ZERO) + v
        data.append(out)
    return StochMatrix._raw(h.states, h.states, data)


# -- step lists -----------------------------------------------------------


@dataclass(frozen=True)
class Step:
    channel: StochMatrix
    markov: StochMatrix

    def __post_init__(self):
        _same_states(self.channel.rows, self.markov.rows, "step")
        _same_states(self.markov.rows, self.markov.cols, "step (markov must be square)")

    def to_hmm(self) -> HmmMatrix:
        return step(self.channel, self.markov)


class HmmSteps:
    """A program as a list of HMM-steps sharing one state space."""

    __slots__ = ("steps",)

    def __init__(self, steps: Iterable[Step]):
        self.steps = tuple(steps)
        if not self.steps:
            raise InvariantError("a step list needs at least one step")
        states = self.steps[0].markov.rows
        for s in self.steps:
            _same_states(s.markov.rows, states, "step list")

    @property
    def states(self) -> tuple:
        return self.steps[0].markov.rows

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __eq__(self, other):
        return isinstance(other, HmmSteps) and self.steps == other.steps

    __hash__ = None

    def to_hmm(self, *, max_columns: int = DEFAULT_MAX_COLUMNS) -> HmmMatrix:
        return seq_all([s.to_hmm() for s in self.steps], max_columns=max_columns)

    def to_jsonable(self) -> list:
        return [{"channel": s.channel.to_jsonable(), "markov": s.markov.to_jsonable()} for s in self.steps]

    @classmethod
    def from_jsonable(cls, data: Sequence) -> "HmmSteps":
        return cls(
            Step(StochMatrix.from_jsonable(d["channel"]), StochMatrix.from_jsonable(d["markov"])) for d in data
        )


def effective_channel_steps(steps, *, max_columns: int = DEFAULT_MAX_COLUMNS) -> StochMatrix:
    """Effective channel of a step list by the right fold ``C || (M . chan(rest))``.

    Never materializes the full HMM, so the cost is linear in the number of
    steps times the size of the channels involved.
    """
    steps = tuple(steps)
    if not steps:
        raise InvariantError("a step list needs at least one step")
    acc = steps[-1].channel
    for s in reversed(steps[:-1]):
        ncols = len(s.channel.cols) * len(acc.cols)
        if ncols > max_columns:
            raise CapExceeded("observation columns", max_columns, ncols)
        acc = parallel(s.channel, cascade(s.markov, acc))
    return acc


# -- semantics ------------------------------------------------------------


def denote(h: HmmMatrix, prior: Dist) -> Hyper:
    """The hyper over (initial, final) pairs produced from ``prior``."""
    if prior.domain != h.states:
        raise DomainError("prior domain differs from the HMM state space")
    n = h.n
    columns: dict[int, dict] = {}
    for i, (p, row) in enumerate(zip(prior.probs, h.data)):
        if not p:
            continue
        for c, v in row.items():
            j, k = divmod(c, n)
            columns.setdefault(j, {})[i * n + k] = p * v
    domain = pair_domain(h.states, h.states)
    pairs = []
    for j in sorted(columns):
        col = columns[j]
        mass = sum(col.values())
        probs = [ZERO] * len(domain)
        for idx, v in col.items():
            probs[idx] = v / mass
        pairs.append((mass, Dist(domain, probs, check=False)))
    return Hyper.from_pairs(pairs)


class AbstractHmm:
    """The denotation of an HMM: a function from priors to hypers over (x, x')."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: HmmMatrix):
        self.matrix = matrix

    @property
    def states(self) -> tuple:
        return self.matrix.states

    def __call__(self, prior: Dist) -> Hyper:
        return denote(self.matrix, prior)

    def __repr__(self):
        return f"AbstractHmm({self.matrix!r})"


def _as_joint(correlation) -> Joint:
    return correlation.joint if hasattr(correlation, "joint") else correlation


def _as_abstract(h) -> AbstractHmm:
    return h if isinstance(h, AbstractHmm) else AbstractHmm(h)


def lift_with(h, marginal: Dist, left_conditional: StochMatrix) -> Hyper:
    """Lift through an explicit factorization ``Pi(z, x) = left(x, z) * marginal(x)``."""
    h = _as_abstract(h)
    if marginal.domain != h.states or left_conditional.rows != h.states:
        raise DomainError("correlation does not range over the HMM state space")
    zs = left_conditional.cols
    states = h.states
    n = len(states)
    domain = pair_domain(zs, states)
    lc = left_conditional.data

    def push(inner: Dist) -> Dist:
        probs = [ZERO] * len(domain)
        for idx, p in enumerate(inner.probs):
            if not p:
                continue
            i, k = divmod(idx, n)
            for z, w in lc[i].items():
                probs[z * n + k] += w * p
        return Dist(domain, probs, check=False)

    return Hyper.from_pairs((p, push(d)) for p, d in h(marginal))


def lift(h, correlation) -> Hyper:
    """Collateral lifting: a hyper over (z, x') from a correlation on Z x X."""
    joint = _as_joint(correlation)
    if joint.cols != _as_abstract(h).states:
        raise DomainError("correlation does not range over the HMM state space")
    marginal, left = factor_joint_left(joint)
    return lift_with(h, marginal, left)


def duplicate_correlation(correlation) -> Joint:
    """The correlation ``((z, x), x) -> Pi(z, x)`` that copies the initial state."""
    joint = _as_joint(correlation)
    rows = pair_domain(joint.rows, joint.cols)
    nx = len(joint.cols)
    data = []
    for row in joint.data:
        for k in range(nx):
            v = row.get(k)
            data.append({k: v} if v else {})
    return Joint._raw(rows, joint.cols, data)


def extend(h, correlation, z_space: Sequence | None = None) -> Hyper:
    """Z-extension: a hyper over ((z, x), x') that also carries the initial state."""
    joint = _as_joint(correlation)
    if z_space is not None and tuple(z_space) != joint.rows:
        raise DomainError("correlation rows differ from the given Z space")
    return lift(h, duplicate_correlation(joint))


def kleisli_apply(h1, h2, prior: Dist) -> Hyper:
    """Semantic composition: run ``h1``, then lift ``h2`` over each of its inners.

    Each inner of ``h1(prior)`` is a joint on (initial, intermediate); the lift of
    ``h2`` carries the initial coordinate as collateral.
    """
    h1, h2 = _as_abstract(h1), _as_abstract(h2)
    if h1.states != h2.states:
        raise DomainError("kleisli: state spaces differ")
    pairs = []
    for outer, inner in h1(prior):
        joint = Joint.from_dist(inner)
        for p, d in lift(h2, joint):
            pairs.append((outer * p, d))
    return Hyper.from_pairs(pairs)


def kleisli(h1, h2, *, certify_prior: Dist | None = None) -> AbstractHmm:
    """Compose two abstract HMMs, backed by the matrix composition.

    The result is checked against the semantic route at ``certify_prior``
    (uniform by default) and an :class:`InvariantError` is raised on mismatch.
    """
    h1, h2 = _as_abstract(h1), _as_abstract(h2)
    if h1.states != h2.states:
        raise DomainError("kleisli: state spaces differ")
    composed = AbstractHmm(seq(h1.matrix, h2.matrix))
    prior = certify_prior if certify_prior is not None else Dist.uniform(h1.states)
    if composed(prior) != kleisli_apply(h1, h2, prior):
        raise InvariantError("matrix and semantic composition disagree")
    return composed


def diagonal(prior: Dist) -> Dist:
    """``prior`` copied onto the diagonal of X x X'."""
    domain = pair_domain(prior.domain, prior.domain)
    n = len(prior.domain)
    probs = [ZERO] * (n * n)
    for i, p in enumerate(prior.probs):
        probs[i * n + i] = p
    return Dist(domain, probs, check=False)


__all__ = [
    "AbstractHmm",
    "DEFAULT_MAX_COLUMNS",
    "HmmMatrix",
    "HmmSteps",
    "Step",
    "denote",
    "diagonal",
    "duplicate_correlation",
    "effective_channel",
    "effective_channel_steps",
    "extend",
    "final_markov",
    "identity_hmm",
    "kleisli",
    "kleisli_apply",
    "lift",
    "lift_with",
    "pure_channel",
    "pure_markov",
    "seq",
    "seq_all",
    "step",
]
