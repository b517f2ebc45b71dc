"""Exact finite probability: distributions, stochastic matrices, joints and hypers.

Every probability is a :class:`fractions.Fraction`.  Matrices are stored with
sparse rows (``dict`` column-index -> value, zeros omitted).  Row dicts are
never mutated after construction, which lets operations share identical rows
between matrices; :func:`cascade` and :func:`parallel` exploit that sharing to
stay fast on programs whose rows repeat (e.g. loop bodies that overwrite a
variable).
"""

from __future__ import annotations

import functools
import math
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

from .errors import DomainError, InvariantError

ZERO = Fraction(0)
ONE = Fraction(1)

Row = dict  # int -> Fraction, treated as immutable


def to_fraction(value: Any) -> Fraction:
    """Coerce ``value`` to an exact rational; floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"not an exact rational: {value!r}")


def lg(ratio: Fraction) -> float:
    """Base-2 logarithm of an exact rational, safe for huge numerators."""
    if ratio <= 0:
        return -math.inf
    return math.log2(ratio.numerator) - math.log2(ratio.denominator)


def fmt_bits(bits: float) -> str:
    return format(bits, ".10g")


# -- observations ---------------------------------------------------------


class _Unit:
    """The sole observation of a channel that leaks nothing."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNIT"

    def __reduce__(self):
        return (_Unit, ())

    def __lt__(self, other):
        return not isinstance(other, _Unit)


UNIT = _Unit()


class ObsTuple(tuple):
    """A flattened composite observation ``(y1, y2, ...)``.

    Distinguished from an ordinary tuple so that flattening never splices a
    tuple-valued atomic observation.
    """

    __slots__ = ()

    def __repr__(self):
        return "ObsTuple(" + tuple.__repr__(self) + ")"


def _obs_parts(y) -> tuple:
    if y is UNIT:
        return ()
    if isinstance(y, ObsTuple):
        return tuple(y)
    return (y,)


def combine_obs(y1, y2):
    """Left-associated flattening of an observation pair; units vanish."""
    parts = _obs_parts(y1) + _obs_parts(y2)
    if not parts:
        return UNIT
    if len(parts) == 1:
        return parts[0]
    return ObsTuple(parts)


def product_obs(obs1: Sequence, obs2: Sequence) -> tuple:
    """Labels for the product alphabet ``obs1 x obs2`` in row-major order.

    Flattening is used whenever it keeps the labels distinct, which is always
    the case for alphabets produced by this package; otherwise the pairs are
    kept nested so that no two observations are ever merged.
    """
    flat = tuple(combine_obs(a, b) for a in obs1 for b in obs2)
    if len(set(flat)) == len(flat):
        return flat
    return tuple(ObsTuple((a, b)) for a in obs1 for b in obs2)


# -- JSON helpers ---------------------------------------------------------


def rational_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def encode_label(value):
    if value is UNIT:
        return None
    if isinstance(value, ObsTuple):
        return {"obs": [encode_label(v) for v in value]}
    if isinstance(value, tuple):
        return [encode_label(v) for v in value]
    return value


def decode_label(value):
    if value is None:
        return UNIT
    if isinstance(value, dict) and set(value) == {"obs"}:
        return ObsTuple(decode_label(v) for v in value["obs"])
    if isinstance(value, list):
        return tuple(decode_label(v) for v in value)
    return value


def label_key(value) -> str:
    """String key used for labels inside JSON objects."""
    if isinstance(value, str):
        return value
    import json

    return json.dumps(encode_label(value))


@functools.lru_cache(maxsize=512)
def _index_of(domain: tuple) -> dict:
    index = {v: i for i, v in enumerate(domain)}
    if len(index) != len(domain):
        raise InvariantError(f"domain has repeated elements: {domain!r}")
    return index


def index_of(domain: tuple) -> dict:
    return _index_of(domain)


# -- distributions --------------------------------------------------------


class Dist:
    """A distribution over a finite ordered domain."""

    __slots__ = ("domain", "probs")

    def __init__(self, domain: Iterable, probs: Iterable, *, check: bool = True):
        self.domain = tuple(domain)
        self.probs = tuple(to_fraction(p) for p in probs)
        if check:
            index_of(self.domain)
            if len(self.probs) != len(self.domain):
                raise InvariantError("probability vector does not match domain")
            if any(p < 0 for p in self.probs):
                raise InvariantError("negative probability")
            if sum(self.probs) != 1:
                raise InvariantError(f"probabilities sum to {sum(self.probs)}, not 1")

    @classmethod
    def uniform(cls, domain: Iterable, support: Iterable | None = None) -> "Dist":
        domain = tuple(domain)
        support = domain if support is None else tuple(support)
        if not support:
            raise InvariantError("uniform distribution over an empty set")
        # repeated support elements get proportionally more weight
        share = Fraction(1, len(support))
        idx = index_of(domain)
        probs = [ZERO] * len(domain)
        for v in support:
            probs[idx[v]] += share
        return cls(domain, probs)

    @classmethod
    def point(cls, domain: Iterable, value) -> "Dist":
        domain = tuple(domain)
        probs = [ZERO] * len(domain)
        probs[index_of(domain)[value]] = ONE
        return cls(domain, probs)

    @classmethod
    def from_weights(cls, domain: Iterable, weights: Mapping) -> "Dist":
        domain = tuple(domain)
        idx = index_of(domain)
        unknown = set(weights) - set(idx)
        if unknown:
            raise DomainError(f"weights mention values outside the domain: {sorted(map(repr, unknown))}")
        return cls(domain, [to_fraction(weights.get(v, 0)) for v in domain])

    def __getitem__(self, value) -> Fraction:
        return self.probs[index_of(self.domain)[value]]

    @property
    def weights(self) -> dict:
        return dict(zip(self.domain, self.probs))

    @property
    def support(self) -> tuple:
        return tuple(v for v, p in zip(self.domain, self.probs) if p > 0)

    def push(self, f: Callable, codomain: Iterable) -> "Dist":
        """Push-forward along ``f``."""
        codomain = tuple(codomain)
        idx = index_of(codomain)
        probs = [ZERO] * len(codomain)
        for v, p in zip(self.domain, self.probs):
            if p:
                probs[idx[f(v)]] += p
        return Dist(codomain, probs)

    def __eq__(self, other):
        return isinstance(other, Dist) and self.domain == other.domain and self.probs == other.probs

    def __hash__(self):
        return hash((self.domain, self.probs))

    def __repr__(self):
        inner = ", ".join(f"{v!r}@{p}" for v, p in zip(self.domain, self.probs) if p)
        return f"Dist[{inner}]"

    def to_jsonable(self) -> dict:
        return {
            "domain": [encode_label(v) for v in self.domain],
            "weights": {label_key(v): rational_str(p) for v, p in zip(self.domain, self.probs)},
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "Dist":
        domain = tuple(decode_label(v) for v in data["domain"])
        raw = data["weights"]
        if isinstance(raw, list):
            return cls(domain, raw)
        keyed = {label_key(v): v for v in domain}
        unknown = set(raw) - set(keyed)
        if unknown:
            raise DomainError(f"weights mention values outside the domain: {sorted(unknown)}")
        return cls(domain, [to_fraction(raw.get(k, 0)) for k in keyed])


# -- matrices -------------------------------------------------------------


def _row_key(row: Row) -> tuple:
    return tuple(sorted(row.items()))


class _Table:
    """Sparse rational table with labelled rows and columns."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: Iterable, cols: Iterable, entries: Sequence, *, check: bool = True):
        rows = tuple(rows)
        cols = tuple(cols)
        if len(entries) != len(rows):
            raise InvariantError(f"{len(entries)} rows of entries for {len(rows)} row labels")
        cidx = index_of(cols)
        data = []
        for r in entries:
            if isinstance(r, Mapping):
                row = {}
                for c, v in r.items():
                    v = to_fraction(v)
                    if v:
                        row[cidx[c]] = v
            else:
                if len(r) != len(cols):
                    raise InvariantError("row length does not match column labels")
                row = {}
                for j, v in enumerate(r):
                    v = to_fraction(v)
                    if v:
                        row[j] = v
            data.append(row)
        self._set(rows, cols, tuple(data), check)

    def _set(self, rows, cols, data, check):
        self.rows = rows
        self.cols = cols
        self.data = data
        if check:
            index_of(rows)
            index_of(cols)
            self._validate()

    @classmethod
    def _raw(cls, rows: tuple, cols: tuple, data: tuple, *, check: bool = True):
        obj = cls.__new__(cls)
        obj._set(tuple(rows), tuple(cols), tuple(data), check)
        return obj

    def _validate(self):
        seen = set()
        for row in self.data:
            if id(row) in seen:
                continue
            seen.add(id(row))
            if any(v < 0 for v in row.values()):
                raise InvariantError("negative entry")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def entry(self, r, c) -> Fraction:
        return self.data[index_of(self.rows)[r]].get(index_of(self.cols)[c], ZERO)

    def row(self, r) -> dict:
        return {self.cols[j]: v for j, v in self.data[index_of(self.rows)[r]].items()}

    def dense(self) -> list[list[Fraction]]:
        n = len(self.cols)
        out = []
        for row in self.data:
            line = [ZERO] * n
            for j, v in row.items():
                line[j] = v
            out.append(line)
        return out

    def unique_rows(self) -> list[Row]:
        seen = {}
        for row in self.data:
            seen.setdefault(id(row), row)
        return list(seen.values())

    def relabel(self, row_map: Callable | None = None, col_map: Callable | None = None):
        rows = self.rows if row_map is None else tuple(map(row_map, self.rows))
        cols = self.cols if col_map is None else tuple(map(col_map, self.cols))
        return type(self)._raw(rows, cols, self.data)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}({len(self.rows)}x{len(self.cols)})"

    def to_jsonable(self) -> dict:
        return {
            "rows": [encode_label(v) for v in self.rows],
            "cols": [encode_label(v) for v in self.cols],
            "entries": [[rational_str(v) for v in line] for line in self.dense()],
        }

    @classmethod
    def from_jsonable(cls, data: Mapping):
        rows = [decode_label(v) for v in data["rows"]]
        cols = [decode_label(v) for v in data["cols"]]
        return cls(rows, cols, data["entries"])


class StochMatrix(_Table):
    """Row-stochastic matrix: a channel ``X -> Y`` or a markov ``X -> X``."""

    __slots__ = ()

    def _validate(self):
        super()._validate()
        seen = set()
        for i, row in enumerate(self.data):
            if id(row) in seen:
                continue
            seen.add(id(row))
            if sum(row.values()) != 1:
                raise InvariantError(f"row {self.rows[i]!r} sums to {sum(row.values())}, not 1")

    @classmethod
    def identity(cls, domain: Iterable) -> "StochMatrix":
        domain = tuple(domain)
        return cls._raw(domain, domain, tuple({i: ONE} for i in range(len(domain))))

    @classmethod
    def null(cls, domain: Iterable) -> "StochMatrix":
        """The channel ``NC`` that leaks nothing (single unit column)."""
        domain = tuple(domain)
        shared = {0: ONE}
        return cls._raw(domain, (UNIT,), tuple(shared for _ in domain))

    @classmethod
    def from_function(cls, rows: Iterable, cols: Iterable, f: Callable[[Any], Mapping]) -> "StochMatrix":
        rows = tuple(rows)
        return cls(rows, cols, [f(r) for r in rows])

    def row_dist(self, r) -> Dist:
        return Dist(self.cols, self.dense()[index_of(self.rows)[r]])


class Joint(_Table):
    """Joint distribution on ``rows x cols``."""

    __slots__ = ()

    def _validate(self):
        super()._validate()
        total = sum(sum(row.values()) for row in self.data)
        if total != 1:
            raise InvariantError(f"joint sums to {total}, not 1")

    @classmethod
    def from_dist(cls, dist: Dist) -> "Joint":
        """View a distribution over pairs as a joint on the two coordinates."""
        lefts, rights = [], []
        for a, b in dist.domain:
            if a not in lefts:
                lefts.append(a)
            if b not in rights:
                rights.append(b)
        li, ri = index_of(tuple(lefts)), index_of(tuple(rights))
        data = [dict() for _ in lefts]
        for (a, b), p in zip(dist.domain, dist.probs):
            if p:
                data[li[a]][ri[b]] = data[li[a]].get(ri[b], ZERO) + p
        return cls._raw(tuple(lefts), tuple(rights), tuple(data))

    def to_dist(self) -> Dist:
        n = len(self.cols)
        probs = [ZERO] * (len(self.rows) * n)
        for i, row in enumerate(self.data):
            for j, v in row.items():
                probs[i * n + j] = v
        return Dist([(a, b) for a in self.rows for b in self.cols], probs, check=False)


def pair_domain(left: Iterable, right: Iterable) -> tuple:
    return tuple((a, b) for a in left for b in right)


# -- hypers ---------------------------------------------------------------


class Hyper:
    """A distribution over distinct posteriors sharing one domain.

    Inners are kept in canonical order (ascending lexicographic on their
    probability vectors), so two hypers are equal iff their fields are.
    """

    __slots__ = ("domain", "outer", "inners")

    def __init__(self, outer: Iterable, inners: Iterable[Dist], *, check: bool = True):
        self.outer = tuple(to_fraction(p) for p in outer)
        self.inners = tuple(inners)
        if not self.inners:
            raise InvariantError("hyper with no inners")
        self.domain = self.inners[0].domain
        if check:
            if len(self.outer) != len(self.inners):
                raise InvariantError("outer/inner length mismatch")
            if any(d.domain != self.domain for d in self.inners):
                raise InvariantError("inners do not share a domain")
            if any(p <= 0 for p in self.outer):
                raise InvariantError("outer weights must be positive")
            if sum(self.outer) != 1:
                raise InvariantError("outer weights do not sum to 1")
            keys = [d.probs for d in self.inners]
            if any(a >= b for a, b in zip(keys, keys[1:])):
                raise InvariantError("inners not distinct or not in canonical order")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Fraction, Dist]]) -> "Hyper":
        """Amalgamate equal inners, drop zero weights, and order canonically."""
        merged: dict = {}
        domain = None
        for weight, inner in pairs:
            weight = to_fraction(weight)
            if domain is None:
                domain = inner.domain
            elif inner.domain != domain:
                raise DomainError("inners do not share a domain")
            if weight:
                merged[inner.probs] = merged.get(inner.probs, ZERO) + weight
        if not merged:
            raise InvariantError("hyper with no mass")
        keys = sorted(merged)
        return cls([merged[k] for k in keys], [Dist(domain, k, check=False) for k in keys])

    @classmethod
    def point(cls, dist: Dist) -> "Hyper":
        return cls([ONE], [dist])

    def __iter__(self):
        return iter(zip(self.outer, self.inners))

    def __len__(self):
        return len(self.inners)

    def __eq__(self, other):
        return isinstance(other, Hyper) and self.outer == other.outer and self.inners == other.inners

    def __hash__(self):
        return hash((self.outer, self.inners))

    def __repr__(self):
        body = ", ".join(f"{p}:{d!r}" for p, d in self)
        return f"Hyper[{body}]"

    def to_jsonable(self) -> dict:
        return {
            "domain": [encode_label(v) for v in self.domain],
            "outer": [rational_str(p) for p in self.outer],
            "inners": [d.to_jsonable()["weights"] for d in self.inners],
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "Hyper":
        domain = [encode_label(v) for v in (decode_label(v) for v in data["domain"])]
        inners = [Dist.from_jsonable({"domain": domain, "weights": w}) for w in data["inners"]]
        return cls.from_pairs(zip(map(to_fraction, data["outer"]), inners))


# -- operations -----------------------------------------------------------


def push_prior(prior: Dist, channel: StochMatrix) -> Joint:
    """Joint distribution ``prior(x) * channel(x, y)``."""
    if prior.domain != channel.rows:
        raise DomainError("prior domain differs from channel rows")
    data = tuple({j: p * v for j, v in row.items()} if p else {} for p, row in zip(prior.probs, channel.data))
    return Joint._raw(channel.rows, channel.cols, data)


def hyper_of_joint(joint: Joint) -> Hyper:
    """Abstract from the column index: posteriors on the rows weighted by column mass."""
    columns: dict[int, list] = {}
    for i, row in enumerate(joint.data):
        for j, v in row.items():
            columns.setdefault(j, []).append((i, v))
    n = len(joint.rows)
    pairs = []
    for j in sorted(columns):
        entries = columns[j]
        mass = sum(v for _, v in entries)
        if not mass:
            continue
        probs = [ZERO] * n
        for i, v in entries:
            probs[i] = v / mass
        pairs.append((mass, Dist(joint.rows, probs, check=False)))
    return Hyper.from_pairs(pairs)


def hyper_of(prior: Dist, channel: StochMatrix) -> Hyper:
    return hyper_of_joint(push_prior(prior, channel))


def factor_joint_right(joint: Joint) -> tuple[Dist, StochMatrix]:
    """Split ``joint`` on Z x X into its Z-marginal and a conditional Z -> X.

    Rows with zero marginal receive the uniform conditional.
    """
    n = len(joint.cols)
    uniform = {j: Fraction(1, n) for j in range(n)}
    marg, cond = [], []
    for row in joint.data:
        m = sum(row.values())
        marg.append(m)
        cond.append({j: v / m for j, v in row.items()} if m else uniform)
    return (
        Dist(joint.rows, marg, check=False),
        StochMatrix._raw(joint.rows, joint.cols, tuple(cond)),
    )


def factor_joint_left(joint: Joint) -> tuple[Dist, StochMatrix]:
    """Split ``joint`` on Z x X into its X-marginal and a conditional X -> Z.

    Columns with zero marginal receive the uniform conditional.
    """
    nz, nx = len(joint.rows), len(joint.cols)
    cols: list[dict] = [dict() for _ in range(nx)]
    for i, row in enumerate(joint.data):
        for j, v in row.items():
            cols[j][i] = v
    uniform = {i: Fraction(1, nz) for i in range(nz)}
    marg, cond = [], []
    for col in cols:
        m = sum(col.values())
        marg.append(m)
        cond.append({i: v / m for i, v in col.items()} if m else uniform)
    return (
        Dist(joint.cols, marg, check=False),
        StochMatrix._raw(joint.cols, joint.rows, tuple(cond)),
    )


def compose_joint(marginal: Dist, conditional: StochMatrix) -> Joint:
    """Inverse of :func:`factor_joint_right`."""
    return push_prior(marginal, conditional)


def cascade(a: StochMatrix, b: StochMatrix) -> StochMatrix:
    """Matrix product ``a . b`` of two stochastic matrices."""
    if a.cols != b.rows:
        raise DomainError("cascade: columns of the first matrix differ from rows of the second")
    memo: dict = {}
    data = []
    for row in a.data:
        if len(row) == 1:
            ((k, v),) = row.items()
            if v == 1:
                # deterministic row: share the target row outright
                data.append(b.data[k])
                continue
        key = _row_key(row)
        out = memo.get(key)
        if out is None:
            out = {}
            for k, v in row.items():
                for j, w in b.data[k].items():
                    out[j] = out.get(j, ZERO) + v * w
            memo[key] = out
        data.append(out)
    return StochMatrix._raw(a.rows, b.cols, tuple(data))


def parallel(c1: StochMatrix, c2: StochMatrix) -> StochMatrix:
    """Parallel composition ``(c1 || c2)(x, (y1, y2)) = c1(x, y1) c2(x, y2)``."""
    if c1.rows != c2.rows:
        raise DomainError("parallel: channels have different row sets")
    cols = product_obs(c1.cols, c2.cols)
    n2 = len(c2.cols)
    memo: dict = {}
    data = []
    for r1, r2 in zip(c1.data, c2.data):
        key = (_row_key(r1), id(r2))
        out = memo.get(key)
        if out is None:
            out = {}
            for j1, v1 in r1.items():
                base = j1 * n2
                if v1 == 1:
                    for j2, v2 in r2.items():
                        out[base + j2] = v2
                else:
                    for j2, v2 in r2.items():
                        out[base + j2] = v1 * v2
            memo[key] = out
        data.append(out)
    return StochMatrix._raw(c1.rows, cols, tuple(data))


def barycenter(h: Hyper) -> Dist:
    probs = [ZERO] * len(h.domain)
    for p, d in h:
        for i, q in enumerate(d.probs):
            if q:
                probs[i] += p * q
    return Dist(h.domain, probs)


def map_hyper(h: Hyper, f: Callable[[Dist], Dist]) -> Hyper:
    """Apply ``f`` to every inner and re-amalgamate."""
    return Hyper.from_pairs((p, f(d)) for p, d in h)


def project_hyper(h: Hyper, side: str) -> Hyper:
    """Marginalize inners over pairs onto the ``initial`` or ``final`` coordinate."""
    if side not in ("initial", "final"):
        raise ValueError(f"side must be 'initial' or 'final', not {side!r}")
    if not all(isinstance(v, tuple) and len(v) == 2 for v in h.domain):
        raise DomainError("project_hyper needs a hyper over pairs")
    k = 0 if side == "initial" else 1
    codomain = tuple(dict.fromkeys(v[k] for v in h.domain))
    return map_hyper(h, lambda d: d.push(lambda v: v[k], codomain))


def is_hashable_domain(domain: Sequence[Hashable]) -> bool:
    try:
        index_of(tuple(domain))
    except (TypeError, InvariantError):
        return False
    return True
