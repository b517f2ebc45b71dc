"""The refinement (security) order on hypers and HMMs.

``d1 <= d2`` means ``d2`` is at least as secure as ``d1``: no gain function
finds ``d2`` more vulnerable.  It holds exactly when each inner of ``d2`` is a
mixture of inners of ``d1`` in a way that accounts for all of ``d1``'s mass;
that transport problem is decided with the exact solver in :mod:`qif.lp`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .collateral import Correlation, channel_of, collateral_channel
from .errors import DomainError, InvariantError
from .hmm import HmmMatrix, denote
from .lp import solve_feasibility
from .measures import (
    GainFunction,
    gid,
    hyper_vulnerability,
    posterior_vulnerability,
    shift_to_nonnegative,
    vulnerability,
)
from .prob import (
    ZERO,
    Dist,
    Hyper,
    Joint,
    barycenter,
    hyper_of,
    project_hyper,
    rational_str,
)

HOLDS = "HOLDS"
FAILS_GAIN = "FAILS_GAIN"
BARYCENTER_MISMATCH = "BARYCENTER_MISMATCH"
NO_WITNESS = "NO_WITNESS"

VIEWS = ("joint", "initial", "final")


@dataclass(frozen=True)
class RefinementVerdict:
    holds: bool
    reason: str
    witness: tuple | None = None
    counterexample: GainFunction | None = None
    note: str = ""
    vulnerabilities: tuple | None = field(default=None, compare=False)

    def to_jsonable(self) -> dict:
        out = {"holds": self.holds, "reason": self.reason}
        if self.note:
            out["note"] = self.note
        if self.witness is not None:
            out["witness"] = [[rational_str(v) for v in r] for r in self.witness]
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_jsonable()
        if self.vulnerabilities is not None:
            out["vulnerabilities"] = [rational_str(v) for v in self.vulnerabilities]
        return out


def check_witness(d1: Hyper, d2: Hyper, witness: Sequence[Sequence[Fraction]]) -> bool:
    """Whether ``witness`` splits ``d1`` exactly into the inners of ``d2``."""
    if len(witness) != len(d1) or any(len(r) != len(d2) for r in witness):
        return False
    if any(v < 0 for r in witness for v in r):
        return False
    if any(sum(r) != o for r, o in zip(witness, d1.outer)):
        return False
    size = len(d1.domain)
    for j, (o2, inner2) in enumerate(d2):
        for s in range(size):
            lhs = sum((witness[i][j] * inner1.probs[s] for i, inner1 in enumerate(d1.inners)), ZERO)
            if lhs != o2 * inner2.probs[s]:
                return False
    return True


def separates(g: GainFunction, d1: Hyper, d2: Hyper) -> bool:
    return hyper_vulnerability(g, d1) < hyper_vulnerability(g, d2)


def _transport_system(d1: Hyper, d2: Hyper):
    n1, n2, size = len(d1), len(d2), len(d1.domain)
    nvar = n1 * n2
    A, b = [], []
    for i in range(n1):
        row = [ZERO] * nvar
        for j in range(n2):
            row[i * n2 + j] = Fraction(1)
        A.append(row)
        b.append(d1.outer[i])
    for j in range(n2):
        for s in range(size):
            row = [ZERO] * nvar
            for i in range(n1):
                row[i * n2 + j] = d1.inners[i].probs[s]
            A.append(row)
            b.append(d2.outer[j] * d2.inners[j].probs[s])
    return A, b


def _gain_from_certificate(d1: Hyper, d2: Hyper, y) -> GainFunction:
    n1, n2, size = len(d1), len(d2), len(d1.domain)
    table = [[-y[n1 + j * size + s] for s in range(size)] for j in range(n2)]
    return GainFunction(range(n2), d1.domain, table)


def _barycenter_gain(b1: Dist, b2: Dist) -> GainFunction:
    # a single-choice gain rewards the secret whose mass d2 raises
    s = next(i for i, (p, q) in enumerate(zip(b1.probs, b2.probs)) if p < q)
    return GainFunction([0], b1.domain, [[Fraction(1) if i == s else ZERO for i in range(len(b1.domain))]])


def refine_hyper(d1: Hyper, d2: Hyper) -> RefinementVerdict:
    """Decide ``d1 <= d2`` and certify the answer either way."""
    if d1.domain != d2.domain:
        raise DomainError("hypers over different domains cannot be compared")
    b1, b2 = barycenter(d1), barycenter(d2)
    if b1 != b2:
        g = _barycenter_gain(b1, b2)
        verdict = RefinementVerdict(
            False,
            BARYCENTER_MISMATCH,
            counterexample=g,
            note="the hypers average to different distributions",
            vulnerabilities=(hyper_vulnerability(g, d1), hyper_vulnerability(g, d2)),
        )
        _certify(d1, d2, verdict)
        return verdict
    A, b = _transport_system(d1, d2)
    result = solve_feasibility(A, b)
    n2 = len(d2)
    if result.feasible:
        x = result.solution
        witness = tuple(tuple(x[i * n2 + j] for j in range(n2)) for i in range(len(d1)))
        verdict = RefinementVerdict(True, HOLDS, witness=witness)
    else:
        g = shift_to_nonnegative(_gain_from_certificate(d1, d2, result.certificate))
        verdict = RefinementVerdict(
            False,
            FAILS_GAIN,
            counterexample=g,
            vulnerabilities=(hyper_vulnerability(g, d1), hyper_vulnerability(g, d2)),
        )
    _certify(d1, d2, verdict)
    return verdict


def _certify(d1: Hyper, d2: Hyper, verdict: RefinementVerdict):
    if verdict.holds:
        if not check_witness(d1, d2, verdict.witness):
            raise InvariantError("refinement witness failed verification")
    elif verdict.counterexample is not None and not separates(verdict.counterexample, d1, d2):
        raise InvariantError("counterexample gain does not separate the hypers")


def counterexample_gain(d1: Hyper, d2: Hyper) -> GainFunction:
    """A nonnegative gain under which ``d1`` is strictly less vulnerable than ``d2``."""
    verdict = refine_hyper(d1, d2)
    if verdict.holds:
        raise ValueError("refinement holds, so no gain function separates the hypers")
    return verdict.counterexample


def hmm_hyper(h: HmmMatrix, prior: Dist, view: str = "joint") -> Hyper:
    """The hyper of ``h`` at ``prior``, over (initial, final) pairs or one side."""
    if view not in VIEWS:
        raise ValueError(f"view must be one of {VIEWS}, not {view!r}")
    hyper = denote(h, prior)
    return hyper if view == "joint" else project_hyper(hyper, view)


def refine_hmm(h1: HmmMatrix, h2: HmmMatrix, prior: Dist | None = None, view: str = "joint") -> RefinementVerdict:
    """Compare two HMMs at a single prior (uniform by default).

    A HOLDS verdict is sound at that prior only.  ``view`` selects whether
    the comparison is on (initial, final) pairs or on one of the projections.
    """
    if h1.states != h2.states:
        raise DomainError("HMMs over different state spaces cannot be compared")
    prior = prior if prior is not None else Dist.uniform(h1.states)
    verdict = refine_hyper(hmm_hyper(h1, prior, view), hmm_hyper(h2, prior, view))
    note = f"{view} view, sound at this prior only"
    return RefinementVerdict(
        verdict.holds, verdict.reason, verdict.witness, verdict.counterexample,
        (verdict.note + "; " if verdict.note else "") + note, verdict.vulnerabilities,
    )


def refine_structural(h1: HmmMatrix, h2: HmmMatrix) -> RefinementVerdict:
    """Look for a post-processing of observations turning ``h1`` into ``h2``.

    The witness is a row-stochastic matrix ``R`` (observations of ``h1`` to
    observations of ``h2``) with ``h2[x, y2, x'] = sum_y1 h1[x, y1, x'] R[y1, y2]``.
    Its existence implies refinement at every prior.  Its absence proves
    nothing by itself, so a failure is reported as NO_WITNESS unless the
    uniform-prior comparison also yields a separating gain.
    """
    if h1.states != h2.states:
        raise DomainError("HMMs over different state spaces cannot be compared")
    n, m1, m2 = h1.n, len(h1.obs), len(h2.obs)
    nvar = m1 * m2
    d1, d2 = h1.dense(), h2.dense()
    A, b = [], []
    for y1 in range(m1):
        row = [ZERO] * nvar
        for y2 in range(m2):
            row[y1 * m2 + y2] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    for x in range(n):
        for y2 in range(m2):
            for k in range(n):
                row = [ZERO] * nvar
                for y1 in range(m1):
                    row[y1 * m2 + y2] = d1[x][y1][k]
                if any(row) or d2[x][y2][k]:
                    A.append(row)
                    b.append(d2[x][y2][k])
    result = solve_feasibility(A, b)
    if result.feasible:
        x = result.solution
        witness = tuple(tuple(x[y1 * m2 + y2] for y2 in range(m2)) for y1 in range(m1))
        return RefinementVerdict(True, HOLDS, witness=witness, note="observation post-processing; holds at every prior")
    fallback = refine_hmm(h1, h2)
    if not fallback.holds:
        return fallback
    return RefinementVerdict(False, NO_WITNESS, note="no observation post-processing exists; refinement undecided")


def dalenius_correlation(g: GainFunction, prior: Dist) -> Correlation:
    """Correlation on W x X proportional to ``prior(x) g(w, x)``.

    Bayes vulnerability about W through the induced collateral channel equals
    g-vulnerability about X, divided by the normalizer.
    """
    if g.domain != prior.domain:
        raise DomainError("gain function domain differs from the prior domain")
    if not g.nonnegative:
        raise ValueError("the correlation needs a nonnegative gain function")
    weights = [[p * v for p, v in zip(prior.probs, r)] for r in g.table]
    total = sum(map(sum, weights), ZERO)
    if total == 0:
        raise ValueError("gain function is zero on the support of the prior")
    return Correlation(Joint(g.choices, prior.domain, [[v / total for v in r] for r in weights]))


def dalenius_normalizer(g: GainFunction, prior: Dist) -> Fraction:
    return sum((p * v for r in g.table for p, v in zip(prior.probs, r)), ZERO)


@dataclass(frozen=True)
class BayesRefutation:
    refuted: bool
    verdict: RefinementVerdict
    gain: GainFunction | None = None
    correlation: Correlation | None = None
    bayes_first: Fraction | None = None
    bayes_second: Fraction | None = None

    def to_jsonable(self) -> dict:
        out = {"refuted": self.refuted, "verdict": self.verdict.to_jsonable()}
        if self.refuted:
            out["gain"] = self.gain.to_jsonable()
            out["correlation"] = self.correlation.to_jsonable()
            out["bayesVulnerability"] = [rational_str(self.bayes_first), rational_str(self.bayes_second)]
        return out


def bayes_refutation(p, q, prior: Dist | None = None) -> BayesRefutation:
    """Deny ``p <= q`` with Bayes vulnerability about a collateral variable.

    Works on the effective channels.  When a gain ``g`` separates them, the
    correlation built from ``g`` makes ``q`` strictly more Bayes-vulnerable
    about W than ``p``.
    """
    cp, cq = channel_of(p), channel_of(q)
    if cp.rows != cq.rows:
        raise DomainError("programs over different state spaces cannot be compared")
    prior = prior if prior is not None else Dist.uniform(cp.rows)
    verdict = refine_hyper(hyper_of(prior, cp), hyper_of(prior, cq))
    if verdict.holds:
        return BayesRefutation(False, verdict)
    g = verdict.counterexample
    corr = dalenius_correlation(g, prior)
    bayes = gid(corr.z_domain)
    v1 = posterior_vulnerability(bayes, corr.z_marginal, collateral_channel(corr, cp))
    v2 = posterior_vulnerability(bayes, corr.z_marginal, collateral_channel(corr, cq))
    if not v1 < v2:
        raise InvariantError("collateral Bayes vulnerabilities are not inverted")
    return BayesRefutation(True, verdict, g, corr, v1, v2)


def transfer_identity_holds(g: GainFunction, prior: Dist, channel) -> bool:
    """Check the scaling relation between g-vulnerability and collateral Bayes vulnerability."""
    corr = dalenius_correlation(g, prior)
    norm = dalenius_normalizer(g, prior)
    bayes = gid(corr.z_domain)
    post = posterior_vulnerability(bayes, corr.z_marginal, collateral_channel(corr, channel))
    pre = vulnerability(bayes, corr.z_marginal)
    return (
        post == posterior_vulnerability(g, prior, channel) / norm
        and pre == vulnerability(g, prior) / norm
    )


__all__ = [
    "BARYCENTER_MISMATCH",
    "BayesRefutation",
    "FAILS_GAIN",
    "HOLDS",
    "NO_WITNESS",
    "RefinementVerdict",
    "VIEWS",
    "bayes_refutation",
    "check_witness",
    "counterexample_gain",
    "dalenius_correlation",
    "dalenius_normalizer",
    "hmm_hyper",
    "refine_hmm",
    "refine_hyper",
    "refine_structural",
    "separates",
    "transfer_identity_holds",
]
