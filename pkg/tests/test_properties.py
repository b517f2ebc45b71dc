"""Randomized laws.  Everything is compared as exact rationals."""

import itertools
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from conftest import (
    channels,
    correlations,
    dists,
    gains,
    hmms,
    prob_row,
    states,
    step_hmms,
    step_lists,
    stoch,
)
from qif.collateral import Correlation, ccap_ratio, check_collateral_bound, collateral_leakage, maximizing_gain_report
from qif.hmm import (
    HmmMatrix,
    HmmSteps,
    denote,
    diagonal,
    effective_channel,
    effective_channel_steps,
    extend,
    kleisli_apply,
    lift,
    lift_with,
    pure_channel,
    pure_markov,
    seq,
    seq_all,
    step,
)
from qif.measures import (
    gain_transformer,
    hyper_vulnerability,
    leakage,
    min_capacity_ratio,
    vulnerability,
)
from qif.prob import (
    Dist,
    StochMatrix,
    barycenter,
    cascade,
    factor_joint_left,
    hyper_of,
    parallel,
)
from qif.refine import (
    bayes_refutation,
    refine_hmm,
    refine_hyper,
    refine_structural,
    separates,
    transfer_identity_holds,
)

ZERO = Fraction(0)


@st.composite
def space_and(draw, make, lo=1, hi=4):
    xs = draw(states(lo, hi))
    return xs, draw(make(xs))


def brute_effective(steps):
    """Channel from initial state to observation strings, by summing over state paths."""
    xs = steps[0].channel.rows
    n = len(xs)
    chans = [s.channel.dense() for s in steps]
    marks = [s.markov.dense() for s in steps]
    out = []
    for x0 in range(n):
        row = {}
        for ys in itertools.product(*(range(len(c[0])) for c in chans)):
            total = ZERO
            for path in itertools.product(range(n), repeat=len(steps) - 1):
                states_ = (x0,) + path
                p = Fraction(1)
                for i, x in enumerate(states_):
                    p *= chans[i][x][ys[i]]
                    if i + 1 < len(states_):
                        p *= marks[i][x][states_[i + 1]]
                total += p
            row[ys] = total
        out.append(row)
    return out


def post_process(h, r):
    """``h`` with its observations pushed through the stochastic matrix ``r``."""
    n, d, rd = h.n, h.dense(), r.dense()
    rows = []
    for x in range(n):
        rows.append([[sum((d[x][y1][k] * rd[y1][y2] for y1 in range(len(h.obs))), ZERO) for k in range(n)]
                     for y2 in range(len(r.cols))])
    return HmmMatrix(h.states, r.cols, rows)


# -- HMM algebra


@given(space_and(step_lists))
def test_effective_channel_fold_matches_composite_and_path_sum(case):
    xs, steps = case
    folded = effective_channel_steps(steps)
    composite = effective_channel(seq_all([step(s.channel, s.markov) for s in steps]))
    assert folded == composite
    brute = brute_effective(steps)
    dense = folded.dense()
    for x in range(len(xs)):
        assert sorted(brute[x].values()) == sorted(dense[x])
        assert sum(dense[x]) == 1


@given(space_and(lambda xs: st.tuples(channels(xs), stoch(xs, xs))))
def test_effective_channel_of_single_step_and_prefix(case):
    xs, (c, m) = case
    assert effective_channel(step(c, m)) == c
    assert effective_channel(seq(step(c, m), pure_channel(c))) == parallel(c, cascade(m, c))


@given(space_and(lambda xs: st.tuples(channels(xs), channels(xs), stoch(xs, xs), stoch(xs, xs))))
def test_pure_component_algebra(case):
    xs, (c1, c2, m1, m2) = case
    assert seq(pure_channel(c1), pure_markov(m1)) == step(c1, m1)
    assert seq(pure_channel(c1), pure_channel(c2)) == pure_channel(parallel(c1, c2))
    assert seq(pure_markov(m1), pure_markov(m2)) == pure_markov(cascade(m1, m2))


@given(space_and(lambda xs: st.tuples(hmms(xs, 2), hmms(xs, 2), hmms(xs, 2))))
def test_seq_associative(case):
    xs, (h1, h2, h3) = case
    assert seq(seq(h1, h2), h3) == seq(h1, seq(h2, h3))


@given(space_and(lambda xs: st.tuples(hmms(xs), dists(xs))))
def test_denotation_keeps_prior(case):
    xs, (h, prior) = case
    bary = barycenter(denote(h, prior))
    n = len(xs)
    for i in range(n):
        assert sum(bary.probs[i * n:(i + 1) * n]) == prior.probs[i]


@given(space_and(lambda xs: st.tuples(hmms(xs), hmms(xs), dists(xs))))
def test_kleisli_matches_sequential_denotation(case):
    xs, (h1, h2, prior) = case
    assert denote(seq(h1, h2), prior) == kleisli_apply(h1, h2, prior)


@given(st.data())
def test_lift_ignores_conditional_on_null_states(data):
    xs = data.draw(states(2, 4))
    h = data.draw(hmms(xs))
    corr = data.draw(correlations(xs))
    marginal, left = factor_joint_left(corr.joint)
    # rewrite the rows of unreachable x arbitrarily
    rows = [left.dense()[i] if marginal.probs[i] else data.draw(prob_row(len(left.cols))) for i in range(len(xs))]
    other = StochMatrix(left.rows, left.cols, rows)
    assert lift_with(h, marginal, other) == lift_with(h, marginal, left) == lift(h, corr)


# -- capacities and collateral leakage


@given(space_and(step_lists))
def test_ccap_bounds_exact_capacity(case):
    _, steps = case
    assert ccap_ratio(steps) >= min_capacity_ratio(effective_channel_steps(steps))


@given(space_and(lambda xs: st.tuples(correlations(xs), channels(xs))))
def test_maximizing_gains_attain_fixed_prior_capacity(case):
    _, (corr, chan) = case
    assert maximizing_gain_report(corr, chan).equal


@given(space_and(lambda xs: st.tuples(correlations(xs), channels(xs), dists(xs, full=True))))
def test_collateral_capacity_bound_and_identity_equality(case):
    _, (corr, chan, prior) = case
    report = check_collateral_bound(corr, chan)
    assert report.lhs_ratio <= report.rhs_support_ratio <= report.rhs_ratio
    assert check_collateral_bound(Correlation.identity(prior), chan).equality


@given(space_and(lambda xs: st.tuples(channels(xs), dists(xs))))
def test_independent_correlation_leaks_nothing(case):
    xs, (chan, prior) = case
    zs = ("p", "q")
    corr = Correlation.independent(Dist(zs, [Fraction(1, 3), Fraction(2, 3)]), prior)
    from qif.measures import gid

    assert collateral_leakage(gid(zs), corr, chan).ratio == 1


@given(space_and(lambda xs: st.tuples(gains(xs), dists(xs, full=True), channels(xs))))
def test_leakage_never_exceeds_capacity(case):
    _, (g, prior, chan) = case
    if vulnerability(g, prior) == 0:
        return
    assert leakage(g, prior, chan).ratio <= min_capacity_ratio(chan)


@given(space_and(lambda xs: st.tuples(gains(xs), dists(xs), channels(xs))))
def test_dalenius_transfer(case):
    _, (g, prior, chan) = case
    if vulnerability(g, prior) == 0:
        return
    assert transfer_identity_holds(g, prior, chan)


@given(space_and(lambda xs: st.tuples(gains(xs, lo=-3), dists(xs), channels(xs))))
def test_vulnerability_convexity(case):
    _, (g, prior, chan) = case
    h = hyper_of(prior, chan)
    assert vulnerability(g, barycenter(h)) <= hyper_vulnerability(g, h)


# -- gain transformers


def transformer_oracle(g, h, prior):
    """max over strategies of the expected gain, enumerated directly."""
    n, d = h.n, h.dense()
    best = None
    tab = [[g(w, s) for s in g.domain] for w in g.choices]
    for strategy in itertools.product(range(len(g.choices)), repeat=len(h.obs)):
        total = ZERO
        for x in range(n):
            for y, w in enumerate(strategy):
                for u in range(n):
                    total += prior.probs[x] * d[x][y][u] * tab[w][x * n + u]
        best = total if best is None else max(best, total)
    return best


@given(space_and(lambda xs: st.tuples(hmms(xs, 2), dists(xs)), hi=2).flatmap(
    lambda c: st.tuples(st.just(c), gains(tuple((a, b) for a in c[0] for b in c[0]), max_choices=2))))
def test_gain_transformer_matches_posterior_vulnerability(case):
    (xs, (h, prior)), g = case
    gh = gain_transformer(g, h)
    posterior = hyper_vulnerability(g, denote(h, prior))
    assert vulnerability(gh, diagonal(prior)) == posterior == transformer_oracle(g, h, prior)


@given(space_and(lambda xs: st.tuples(hmms(xs, 2), hmms(xs, 2)), hi=2).flatmap(
    lambda c: st.tuples(st.just(c), gains(tuple((a, b) for a in c[0] for b in c[0]), max_choices=2))))
def test_gain_transformer_of_composition(case):
    (xs, (h, k)), g = case
    direct = gain_transformer(g, seq(h, k))
    nested = gain_transformer(gain_transformer(g, k), h)
    by_strategy = dict(zip(direct.choices, direct.table))
    flat = {tuple(itertools.chain.from_iterable(s)): row for s, row in zip(nested.choices, nested.table)}
    assert flat == by_strategy


# -- refinement


@given(space_and(lambda xs: st.tuples(channels(xs), channels(xs), dists(xs))))
def test_refinement_verdicts_certify_themselves(case):
    _, (c1, c2, prior) = case
    d1, d2 = hyper_of(prior, c1), hyper_of(prior, c2)
    verdict = refine_hyper(d1, d2)
    if not verdict.holds:
        assert separates(verdict.counterexample, d1, d2)


@given(st.data())
def test_refinement_agrees_with_sampled_gains(data):
    xs = data.draw(states(1, 3))
    prior = data.draw(dists(xs))
    c1 = data.draw(channels(xs))
    c2 = cascade(c1, data.draw(stoch(c1.cols, ("p", "q"))))
    d1, d2 = hyper_of(prior, c1), hyper_of(prior, c2)
    assert refine_hyper(d1, d2).holds
    for _ in range(3):
        g = data.draw(gains(xs, lo=-2))
        assert hyper_vulnerability(g, d2) <= hyper_vulnerability(g, d1)


@given(st.data())
def test_refinement_is_compositional(data):
    xs = data.draw(states(1, 3))
    h, k = data.draw(hmms(xs, 2)), data.draw(hmms(xs, 2))
    h2 = post_process(h, data.draw(stoch(h.obs, ("p", "q"))))
    k2 = post_process(k, data.draw(stoch(k.obs, ("p", "q"))))
    assert refine_structural(h, h2).holds and refine_structural(k, k2).holds
    prior = data.draw(dists(xs))
    assert refine_hmm(seq(h, k), seq(h2, k2), prior).holds


@given(st.data())
def test_structural_refinement_survives_every_extension(data):
    xs = data.draw(states(1, 3))
    h = data.draw(hmms(xs))
    h2 = post_process(h, data.draw(stoch(h.obs, ("p", "q"))))
    assert refine_structural(h, h2).holds
    corr = data.draw(correlations(xs))
    assert refine_hyper(lift(h, corr), lift(h2, corr)).holds
    assert refine_hyper(extend(h, corr), extend(h2, corr)).holds


@given(st.data())
def test_failing_extension_rules_out_refinement(data):
    xs = data.draw(states(1, 3))
    h, h2 = data.draw(step_hmms(xs)), data.draw(step_hmms(xs))
    corr = data.draw(correlations(xs))
    if not refine_hyper(extend(h, corr), extend(h2, corr)).holds:
        assert not refine_structural(h, h2).holds


@given(space_and(lambda xs: st.tuples(channels(xs), channels(xs), dists(xs, full=True))))
def test_bayes_refutation_inverts(case):
    _, (c1, c2, prior) = case
    r = bayes_refutation(c1, c2, prior)
    assert r.refuted == (not refine_hyper(hyper_of(prior, c1), hyper_of(prior, c2)).holds)
    if r.refuted:
        assert r.bayes_first < r.bayes_second
    assert not bayes_refutation(c1, c1, prior).refuted


@given(space_and(step_lists, hi=3))
def test_steps_json_round_trip(case):
    _, steps = case
    hs = HmmSteps(steps)
    assert HmmSteps.from_jsonable(hs.to_jsonable()).to_hmm() == hs.to_hmm()
