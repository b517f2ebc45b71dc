from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qif.collateral import Correlation
from qif.hmm import HmmMatrix, Step, step
from qif.measures import GainFunction
from qif.prob import Dist, Joint, StochMatrix

settings.register_profile(
    "qif",
    max_examples=200,
    derandomize=True,
    deadline=None,
    database=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("qif")

LABELS = ("a", "b", "c", "d")
OBS = ("u", "v", "w")


def normalize(weights):
    total = sum(weights)
    return [Fraction(w, total) for w in weights]


@st.composite
def prob_row(draw, size, full=False):
    lo = 1 if full else 0
    w = draw(st.lists(st.integers(lo, 4), min_size=size, max_size=size).filter(any))
    return normalize(w)


@st.composite
def states(draw, lo=1, hi=4):
    return LABELS[: draw(st.integers(lo, hi))]


@st.composite
def dists(draw, domain, full=False):
    return Dist(domain, draw(prob_row(len(domain), full)))


@st.composite
def stoch(draw, rows, cols):
    return StochMatrix(rows, cols, [draw(prob_row(len(cols))) for _ in rows])


@st.composite
def channels(draw, rows, max_obs=3):
    cols = OBS[: draw(st.integers(1, max_obs))]
    return draw(stoch(rows, cols))


@st.composite
def steps_of(draw, xs, max_obs=3):
    return Step(draw(channels(xs, max_obs)), draw(stoch(xs, xs)))


@st.composite
def step_lists(draw, xs, max_steps=3, max_obs=3):
    return [draw(steps_of(xs, max_obs)) for _ in range(draw(st.integers(1, max_steps)))]


@st.composite
def hmms(draw, xs, max_obs=3):
    """An HMM with arbitrary correlation between observation and final state."""
    obs = OBS[: draw(st.integers(1, max_obs))]
    n = len(xs)
    rows = []
    for _ in xs:
        flat = draw(prob_row(len(obs) * n))
        rows.append([flat[j * n:(j + 1) * n] for j in range(len(obs))])
    return HmmMatrix(xs, obs, rows)


@st.composite
def step_hmms(draw, xs, max_obs=3):
    s = draw(steps_of(xs, max_obs))
    return step(s.channel, s.markov)


@st.composite
def gains(draw, domain, max_choices=3, lo=0, hi=4):
    k = draw(st.integers(1, max_choices))
    table = [draw(st.lists(st.integers(lo, hi), min_size=len(domain), max_size=len(domain))) for _ in range(k)]
    return GainFunction(range(k), domain, table)


@st.composite
def correlations(draw, xs, max_z=3):
    zs = tuple(f"z{i}" for i in range(draw(st.integers(1, max_z))))
    flat = draw(prob_row(len(zs) * len(xs)))
    n = len(xs)
    return Correlation(Joint(zs, xs, [flat[i * n:(i + 1) * n] for i in range(len(zs))]))


@pytest.fixture
def tmp_sources(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)

    return write


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
