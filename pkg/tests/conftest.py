import hypothesis
import numpy as np
import pytest

from taes.core import EmotionSpace, ExperienceModel

hypothesis.settings.register_profile("fast", max_examples=20)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile("ci")


@pytest.fixture
def scb():
    return EmotionSpace(["S", "C", "B"])


def model_with(space, probs, activity="a", scale=1e6):
    """Experience model whose derived distribution is (very nearly) ``probs``.

    With prior_weight = 0 the derived distribution equals counts / sum exactly.
    """
    probs = np.asarray(probs, dtype=float)
    return ExperienceModel(space, activity, probs * scale, prior_weight=0.0, observations=int(scale))


def random_strict(rng, k, alpha=1.0):
    p = rng.dirichlet(np.full(k, alpha))
    p = np.maximum(p, 1e-6)
    return p / p.sum()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def check(name: str, ok: bool, detail: str):
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
