import itertools

import numpy as np
import pytest


def brute_concordant(X, Y, B):
    """Triple loop over instances and response pairs; strict comparisons only."""
    X, Y, B = np.asarray(X, float), np.asarray(Y, float), np.asarray(B, float)
    count = 0
    for i in range(X.shape[0]):
        s = [sum(X[i, r] * B[r, j] for r in range(X.shape[1])) for j in range(B.shape[1])]
        for j, k in itertools.combinations(range(Y.shape[1]), 2):
            if (Y[i, j] > Y[i, k] and s[j] > s[k]) or (Y[i, j] < Y[i, k] and s[j] < s[k]):
                count += 1
    return count


def brute_tau(a, b):
    q = len(a)
    net = 0
    for j, k in itertools.combinations(range(q), 2):
        da = int(a[j] > a[k]) - int(a[j] < a[k])
        db = int(b[j] > b[k]) - int(b[j] < b[k])
        net += da * db
    return net / (q * (q - 1) / 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_step_problem(rng, T):
    """Seeded step-sum problem with injected duplicates, zero slopes and sign-skewed slopes."""
    from ordreg.stepmax import StepSumProblem

    u = rng.standard_normal(T)
    v = rng.standard_normal(T)
    mode = rng.integers(0, 4)
    if mode == 1 and T > 1:
        # duplicate breakpoints, some with opposite slopes
        src = rng.integers(0, T, size=T // 2)
        dst = rng.integers(0, T, size=T // 2)
        scale = rng.choice([-2.0, 1.0, 3.0], size=T // 2)
        u[dst], v[dst] = u[src] * scale, v[src] * scale
    elif mode == 2:
        v[rng.random(T) < 0.3] = 0.0
    elif mode == 3:
        v = -np.abs(v)
    if rng.random() < 0.2:
        u = np.round(u, 1)
        v = np.round(v, 1)
    return StepSumProblem(u, v)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
