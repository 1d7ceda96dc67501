import numpy as np
import pytest

from hodyn.game import Game


def random_game(rng, shape, low=-5, high=6, integer=True):
    if integer:
        return Game(tuple(rng.integers(low, high, size=shape).astype(float)
                          for _ in shape))
    return Game(tuple(rng.normal(size=shape) for _ in shape))


def random_profile(rng, game, floor=0.0):
    out = []
    for n in game.action_counts:
        v = rng.dirichlet(np.ones(n)) + floor
        out.append(v / v.sum())
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ----------------------------------------------------------

_CRITERIA: dict[str, list] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    cid = props.get("criterion")
    if cid:
        name = report.nodeid.split("::")[-1]
        _CRITERIA.setdefault(cid, []).append((name, report.passed, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        parts = _CRITERIA[cid]
        ok = all(p for _, p, _ in parts)
        failed = [n for n, p, _ in parts if not p]
        line = f"{cid} {'PASS' if ok else 'FAIL'}"
        if failed:
            line += " (failing: " + ", ".join(failed) + ")"
        tr.write_line(line)
        details = {d for _, _, d in parts if d}
        for d in sorted(details):
            tr.write_line(f"    {d}")
