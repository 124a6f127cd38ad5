from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def erc20_hex():
    return (FIXTURES / "erc20_token.hex").read_text().strip()


@pytest.fixture
def sample_hex():
    return (FIXTURES / "zoology_sample.hex").read_text().strip()


@pytest.fixture
def small_corpus(tmp_path):
    from opvec.synthetic import make_corpus

    labels = make_corpus(tmp_path / "corpus", n=30, seed=11)
    return tmp_path / "corpus", labels


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    n, text = marker.args
    _ACCEPTANCE.append((n, "PASS" if rep.passed else "FAIL", text, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, status, text, dur in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {status}  ({dur:6.2f}s)  {text}")
