"""py.test configuration."""
from typing import Callable

import pytest

from zkbid.crypto.accounts import seeded_entropy
from zkbid.zk.backend import TransparentBackend


def pytest_addoption(parser):
    parser.addoption("--acceptance", action="store_true",
                     help="run acceptance-scale trial counts and use the real prover end to end")
    parser.addoption("--write-logs", action="store_true", help="write event logs to working directory")


@pytest.fixture(scope="session")
def acceptance(request) -> bool:
    return request.config.getoption("--acceptance")


@pytest.fixture(scope="session")
def should_log(request) -> bool:
    return request.config.getoption("--write-logs")


@pytest.fixture(scope="session")
def trials(acceptance: bool) -> Callable[[int, int], int]:
    """Returns `pick(full, quick)`, which chooses a trial count depending on `--acceptance`."""
    def pick(full: int, quick: int) -> int:
        return full if acceptance else quick
    return pick


@pytest.fixture()
def test_backend_allowed(monkeypatch):
    """Allows the transparent proving backend for the duration of a test."""
    monkeypatch.setenv("ZKBID_ALLOW_TEST_BACKEND", "1")


@pytest.fixture(scope="module")
def allow_test_backend():
    """Module-wide version of `test_backend_allowed`, for module-scoped fixtures that execute transactions."""
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv("ZKBID_ALLOW_TEST_BACKEND", "1")
        yield


@pytest.fixture(scope="session")
def transparent_keys():
    """Keys of the transparent backend for the face-match circuit, made once per session."""
    return TransparentBackend().keygen(entropy=seeded_entropy("transparent-keys"))
