"""Environment-driven settings for the wallet and the proving backend."""
import logging
import os
from pathlib import Path
from typing import Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)

HOME_ENV = "ZKBID_HOME"
BACKEND_ENV = "ZKBID_ZK_BACKEND"
ALLOW_TEST_BACKEND_ENV = "ZKBID_ALLOW_TEST_BACKEND"

DEFAULT_HOME = Path("~/.zkbid")
DEFAULT_BACKEND = "groth16"
KNOWN_BACKENDS = ("groth16", "transparent")


class Settings(object):
    """Settings read from the environment once, at construction time."""

    def __init__(self) -> None:
        self.home = Path(os.environ.get(HOME_ENV, str(DEFAULT_HOME))).expanduser()

        self.backend = DEFAULT_BACKEND
        backend_str = os.environ.get(BACKEND_ENV)
        if backend_str is not None:
            if backend_str in KNOWN_BACKENDS:
                self.backend = backend_str
            else:
                logger.warning("Environment %s not a known backend: %s; using %s", BACKEND_ENV, backend_str,
                               DEFAULT_BACKEND)

        self.allow_test_backend = os.environ.get(ALLOW_TEST_BACKEND_ENV) == "1"

    def check_backend(self, name: Optional[str] = None) -> str:
        """Returns the backend to use; raises ConfigError if it is the test backend and that is not allowed."""
        name = name or self.backend
        if name not in KNOWN_BACKENDS:
            raise ConfigError(f"unknown proving backend: {name}")
        if name == "transparent" and not self.allow_test_backend:
            raise ConfigError(f"the transparent backend is for tests only; set {ALLOW_TEST_BACKEND_ENV}=1 to use it")
        return name


def load_settings() -> Settings:
    return Settings()
