import pytest

from harness import start_server
from wms.store import open_store


@pytest.fixture
def store(tmp_path):
    return open_store(tmp_path / "data")


@pytest.fixture
def live(tmp_path):
    server = start_server(tmp_path / "data")
    yield server
    server.stop()
