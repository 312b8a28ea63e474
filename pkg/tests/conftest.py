import warnings

import pytest

with warnings.catch_warnings():
    warnings.filterwarnings("ignore", message=".*httpx2.*")
    from fastapi.testclient import TestClient

from iaxrsw.service import create_app


@pytest.fixture()
def api_client():
    client = TestClient(create_app())
    yield client
    client.close()
