import logging

import pytest


@pytest.fixture(autouse=True)
def _quiet_channel_warnings(caplog):
    # closed-sideband drops are expected all over the driven-barrier tests
    logging.getLogger("traversal_lab.sideband").setLevel(logging.ERROR)
    yield
