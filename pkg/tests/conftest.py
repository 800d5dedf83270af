import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest  # noqa: E402

from dmpavoid.learning.chain import train_chain  # noqa: E402
from dmpavoid.learning.dataset import ParamGrid, gen_dataset  # noqa: E402


@pytest.fixture(scope="session")
def small_data():
    """Four ellipses on an 8^3 grid: enough rows to train a rough chain quickly."""
    return gen_dataset(4, ParamGrid.uniform(8), seed=3)


@pytest.fixture(scope="session")
def small_chains(small_data):
    return {v: train_chain(small_data, v, seed=4, max_epochs=60) for v in ("rc", "rc-delta")}


@pytest.fixture(scope="session")
def desk_config():
    from dmpavoid.config import Config
    return Config(scenarios=10, grid=20)


@pytest.fixture(scope="session")
def desk_data(desk_config):
    """Desk-scale dataset: 10 ellipses on a 20^3 grid (about a minute)."""
    cfg = desk_config
    return gen_dataset(cfg.scenarios, cfg.param_grid(), cfg.baseline,
                       (cfg.semi_axis_min, cfg.semi_axis_max), cfg.stream("dataset"))


@pytest.fixture(scope="session")
def desk_split(desk_config, desk_data):
    from dmpavoid.learning.dataset import split_dataset
    return split_dataset(desk_data, desk_config.train_fraction, desk_config.stream("split"))


@pytest.fixture(scope="session")
def desk_chains(desk_config, desk_split):
    train, _ = desk_split
    return {v: train_chain(train, v, desk_config.stream("init"), desk_config.hidden,
                           desk_config.max_epochs) for v in ("rc", "rc-delta")}


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)``, then assert ``ok``."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(n: int, ok: bool, detail: str):
        lines[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
