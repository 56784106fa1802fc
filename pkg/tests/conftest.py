import pytest

from deon import scenarios
from deon.dsl import parse_scenario


@pytest.fixture(scope="session")
def golden_sources() -> dict[str, str]:
    return {name: scenarios.source(name) for name in scenarios.NAMES}


@pytest.fixture(scope="session")
def golden(golden_sources):
    loaded = {}
    for name, src in golden_sources.items():
        result = parse_scenario(src, filename=f"{name}.deon")
        assert result.ok, [str(d) for d in result.diagnostics]
        loaded[name] = result.scenario
    return loaded
