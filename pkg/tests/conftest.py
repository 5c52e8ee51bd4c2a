import pytest
from hypothesis import settings

from kgprobe.config import Config
from kgprobe.kg_core import build_local_graph, load_problems
from kgprobe.metrics import RoleInventory

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def config():
    return Config.load()


@pytest.fixture(scope="session")
def schema(config):
    return config.schema()


@pytest.fixture(scope="session")
def problems(config):
    from importlib import resources

    path = resources.files("kgprobe.data").joinpath("problems.jsonl")
    return load_problems(str(path))


@pytest.fixture(scope="session")
def graphs(problems, schema):
    return [build_local_graph(p, schema) for p in problems]


@pytest.fixture(scope="session")
def graph_by_id(graphs):
    return {g.problem_id: g for g in graphs}


@pytest.fixture(scope="session")
def inventory(config):
    return RoleInventory.from_config(config.tree["role_cues"])
