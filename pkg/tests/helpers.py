import json
from pathlib import Path

from triple_spread.params import PipelineParams

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


def fixture_params(name: str) -> PipelineParams:
    return PipelineParams.from_dict(load_fixture(name)["params"])
