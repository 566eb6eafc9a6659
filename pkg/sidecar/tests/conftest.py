import pytest

from mlm_sidecar.model import MlmModel, build_tiny_checkpoint

TINY_WORDS = ["the", "cat", "dog", "capy", "sleeps", "in", "water",
              "are", "cute", "and"]
TINY_CONTINUATIONS = ["bara", "s"]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "tiny"
    return build_tiny_checkpoint(path, TINY_WORDS, TINY_CONTINUATIONS, seed=0)


@pytest.fixture(scope="session")
def tiny_model(tiny_checkpoint):
    return MlmModel(tiny_checkpoint)
