from pathlib import Path

import pytest

from cohomolab.finspace import FiniteSpace
from cohomolab.model import load_model

MODELS = Path(__file__).resolve().parents[1] / "src" / "cohomolab" / "models"


def model_path(name: str) -> str:
    return str(MODELS / f"{name}.model")


def shipped(name: str):
    return load_model(model_path(name))


def all_model_names() -> list[str]:
    return sorted(p.stem for p in MODELS.glob("*.model"))


def pseudocircle() -> FiniteSpace:
    return FiniteSpace.from_relations("abcd", [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])


def sierpinski() -> FiniteSpace:
    return FiniteSpace.from_relations("ab", [("a", "b")])


@pytest.fixture
def models_dir():
    return MODELS
