"""Bundled demonstration models, shipped as .sd files under models/."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .ast import ModelAst, StockflowError
from .lang import parse_model


class UnknownModelError(StockflowError):
    pass


@dataclass(frozen=True)
class BundledModel:
    id: str
    description: str
    source: str


_DESCRIPTIONS = {
    "pharma-baseline": (
        "Pharmaceutical quality-control workforce: hiring driven by a "
        "threshold on averaged customer complaints"
    ),
    "pharma-improved": (
        "Modified hiring policy: testers needed follows the averaged order "
        "rate instead of complaints"
    ),
}

BUNDLED_IDS = tuple(_DESCRIPTIONS)


def _read_source(model_id: str) -> str:
    ref = resources.files(__package__).joinpath(f"models/{model_id}.sd")
    return ref.read_text(encoding="utf-8")


def list_bundled() -> list[BundledModel]:
    return [
        BundledModel(id=mid, description=_DESCRIPTIONS[mid], source=_read_source(mid))
        for mid in BUNDLED_IDS
    ]


def load_bundled(model_id: str) -> ModelAst:
    if model_id not in _DESCRIPTIONS:
        raise UnknownModelError(
            f"unknown bundled model '{model_id}' (available: {', '.join(BUNDLED_IDS)})"
        )
    return parse_model(_read_source(model_id), model_id=model_id)
