"""Bundled reference networks (transcribed published constructions)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .network import LayeredNetwork, parse_eps


@dataclass(frozen=True)
class Figure:
    name: str
    network: LayeredNetwork
    cls: str
    eps: Fraction | None
    description: str


def names() -> list[str]:
    files = resources.files(__package__) / "data"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load(name: str) -> Figure:
    path = resources.files(__package__) / "data" / f"{name}.json"
    if not path.is_file():
        raise KeyError(f"no bundled network {name!r}; known: {', '.join(names())}")
    data = json.loads(path.read_text())
    eps = parse_eps(data["eps"]) if "eps" in data else None
    return Figure(name, LayeredNetwork.from_json(data), data["class"], eps, data.get("description", ""))


def all_figures() -> list[Figure]:
    return [load(name) for name in names()]
