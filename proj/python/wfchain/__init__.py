"""Python access to the wfchain simulator and workflow primitives."""

import json
from pathlib import Path

from . import _core
from ._core import ScenarioError, expected_latency, genesis_hash, sha256_hex

__all__ = [
    "ScenarioError",
    "canonical",
    "designs_equivalent",
    "expected_latency",
    "generate_scenario",
    "genesis_hash",
    "is_reachable",
    "run_scenario",
    "sha256_hex",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def canonical(doc):
    """Canonical serialization of a JSON document (sorted keys, no floats)."""
    return _core.canonical(_text(doc))


def _scenario(scenario):
    if isinstance(scenario, (str, Path)) and Path(scenario).is_file():
        path = Path(scenario)
        return path.read_text(), str(path.parent)
    return _text(scenario), ""


def run_scenario(scenario, seed=None, design=None, trace=False):
    """Run a scenario given as a file path, a dict or JSON text."""
    text, base = _scenario(scenario)
    out = json.loads(_core.run_scenario(text, base, seed, design, trace))
    if trace:
        out["trace"] = [json.loads(line) for line in out["trace"].splitlines()]
    return out


def designs_equivalent(scenario, seed):
    text, base = _scenario(scenario)
    return json.loads(_core.designs_equivalent(text, base, seed))


def generate_scenario(seed):
    return json.loads(_core.generate_scenario(seed))


def is_reachable(model, from_marking, to_marking):
    return _core.is_reachable(_text(model), _text(from_marking), _text(to_marking))
