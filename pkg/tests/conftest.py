import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for docgen

import acdl
from acdl.diagnostics import Severity

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


@pytest.fixture(scope="session")
def corpus():
    """name -> source for every valid bundled example."""
    return {name: acdl.corpus_source(name) for name in acdl.corpus_names()}


@pytest.fixture(scope="session")
def oracles():
    return json.loads((FIXTURES / "expected" / "oracles.json").read_text())


def load_env(name: str):
    from acdl.expansion import EnvironmentDocument
    return EnvironmentDocument.from_json(
        (FIXTURES / "envs" / f"{name}.json").read_text())


def errors_of(diags):
    return [d for d in diags if d.severity is Severity.ERROR]


def parse_clean(source: str, file: str = "<test>"):
    """Parse asserting zero error diagnostics."""
    from acdl.parser import parse
    doc, diags = parse(source, file)
    errs = errors_of(diags)
    assert not errs, [d.to_line() for d in errs]
    return doc


def resolved(source: str, context: str):
    from acdl.semantics import resolve
    doc = parse_clean(source)
    ctx, diags = resolve(doc, context)
    errs = errors_of(diags)
    assert ctx is not None and not errs, [d.to_line() for d in errs]
    return ctx
