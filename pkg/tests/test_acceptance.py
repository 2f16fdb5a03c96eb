"""Full-scale acceptance criteria, one test each, at pinned tolerances and fixed seeds."""

import pytest

from famtree import acceptance

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def ctx():
    return acceptance.make_context("full", seed=acceptance.DEFAULT_SEED)


@pytest.mark.parametrize("cid", sorted(acceptance.CRITERIA), ids=lambda c: f"criterion{c:02d}")
def test_criterion(ctx, cid, acceptance_lines):
    result = acceptance.CRITERIA[cid](ctx)
    acceptance_lines.append(result.line())
    print(result.line())
    assert result.passed, result.line()
