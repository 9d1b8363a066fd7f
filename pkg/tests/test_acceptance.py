"""Acceptance criteria 1-16 at their stated sizes and tolerances.

Each run prints one line: criterion NN PASS|FAIL  title  (seconds).
"""
import json

import pytest

from kpzlab import acceptance

RESULTS = {}


@pytest.mark.parametrize("cid", sorted(acceptance.CRITERIA))
def test_criterion(cid):
    rec = acceptance.CRITERIA[cid]("full")
    RESULTS[cid] = rec
    print("\n" + acceptance.line(rec))
    failed = [c for c in rec["checks"] if not c["ok"]]
    assert rec["verdict"] == "PASS", json.dumps(failed, default=str)


def test_summary():
    print()
    for cid in sorted(RESULTS):
        print(acceptance.line(RESULTS[cid]))
