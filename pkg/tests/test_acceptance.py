"""The twelve acceptance criteria, at full size and their stated tolerances.

Each criterion prints one ``[PASS]``/``[FAIL]`` line with its metric,
tolerance and runtime.  Run directly (``python3 tests/test_acceptance.py``)
for just the table.
"""

import sys

import pytest

from radreact.verify import CHECKS, run_check


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_acceptance(number, capsys):
    r = run_check(number, quick=False)
    with capsys.disabled():
        print("\n" + r.line(), flush=True)
    assert r.passed, f"{r.name}: metric {r.value:.3e} vs tolerance {r.tolerance:.1e}; {r.details}"


if __name__ == "__main__":
    results = [run_check(n, quick=False) for n in sorted(CHECKS)]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
