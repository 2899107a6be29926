"""The ten end-to-end acceptance criteria, one test each.

Every criterion prints a single ``[PASS]``/``[FAIL]`` line (bypassing output
capture) followed, on failure, by the offending checks.
"""
import pytest

from euler_geom.checks import CRITERIA


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1), ids=lambda k: f"criterion{k:02d}-{CRITERIA[k - 1][1].__name__}")
def test_criterion(number, capsys):
    name, battery = CRITERIA[number - 1]
    checks = battery()
    failed = [c for c in checks if not c.passed]
    with capsys.disabled():
        print(f"\n[{'FAIL' if failed else 'PASS'}] {number:2d}. {name} ({len(checks) - len(failed)}/{len(checks)} checks)")
        for c in failed:
            print(f"       {c.check}: {c.value!r} vs bound {c.bound!r}")
    assert not failed, "; ".join(f"{c.check} = {c.value!r} > {c.bound!r}" for c in failed)
