import json

import numpy as np
import pytest
from sympy.combinatorics import Permutation, PermutationGroup

from boxlab import extension
from boxlab.errors import InputError
from boxlab.groups import cyclic


@pytest.fixture(scope="module")
def ext23():
    return extension.Extension(cyclic(2), cyclic(3), 1)


def test_letter_actions_generate_regular_group(ext23):
    perms = [Permutation(p.tolist()) for p in ext23.actions.values()]
    grp = PermutationGroup(perms)
    assert grp.order() == ext23.size == 24
    assert grp.is_transitive()


def test_tower_group_left_right_commute(ext23):
    D = ext23.D
    for j in range(len(D.right)):
        for s in (1, -1):
            left = D.left(j, s)
            for i, p in enumerate(D.right):
                assert np.array_equal(left[p], p[left])


def test_conjugation_is_an_automorphism(ext23):
    fp = ext23.fp
    g = fp.letter(1, 1)
    phi = ext23.conjugation(g)
    assert sorted(phi.tolist()) == list(range(ext23.D.n)) and phi[0] == 0


@pytest.mark.parametrize("A, B, k, order", [
    (cyclic(2), cyclic(3), 1, 24),
    (cyclic(3), cyclic(3), 1, 144),
    (cyclic(2), cyclic(2), 3, 32),
])
def test_small_extensions(A, B, k, order):
    r = extension.extension_experiment(A, B, k)
    assert r.order == r.expected_order == order
    assert r.passed, r.to_json()["checks"]
    assert r.max_ratio <= 4 * r.tau


def test_level_two_is_exhaustive():
    r = extension.extension_experiment(cyclic(2), cyclic(3), 2)
    assert r.order == 768 and r.fiber_checked == 128 == r.tower_size
    assert not r.lower_violations and not r.upper_violations
    assert r.weighted_violations == 0


def test_report_json(tmp_path):
    r = extension.extension_experiment(cyclic(2), cyclic(3), 1)
    r.write_json(tmp_path / "x.json")
    data = json.loads((tmp_path / "x.json").read_text())
    assert data["schema_version"] == 1 and data["passed"] is True
    assert all(data["checks"].values())


def test_errors():
    with pytest.raises(InputError):
        extension.Extension(cyclic(1), cyclic(3), 1)
    with pytest.raises(InputError, match="cap"):
        extension.Extension(cyclic(2), cyclic(3), 3, cap=1000)
