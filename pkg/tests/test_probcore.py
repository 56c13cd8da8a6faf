import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from bcbounds.probcore import (
    BroadcastChannel,
    JointPmf,
    Pmf,
    ProbabilityError,
    TransitionMatrix,
    binary_entropy,
    entropy,
    extend_through_channel,
    marginalize,
    mutual_information,
    product_joint,
    with_outputs,
)

import oracles
from conftest import random_channel, random_joint


def test_binary_entropy_known_values():
    assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(oracles.h2(0.11), abs=1e-14)


def test_binary_entropy_rejects_outside_unit():
    with pytest.raises(ValueError):
        binary_entropy(1.5)
    with pytest.raises(ValueError):
        binary_entropy(-0.01)


def test_entropy_uniform():
    assert entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-15)
    assert entropy(Pmf([1.0, 0.0, 0.0])) == 0.0


@pytest.mark.parametrize("bad", [[0.5, 0.6], [1.2, -0.2], [np.nan, 1.0], []])
def test_pmf_validation(bad):
    with pytest.raises(ProbabilityError):
        Pmf(bad)


def test_pmf_mass_tolerance():
    Pmf([0.5, 0.5 + 5e-13])
    with pytest.raises(ProbabilityError):
        Pmf([0.5, 0.5 + 1e-11])


def test_transition_matrix_names_the_row():
    with pytest.raises(ProbabilityError, match="row 1"):
        TransitionMatrix([[0.5, 0.5], [0.3, 0.6]])


def test_containers_are_read_only():
    j = JointPmf(("A", "B"), [[0.25, 0.25], [0.25, 0.25]])
    with pytest.raises(ValueError):
        j.table[0, 0] = 1.0


def test_channel_input_sizes_must_agree():
    with pytest.raises(ProbabilityError):
        BroadcastChannel.from_rows([[1, 0], [0, 1]], [[1.0]])


def test_joint_label_errors():
    with pytest.raises(ValueError):
        JointPmf(("A", "A"), [[0.5, 0], [0, 0.5]])
    j = JointPmf(("A", "B"), [[0.5, 0], [0, 0.5]])
    with pytest.raises(KeyError):
        j.axis("C")
    with pytest.raises(ValueError):
        mutual_information(j, "A", "A")


def test_marginalize_orders_axes():
    j = random_joint(np.random.default_rng(1), ("A", "B", "C"), (2, 3, 4))
    m = marginalize(j, ("C", "A"))
    assert m.labels == ("C", "A")
    np.testing.assert_allclose(m.table, j.table.sum(axis=1).T)


def test_mutual_information_matches_loop_oracle(rng):
    for _ in range(30):
        j = random_joint(rng, ("U", "V", "X"), (3, 2, 3), sparsity=0.3)
        ch = random_channel(rng, 3)
        full = with_outputs(j, ch)
        ref = oracles.table_to_dict(("U", "V", "X"), j.table)
        ref = oracles.extend(ref, ch.to_y1.rows, "X", "Y1")
        ref = oracles.extend(ref, ch.to_y2.rows, "X", "Y2")
        for a, b, c in [("U", "Y1", ()), (("U", "V"), "Y2", ()), ("U", "Y1", ("V",)),
                        ("X", "Y2", ("U",)), ("U", "V", ())]:
            a_ = (a,) if isinstance(a, str) else a
            got = mutual_information(full, a, b, c)
            want = oracles.I(ref, a_, (b,), c)
            assert got == pytest.approx(want, abs=1e-12)


def test_extend_through_channel_is_markov(rng):
    j = random_joint(rng, ("U", "X"), (3, 2))
    ch = random_channel(rng, 2)
    e = extend_through_channel(j, ch, "Y2")
    assert e.labels == ("U", "X", "Y2")
    assert mutual_information(e, "U", "Y2", "X") == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        extend_through_channel(e, ch, "Y2")


def test_extend_checks_input_size(rng):
    j = random_joint(rng, ("U", "X"), (2, 3))
    with pytest.raises(ValueError):
        extend_through_channel(j, random_channel(rng, 2), "Y1")


def test_product_joint_has_zero_information():
    j = product_joint(("A", "B"), [0.3, 0.7], [0.2, 0.5, 0.3])
    assert mutual_information(j, "A", "B") == pytest.approx(0.0, abs=1e-15)


# --- properties -------------------------------------------------------------

tables = hnp.arrays(np.float64, st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(2, 3)),
                    elements=st.floats(0.0, 1.0, allow_subnormal=False))


def _joint(arr):
    if arr.sum() <= 1e-9:
        arr = np.ones_like(arr)
    return JointPmf(("U", "V", "X"), arr / arr.sum())


@settings(max_examples=150, deadline=None)
@given(tables, st.integers(0, 2**32 - 1))
def test_information_inequalities(arr, seed):
    j = _joint(arr)
    ch = random_channel(np.random.default_rng(seed), j.size("X"))
    f = with_outputs(j, ch)
    mi = mutual_information
    tol = 1e-12
    # nonnegativity and symmetry
    assert mi(f, "U", "Y1") >= -tol
    assert mi(f, "U", "Y1", "V") >= -tol
    assert mi(f, "U", "V") == pytest.approx(mi(f, "V", "U"), abs=1e-12)
    # chain rule
    assert mi(f, ("U", "V"), "Y1") == pytest.approx(mi(f, "U", "Y1") + mi(f, "V", "Y1", "U"), abs=1e-12)
    # data processing through the channel
    assert mi(f, "U", "Y1") <= mi(f, "X", "Y1") + tol
    assert mi(f, ("U", "V"), "Y2") <= mi(f, "X", "Y2") + tol
    # bounded by the alphabet
    assert f.entropy("X") <= math.log2(f.size("X")) + tol
