import random

import pytest

from dlab import graining as gr
from dlab.graining import Coarse, Fine, audit_grainings, find_compatible, grain, graining_chain
from dlab.lattice import Box
from dlab.shifts import Shift, tv


def test_round_half_down():
    assert gr._round_half_down(1, 2) == 0  # 1/2 -> 0
    assert gr._round_half_down(3, 2) == 1  # 3/2 -> 1
    assert gr._round_half_down(-1, 2) == -1  # -1/2 -> -1
    assert gr._round_half_down(-3, 2) == -2  # -3/2 -> -2
    assert gr._round_half_down(5, 4) == 1
    assert gr._round_half_down(7, 4) == 2
    assert gr._round_half_down(-5, 4) == -1


def test_grain_examples():
    zero = Shift.zero(2)
    assert grain(zero, Coarse(3)) == zero
    # full cell: average exactly 1
    cell = Shift(2, {(0, 0): 1, (1, 0): 1, (0, 1): 1, (1, 1): 1})
    assert grain(cell, Coarse(2)) == cell
    # half cell: average 1/2 rounds down to 0
    half = Shift(2, {(0, 0): 1, (1, 0): 1})
    assert grain(half, Coarse(2)) == zero
    # 3/4 cell rounds to 1 across the cell
    top = Shift(2, {(0, 0): 1, (1, 0): 1, (0, 1): 1})
    assert grain(top, Coarse(2)) == cell


def test_grain_identity_specs():
    rng = random.Random(0)
    from dlab.audits import random_shift

    for _ in range(20):
        tau = random_shift(rng, 2, tv_max=30)
        assert grain(tau, Coarse(1)) == tau
        assert grain(tau, Fine(())) == tau


def test_grain_idempotent_on_own_cells():
    rng = random.Random(1)
    from dlab.audits import random_shift

    for _ in range(20):
        tau = random_shift(rng, 2, tv_max=40)
        for spec in (Coarse(2), Coarse(3), Fine((1,)), Fine((1, 2))):
            g = grain(tau, spec)
            assert grain(g, spec) == g


def test_fine_axis_validation():
    with pytest.raises(ValueError):
        grain(Shift.zero(2), Fine((3,)))


def test_find_compatible():
    zero = Shift.zero(2)
    rep = find_compatible(zero, 1)
    assert rep.compatible and rep.tv_ratio == 0.0
    one = Shift.indicator((0, 0))
    rep = find_compatible(one, 1)
    assert rep.compatible and rep.axes in ((1,), (2,))
    rng = random.Random(2)
    from dlab.audits import random_shift

    for d in (2, 3):
        for _ in range(30):
            tau = random_shift(rng, d, tv_max=40)
            for r in range(1, d + 1):
                rep = find_compatible(tau, r)
                g = grain(tau, Fine(rep.axes))
                assert tv(g) <= 20 * (2 * r + 1) * tv(tau)
                assert (tau - g).l1_norm() * d <= 4 * r * tv(tau)


def test_graining_chain():
    assert graining_chain(Shift.zero(2), 1) == [Shift.zero(2)]
    one = Shift.indicator((0, 0))  # tv 4 at d=2: a single halving suffices
    chain = graining_chain(one, 1)
    assert chain[0] == one
    assert chain[-1].is_zero()
    assert len(chain) == 3  # tau, tau_fine, tau_2
    rng = random.Random(3)
    from dlab.audits import random_shift

    for _ in range(30):
        tau = random_shift(rng, 2, tv_max=60)
        assert graining_chain(tau, 1)[-1].is_zero()


def test_audit_grainings_zero_and_random():
    checks = audit_grainings(Shift.zero(2))
    assert all(c.passed for c in checks)
    rng = random.Random(4)
    from dlab.audits import random_shift

    for _ in range(10):
        tau = random_shift(rng, 2, tv_max=40)
        assert all(c.passed for c in audit_grainings(tau, rng=random.Random(0)))


def test_audit_catches_flipped_rounding(monkeypatch):
    # mutate the rounding convention: halves now round up
    def bad_round(num, den):
        return -((-(2 * num + den)) // (2 * den))

    monkeypatch.setattr(gr, "_round_half_down", bad_round)
    half = Shift(2, {(0, 0): 1, (1, 0): 1})
    assert grain(half, Coarse(2)) != Shift.zero(2)  # mutation is live
    rng = random.Random(5)
    from dlab.audits import random_shift

    violated = False
    for i in range(40):
        tau = random_shift(rng, 2, tv_max=60)
        if any(not c.passed for c in audit_grainings(tau, rng=random.Random(i))):
            violated = True
            break
    assert violated
