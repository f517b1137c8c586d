import math

import numpy as np
import pytest

from qtensor import diagnostics as dg
from qtensor.errors import InvalidArgument
from qtensor.experiments import init_defects, init_eoc
from qtensor.fem import P1Space, TensorField
from qtensor.mesh import rect_mesh
from qtensor.potential import PotentialParams
from qtensor.schemes import SchemeConfig, Stepper
from qtensor.tensor_core import uniaxial


@pytest.fixture(scope="module")
def sq2():
    return P1Space(rect_mesh(2, 2, 6, 6))


def uniform(space, Q):
    return TensorField(np.broadcast_to(np.asarray(Q), (space.n, 3, 3)).copy())


def test_energy_examples(sq2, params):
    assert dg.energy(sq2, uniform(sq2, np.zeros((3, 3))), params) == 0
    E = dg.energy(sq2, uniform(sq2, uniaxial(1, [0, 0, 1])), params)
    # |Omega| psi / eps with psi = -4/135
    assert E == pytest.approx(4 / 0.01 * (-4 / 135), rel=1e-12)


def test_energy_elastic_only(sq2):
    Q = np.zeros((sq2.n, 3, 3))
    x = sq2.mesh.nodes[:, 0]
    Q[:, 0, 1] = Q[:, 1, 0] = x
    # 1/2 int |grad Q|^2 = 1/2 * 2 entries * |Omega|
    assert dg.elastic_energy(sq2, Q) == pytest.approx(4.0, rel=1e-12)


def test_truncated_energy_agrees_inside(sq2, params):
    Q = uniform(sq2, uniaxial(1, [0, 1, 0]))
    assert dg.energy(sq2, Q, params, True) == pytest.approx(dg.energy(sq2, Q, params), rel=1e-12)


def test_nd_zero_for_no_change(sq2, params):
    Q = init_eoc(sq2.mesh)
    for sch in ("ues1d", "od2c", "od1d"):
        nd, nd_dir = dg.numerical_dissipation(sq2, Q, Q, params, 1e-3, sch)
        assert nd == 0 and nd_dir == pytest.approx(0, abs=1e-10)


@pytest.mark.parametrize("scheme", ["ues1d", "od2c", "od1d"])
def test_energy_law_and_direct_form_agree(scheme, params):
    sp_ = P1Space(rect_mesh(4, 4, 12, 12))
    p = params.with_(epsilon=1e-3)
    Q0 = init_defects(sp_.mesh)
    Q1, _ = Stepper(sp_, SchemeConfig(scheme, 1e-4, p)).step(Q0)
    nd, nd_dir = dg.numerical_dissipation(sp_, Q1, Q0, p, 1e-4, scheme)
    trunc = scheme == "ues1d"
    dE = (dg.energy(sp_, Q1, p, trunc) - dg.energy(sp_, Q0, p, trunc)) / 1e-4
    kin = dg.mass_norm_sq(sp_, Q1.values - Q0.values) / 1e-8
    assert abs(dE + kin + nd) <= 1e-8 * max(abs(dE), kin)
    # the solved system makes both forms equal up to solver tolerance
    assert nd_dir == pytest.approx(nd, rel=1e-5)


def test_eoc_examples():
    assert dg.eoc([1.3034e-3, 7.7166e-4], [1e-3, 5e-4])[0] == pytest.approx(0.7562, abs=5e-5)
    assert dg.eoc([4e-2, 1e-2], [2e-3, 1e-3])[0] == pytest.approx(2.0)
    # the table's step is 1/3000; its printed errors carry five digits
    assert dg.eoc([1.9778e-7, 8.7859e-8], [5e-4, 1e-3 / 3])[0] == pytest.approx(2.0015, abs=5e-4)


def test_eoc_errors():
    with pytest.raises(InvalidArgument):
        dg.eoc([1.0], [1.0])
    with pytest.raises(InvalidArgument):
        dg.eoc([1.0, 0.0], [1.0, 0.5])
    with pytest.raises(InvalidArgument):
        dg.eoc([1.0, 2.0], [1.0, -0.5])


def test_eoc_table_rates_match_columns():
    t = dg.EocTable(("11", "12"))
    for k, dt in enumerate((1e-3, 5e-4, 2.5e-4)):
        t.add(dt, [dt**2, 3 * dt], [dt, dt**1.5])
    rows = t.rows()
    assert math.isnan(rows[0][2])
    for i in (1, 2):
        r = rows[i]
        e_prev, e_now = rows[i - 1][1], r[1]
        assert r[2] == math.log(e_prev / e_now) / math.log(rows[i - 1][0] / r[0])
    np.testing.assert_allclose(t.rates("l2")[:, 0], 2.0)
    np.testing.assert_allclose(t.rates("h1")[:, 1], 1.5)
    assert t.header()[:3] == ["dt", "e2_11", "r2_11"]


def test_defect_field_examples(sq2):
    gap, v = dg.defect_field(uniform(sq2, uniaxial(1, [0, 0, 1])))
    np.testing.assert_allclose(gap, 1.0)
    np.testing.assert_allclose(np.abs(v[:, 2]), 1.0)
    gap, _ = dg.defect_field(uniform(sq2, np.zeros((3, 3))))
    assert not gap.any()
    gap, _ = dg.defect_field(uniform(sq2, np.diag([0.5, 0.1, -0.6])))
    np.testing.assert_allclose(gap, 0.4)


def test_defect_gap_nonnegative(sq2):
    gap, _ = dg.defect_field(init_eoc(sq2.mesh))
    assert gap.min() >= -1e-12


def test_max_principle_monitor(sq2):
    a = math.sqrt(1.4)
    assert dg.max_principle_monitor(uniform(sq2, np.zeros((3, 3))), a) == (0.0, False)
    m, bad = dg.max_principle_monitor(uniform(sq2, uniaxial(1, [0, 0, 1])), a)
    assert m == pytest.approx(math.sqrt(2 / 3)) and not bad
    m, bad = dg.max_principle_monitor(uniform(sq2, uniaxial(2, [0, 0, 1])), a)
    assert m == pytest.approx(2 * math.sqrt(2 / 3)) and bad
