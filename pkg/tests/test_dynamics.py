import numpy as np
import pytest
import scipy.linalg as sla
from conftest import xy_field

from ergospin.config import InputError
from ergospin.disorder import DisorderField, gaussian, uniform
from ergospin.dynamics import (
    Evolver,
    duhamel_bound,
    evolve,
    gauge_identity_check,
    gauge_transform,
    gauge_unitary,
    gauged_evolution,
    lr_certify,
    lr_rhs,
    split_perturbed,
    thermo_trace,
)
from ergospin.ffunction import FFunction
from ergospin.interaction import Interaction, assemble, perturb_with_field, xy_bond
from ergospin.lattice import BoxSequence, chain
from ergospin.operators import SIGMA_Z, LocalOperator, embed, op_norm, pauli_string

F = FFunction(1, 1.0)


def test_heisenberg_matches_expm(rng):
    H = assemble(xy_field(2), chain(5))
    a = LocalOperator.random(chain(2), rng)
    t = 0.83
    U = sla.expm(1j * t * H.matrix)
    ref = U @ embed(a, chain(5)).matrix @ U.conj().T
    np.testing.assert_allclose(evolve(H, a, t).result.matrix, ref, atol=1e-11)


def test_heisenberg_group_and_automorphism(rng):
    ev = Evolver(assemble(xy_field(2), chain(4)))
    a = LocalOperator.random(chain(1), rng)
    b = LocalOperator.random(chain(1, start=3), rng)
    s, t = 0.4, -1.1
    lhs = ev.heisenberg(ev.heisenberg(a, s), t)
    assert lhs.allclose(ev.heisenberg(a, s + t), atol=1e-11)
    assert ev.heisenberg(a @ b, t).allclose(ev.heisenberg(a, t) @ ev.heisenberg(b, t), atol=1e-10)
    assert op_norm(ev.heisenberg(a, t)) == pytest.approx(op_norm(a), rel=1e-10)
    assert ev.heisenberg(a, 0).allclose(embed(a, chain(4)), atol=0)


def test_unitary():
    ev = Evolver(assemble(xy_field(1), chain(3)))
    U = ev.unitary(0.5)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(8), atol=1e-12)
    np.testing.assert_allclose(U, sla.expm(-0.5j * ev.H.matrix), atol=1e-12)


def test_lr_certificate_passes_and_vanishes_at_zero():
    a = pauli_string({(0,): "x"})
    b = pauli_string({(5,): "x"})
    cert = lr_certify(xy_field(4), F, chain(6), a, b, np.linspace(0, 2, 11))
    assert cert.passed
    assert cert.lhs[0] == 0.0 and cert.rhs[0] == 0.0
    assert all(l <= r for l, r in zip(cert.lhs, cert.rhs))


def test_lr_rejects_overlapping_supports():
    a = pauli_string({(0,): "x"})
    with pytest.raises(InputError):
        lr_certify(xy_field(0), F, chain(4), a, a, [0.1])


def test_lr_rhs_formula():
    assert lr_rhs(1.0, 2.0, 3.0, 4.0, 0.0, 5.0) == 0.0
    assert lr_rhs(1.0, 2.0, 3.0, 4.0, 0.1, 5.0) == pytest.approx(2.0 / 4.0 * np.expm1(1.2) * 5.0)


def test_duhamel_bound_small_time():
    # (e^{cT} - 1 - cT) / c ~ c T^2 / 2 for small T
    v = duhamel_bound(1.0, 2.0, 3.0, 1e-3, 1.0)
    assert v == pytest.approx(2.0 * 6.0 * 1e-6 / 2, rel=1e-2)
    assert duhamel_bound(1.0, 2.0, 3.0, 0.0, 1.0) == 0.0


def test_thermo_trace_small():
    tr = thermo_trace(xy_field(3), F, pauli_string({(0,): "z"}), 0.5, BoxSequence([1, 2, 3], (0,)))
    assert tr.passed
    assert len(tr.deltas) == 2
    with pytest.raises(InputError):
        thermo_trace(xy_field(3), F, pauli_string({(0,): "z"}), 0.5, [chain(3), chain(2)])


def test_gauge_unitary_is_product_of_phases():
    fld = DisorderField(3, gaussian())
    T = gauge_unitary(SIGMA_Z, fld, chain(3), 0.7)
    lam = fld.sample_many(chain(3).sites)
    ref = sla.expm(0.7j * sum(lam[i] * embed(LocalOperator.onsite((i,), SIGMA_Z), chain(3)).matrix for i in range(3)))
    np.testing.assert_allclose(T.matrix, ref, atol=1e-12)


def test_gauge_transform_preserves_norm(rng):
    phi = Interaction((xy_bond(1.0, 0.3),), {})
    fld = DisorderField(8, uniform(-2, 2))
    for _ in range(20):
        Z = chain(2, start=int(rng.integers(-5, 5)))
        t = float(rng.uniform(-3, 3))
        g = gauge_transform(phi, SIGMA_Z, fld, Z, t)
        assert abs(op_norm(g) - op_norm(phi.evaluate(Z))) < 1e-12


def test_gauged_evolution_agrees_with_direct():
    phi = Interaction((xy_bond(1.0, 0.3),), {})
    fld = DisorderField(5, gaussian())
    psi = perturb_with_field(phi, SIGMA_Z, fld)
    L = chain(4)
    a = pauli_string({(1,): "x"})
    t = 0.6
    direct = Evolver(assemble(psi, L)).heisenberg(a, t)
    # alpha~ = T alpha^Psi T^* up to the gauge unitary of the observable
    T = gauge_unitary(SIGMA_Z, fld, L, t).matrix
    gauged = gauged_evolution(phi, SIGMA_Z, fld, L, a, t, n_steps=400)
    np.testing.assert_allclose(T.conj().T @ direct.matrix @ T, gauged.matrix, atol=1e-9)


def test_magnus_is_fourth_order():
    phi = Interaction((xy_bond(1.0, 0.3),), {})
    fld = DisorderField(5, gaussian())
    psi = perturb_with_field(phi, SIGMA_Z, fld)
    L = chain(4)
    a = pauli_string({(1,): "x"})
    t = 0.6
    T = gauge_unitary(SIGMA_Z, fld, L, t).matrix
    exact = T.conj().T @ Evolver(assemble(psi, L)).heisenberg(a, t).matrix @ T
    errs = [np.abs(gauged_evolution(phi, SIGMA_Z, fld, L, a, t, n).matrix - exact).max() for n in (8, 16)]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.25)


@pytest.mark.parametrize("sizes", [(2, 4), (4, 6)])
def test_gauge_identity_check(sizes):
    phi = Interaction((xy_bond(1.0, 0.3),), {})
    psi = perturb_with_field(phi, SIGMA_Z, DisorderField(6, gaussian()))
    m, n = sizes
    inner, outer = chain(m, start=(n - m) // 2), chain(n)
    g = gauge_identity_check(psi, (inner, outer), pauli_string({((n - 1) // 2,): "z"}), 0.7)
    assert g.residual <= 1e-9


def test_split_perturbed_round_trip():
    phi = Interaction((xy_bond(1.0, 0.3),), {})
    fld = DisorderField(6, gaussian())
    p, v, f = split_perturbed(perturb_with_field(phi, SIGMA_Z, fld))
    assert p.germs == phi.germs and f == fld
    np.testing.assert_array_equal(v, SIGMA_Z)
    with pytest.raises(InputError):
        split_perturbed(phi)
