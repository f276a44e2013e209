import numpy as np
import pytest

from strongnl.nonlocality import (DeductionState, IndeterminateError, MeasurementGroup,
                                  PreconditionError, all_groups, assemble_constraints,
                                  deduce_fixpoint, default_groups, lemma_trivial_apply,
                                  lemma_zero_apply, triviality_check, verify_strongest)
from strongnl.states import StateFamily, StateSet, build, build_A18, build_B, build_Bbar4, product_basis
from strongnl.tensor import HermitianParam


def t(s):
    return tuple(int(c) for c in s)


def pairs(*entries):
    return {tuple(sorted((t(a), t(b)))) for a, b in (e.split(",") for e in entries)}


def test_group_validation():
    with pytest.raises(ValueError):
        MeasurementGroup((1, 2, 3), 3)
    with pytest.raises(ValueError):
        MeasurementGroup((), 3)
    assert MeasurementGroup.all_but(2, 4).parties == (1, 3, 4)
    assert len(all_groups(4)) == 2 ** 4 - 2


def test_constraint_counts_b23():
    cs = assemble_constraints(build_B(2, 3), MeasurementGroup((2, 3), 3))
    assert cs.m == 4 and cs.n_params == 16
    assert cs.rows.shape == (56, 16)


@pytest.mark.parametrize("ss", [build_B(2, 3), build_B(3, 3), build_Bbar4(2), build_A18()], ids=str)
def test_identity_satisfies_constraints(ss):
    for g in all_groups(ss.N):
        cs = assemble_constraints(ss, g)
        ident = HermitianParam.identity(cs.m).vector()
        assert np.abs(cs.rows @ ident).max() < 1e-12


def test_single_state_has_no_rows():
    fam = StateFamily(2, (0, 0, 0), ((0, 0, 0), (1, 1, 1)), np.array([[1, 1]]))
    cs = assemble_constraints(StateSet("one", 2, 3, (fam,)), MeasurementGroup((2, 3), 3))
    assert cs.rows.shape == (0, 16)


def test_constraint_row_matches_direct_expectation():
    """Row functional equals <psi| I x E |phi> computed on dense vectors."""
    ss = build_B(2, 3)
    g = MeasurementGroup((2, 3), 3)
    cs = assemble_constraints(ss, g)
    rng = np.random.default_rng(7)
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    E = X + X.conj().T
    p = HermitianParam.from_matrix(E).vector()
    op = np.kron(np.eye(2), E)
    states = [s.to_dense() for s in ss.states]
    for row, (i, j) in enumerate(cs.pairs):
        direct = states[i].conj() @ op @ states[j]
        assert np.isclose(cs.rows[2 * row] @ p, direct.real)
        assert np.isclose(cs.rows[2 * row + 1] @ p, direct.imag)


def test_triviality_examples():
    assert triviality_check(build_B(2, 3), MeasurementGroup((2, 3), 3)).trivial
    assert triviality_check(build_B(2, 4), MeasurementGroup((2, 3, 4), 4)).trivial


def test_product_basis_nontrivial_two_qubits():
    res = triviality_check(product_basis(2, 2), MeasurementGroup((2,), 2))
    assert not res.trivial and res.null_dim == 2
    E = res.witness.matrix()
    assert np.allclose(E, np.diag([1, -1]) / np.sqrt(2)) or np.allclose(E, np.diag([-1, 1]) / np.sqrt(2))


def test_indeterminate_is_raised():
    # put the threshold right next to a genuine nonzero singular value
    ss, g = build_B(2, 3), MeasurementGroup((2, 3), 3)
    cs = assemble_constraints(ss, g)
    sv = np.linalg.svd(cs.rows, compute_uv=False)
    tol = 2 * sv[sv > 1e-6].min() / sv.max()
    with pytest.raises(IndeterminateError, match="within"):
        triviality_check(ss, g, tol=tol)


def test_non_orthogonal_set_rejected():
    fam = StateFamily(2, (0, 0), ((0, 0), (0, 1)), np.array([[1, 0], [1, 1]]))
    with pytest.raises(ValueError, match="not mutually orthogonal"):
        triviality_check(StateSet("x", 2, 2, (fam,)), MeasurementGroup((2,), 2))


@pytest.mark.parametrize("args", [("B", 2, 3), ("B", 2, 4), ("B", 3, 3), ("Bbar4", 2, None)])
def test_verify_strongest_passes(args):
    assert verify_strongest(build(*args))["pass"]


def test_exhaustive_agrees_on_b24():
    ss = build_B(2, 4)
    assert verify_strongest(ss)["pass"] == verify_strongest(ss, exhaustive=True)["pass"] is True


def test_threaded_verify_matches(monkeypatch):
    ss = build_B(2, 4)
    serial = verify_strongest(ss)
    monkeypatch.setenv("STRONGNL_THREADS", "4")
    assert verify_strongest(ss) == serial


def _permuted_phased(ss, seed):
    rng = np.random.default_rng(seed)
    fams = []
    for f in ss.families:
        perm = rng.permutation(len(f))
        phases = np.exp(2j * np.pi * rng.random(len(f)))
        fams.append(StateFamily(f.d, f.representative, f.elements, phases[:, None] * f.coeffs[perm]))
    order = rng.permutation(len(fams))
    return StateSet(ss.label, ss.d, ss.N, tuple(fams[i] for i in order))


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("ss", [build_B(2, 3), product_basis(2, 3), build_A18()], ids=str)
def test_verdict_invariant_under_permutation_and_phase(ss, seed):
    other = _permuted_phased(ss, seed)
    for g in default_groups(ss.N):
        a, b = triviality_check(ss, g), triviality_check(other, g)
        assert (a.trivial, a.null_dim) == (b.trivial, b.null_dim)


@pytest.mark.parametrize("d, N", [(2, 3), (2, 4), (3, 3), (4, 3), (2, 5)])
def test_cyclic_groups_share_verdict(d, N):
    rep = verify_strongest(build_B(d, N))
    assert len({(g["trivial"], g["null_dim"]) for g in rep["groups"]}) == 1


# -- deduction rules -------------------------------------------------------

def test_zero_rule_example_b23():
    ss = build_B(2, 3)
    st = lemma_zero_apply(ss.family((0, 0, 0)), ss.family((0, 0, 1)), 1, DeductionState.empty(2, 2))
    assert st.zeros == pairs("00,01", "00,10", "00,11")
    assert st.log[-1]["rule"] == "zero"


def test_zero_rule_example_b24():
    ss = build_B(2, 4)
    st = lemma_zero_apply(ss.family((0, 0, 0, 0)), ss.family((0, 1, 0, 1)), 1,
                          DeductionState.empty(2, 3))
    assert st.zeros == pairs("000,101", "010,111")


def test_zero_rule_no_matching_head():
    a = StateFamily(2, (0, 0, 0), ((0, 0, 0),), np.ones((1, 1)))
    b = StateFamily(2, (1, 0, 1), ((1, 0, 1),), np.ones((1, 1)))
    st = lemma_zero_apply(a, b, 1, DeductionState.empty(2, 2))
    assert st.zeros == set()


def test_zero_rule_preconditions():
    ss = build_B(2, 3)
    f = ss.family((0, 0, 1))
    with pytest.raises(PreconditionError):
        lemma_zero_apply(f, f, 1, DeductionState.empty(2, 2))
    singular = StateFamily(2, (0, 1, 1), f.elements[:0] + ((0, 1, 1), (1, 1, 0)), np.ones((2, 2)))
    with pytest.raises(PreconditionError):
        lemma_zero_apply(ss.family((0, 0, 0)), singular, 1, DeductionState.empty(2, 2))


def test_zero_rule_does_not_mutate_input():
    ss = build_B(2, 3)
    st = DeductionState.empty(2, 2)
    lemma_zero_apply(ss.family((0, 0, 0)), ss.family((0, 0, 1)), 1, st)
    assert st.zeros == set() and st.log == []


def test_trivial_rule_example_b23():
    ss = build_B(2, 3)
    st = DeductionState.empty(2, 2)
    st = lemma_zero_apply(ss.family((0, 0, 0)), ss.family((0, 0, 1)), 1, st)
    st = lemma_zero_apply(ss.family((0, 0, 0)), ss.family((0, 1, 1)), 1, st)
    assert pairs("10,11", "01,11") <= st.zeros
    st = lemma_trivial_apply(ss.family((0, 0, 1)), 1, st)
    assert pairs("01,10") <= st.zeros
    assert st.diag.find((0, 0)) == st.diag.find((0, 1)) == st.diag.find((1, 0))
    st = lemma_trivial_apply(ss.family((0, 0, 0)), 1, st)
    assert st.diag.find((0, 0)) == st.diag.find((1, 1))
    assert st.solved()


def test_trivial_rule_unmet_precondition_is_noop():
    ss = build_B(2, 3)
    st = lemma_trivial_apply(ss.family((0, 0, 1)), 1, DeductionState.empty(2, 2))
    assert st.zeros == set() and st.n_classes() == 4
    assert st.log[-1].get("noop") is True


def test_deduce_b23_all_groups():
    for g in default_groups(3):
        assert deduce_fixpoint(build_B(2, 3), g).proved


def test_deduce_product_basis_stuck():
    res = deduce_fixpoint(product_basis(2, 3), MeasurementGroup((2, 3), 3))
    assert not res.proved
    # zeros are all found, the diagonal never merges
    assert len(res.state.zeros) == 6 and res.state.n_classes() == 4


def test_deduce_requires_all_but_one_group():
    with pytest.raises(ValueError):
        deduce_fixpoint(build_B(2, 4), MeasurementGroup((2, 3), 4))


def test_deduce_log_is_deterministic():
    g = MeasurementGroup((2, 3, 4), 4)
    assert deduce_fixpoint(build_B(2, 4), g).to_dict() == deduce_fixpoint(build_B(2, 4), g).to_dict()


def test_zeros_only_grow():
    ss = build_B(3, 3)
    st = DeductionState.empty(3, 2)
    prev_zeros, prev_classes = set(), st.n_classes()
    for a in ss.families:
        for b in ss.families:
            if a.representative < b.representative:
                st = lemma_zero_apply(a, b, 1, st)
        for f in ss.families:
            st = lemma_trivial_apply(f, 1, st)
            assert prev_zeros <= st.zeros and st.n_classes() <= prev_classes
            prev_zeros, prev_classes = set(st.zeros), st.n_classes()


SOUNDNESS = [build_B(d, N) for d in (2, 3) for N in (3, 4)] + [
    build_B(4, 3), build_B(2, 5), build_Bbar4(2), build_Bbar4(3), build_A18()]


@pytest.mark.parametrize("ss", SOUNDNESS, ids=lambda s: f"{s.label}-{s.d}-{s.N}")
def test_deduction_sound_against_oracle(ss):
    for g in default_groups(ss.N):
        if deduce_fixpoint(ss, g).proved:
            assert triviality_check(ss, g).trivial
