import numpy as np
import pytest

from clonelab.channels import comb_fidelity_functional
from clonelab.cloner import choi_r1_of_cloner, closed_form_fidelity, first_factor_network
from clonelab.haar import SeededRng, sample_haar_unitary
from clonelab.irreps import (
    IrrepBlocks,
    NotCovariantError,
    block_fidelity,
    block_keys,
    blocks_from_choi,
    build_irrep_table,
    choi_from_blocks,
    covariance_group_element,
    irrep_dims,
    sector_dims,
    sym_antisym_projectors,
    valid_sectors,
    verify_covariance,
)
from clonelab.linalg import dagger, max_abs, tensor


@pytest.mark.parametrize("d,ranks", [(2, (3, 1)), (3, (6, 3)), (4, (10, 6))])
def test_sector_projector_ranks(d, ranks):
    p_plus, p_minus = sym_antisym_projectors(d)
    assert round(np.trace(p_plus).real) == ranks[0]
    assert round(np.trace(p_minus).real) == ranks[1]
    assert max_abs(p_plus + p_minus - np.eye(d * d)) < 1e-14
    assert max_abs(p_plus @ p_minus) < 1e-14
    for p in (p_plus, p_minus):
        assert max_abs(p @ p - p) < 1e-14


@pytest.mark.parametrize("d,expected", [
    (2, {"alpha": 2, "beta": 4, "gamma": 0}),
    (3, {"alpha": 3, "beta": 15, "gamma": 6}),
    (4, {"alpha": 4, "beta": 36, "gamma": 20}),
])
def test_irrep_dimension_table(d, expected):
    assert irrep_dims(d) == expected
    sec = sector_dims(d)
    # completeness: each sector space decomposes exactly
    assert expected["alpha"] + expected["beta"] == sec["+"] * d
    assert expected["alpha"] + expected["gamma"] == sec["-"] * d


@pytest.mark.parametrize("d", [2, 3, 4])
def test_projector_ranks_match_dimensions(d):
    table = build_irrep_table(d)
    for (mu, sign), proj in table.projectors.items():
        assert max_abs(proj @ proj - proj) < 1e-12
        assert round(np.trace(proj).real) == table.dim(mu)
    total = sum(table.projectors[(mu, s)] for mu in ("alpha", "beta", "gamma")
                for s in valid_sectors(mu, d) if (mu, s) in table.projectors)
    assert max_abs(total - np.eye(d**3)) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_intertwiner_composition_and_adjoint(d):
    table = build_irrep_table(d)
    t = table.intertwiners
    for i in "+-":
        for j in "+-":
            assert max_abs(dagger(t[("alpha", i, j)]) - t[("alpha", j, i)]) < 1e-12
            for k in "+-":
                comp = t[("alpha", i, j)] @ t[("alpha", j, k)]
                assert max_abs(comp - t[("alpha", i, k)]) < 1e-9
    if d == 2:
        assert ("gamma", "-", "-") not in t
        assert all(key[0] != "gamma" for key in block_keys(2)[0][1]) or True
        assert [k for k, _ in block_keys(2)] == [
            ("alpha", "alpha"), ("alpha", "beta"), ("beta", "alpha"), ("beta", "beta"),
        ]


@pytest.mark.parametrize("d", [2, 3])
def test_intertwiners_commute_with_triple_action(d):
    table = build_irrep_table(d)
    rng = SeededRng(20)
    for trial in range(3):
        v = sample_haar_unitary(d, rng.substream(trial))
        g3 = tensor(v, v, v.conj())
        for t in table.intertwiners.values():
            assert max_abs(g3 @ t - t @ g3) < 1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_group_action_preserves_blocks(d):
    # no leakage between inequivalent irreps under the triple action
    table = build_irrep_table(d)
    rng = SeededRng(21)
    labels = [(mu, s) for mu in ("alpha", "beta", "gamma") for s in valid_sectors(mu, d)]
    for trial in range(10):
        v = sample_haar_unitary(d, rng.substream(trial))
        g3 = tensor(v, v, v.conj())
        for mu, s1 in labels:
            for nu, s2 in labels:
                if mu == nu:
                    continue
                cross = table.projectors[(mu, s1)] @ g3 @ table.projectors[(nu, s2)]
                assert max_abs(cross) < 1e-9


def test_verify_covariance_accepts_cloner_and_baseline():
    assert verify_covariance(choi_r1_of_cloner(2).choi, 2, trials=5) < 1e-9
    assert verify_covariance(first_factor_network(2).choi, 2, trials=5) < 1e-9


def test_verify_covariance_detects_asymmetric_perturbation():
    bad = choi_r1_of_cloner(2).choi.copy()
    bad[0, 1] += 1e-2
    bad[1, 0] += 1e-2
    assert verify_covariance(bad, 2, trials=5) > 1e-4


def test_blocks_from_choi_rejects_non_covariant():
    bad = choi_r1_of_cloner(2).choi.copy()
    bad[0, 1] += 1e-2
    bad[1, 0] += 1e-2
    table = build_irrep_table(2)
    with pytest.raises(NotCovariantError) as err:
        blocks_from_choi(bad, table)
    assert err.value.residual > 1e-4


def test_optimal_cloner_blocks_saturate_bound_structure():
    # only the alpha-sector entries with paired signs survive, with the
    # saturating values sqrt(d_i d_j) / d
    d = 2
    table = build_irrep_table(d)
    blocks = blocks_from_choi(choi_r1_of_cloner(d).choi, table)
    sec = sector_dims(d)
    for (i, di) in sec.items():
        for (j, dj) in sec.items():
            val = blocks.entry("alpha", "alpha", (i, i), (j, j))
            assert abs(val - np.sqrt(di * dj) / d) < 1e-12
    for key, mat in blocks.blocks.items():
        rows = blocks.rows[key]
        for a, ik in enumerate(rows):
            for b, jl in enumerate(rows):
                if key == ("alpha", "alpha") and ik[0] == ik[1] and jl[0] == jl[1]:
                    continue
                assert abs(mat[a, b]) < 1e-12


def _random_covariant_blocks(d, table, rng):
    gen = rng.generator()
    blocks = {}
    rows = {}
    for key, labels in block_keys(d):
        n = len(labels)
        g = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
        blocks[key] = g @ g.conj().T
        rows[key] = labels
    return IrrepBlocks(d=d, blocks=blocks, rows=rows)


@pytest.mark.parametrize("d", [2, 3])
def test_blocks_choi_roundtrip_on_random_covariant(d):
    table = build_irrep_table(d)
    blocks = _random_covariant_blocks(d, table, SeededRng(30 + d))
    choi = choi_from_blocks(blocks, table)
    assert max_abs(choi - dagger(choi)) < 1e-12
    assert verify_covariance(choi, d, trials=3) < 1e-9
    back = blocks_from_choi(choi, table)
    for key in blocks.blocks:
        assert max_abs(back.blocks[key] - blocks.blocks[key]) < 1e-8
    # PSD of the blocks carries over to the assembled operator
    assert blocks.is_psd(1e-9)
    assert np.linalg.eigvalsh(choi).min() > -1e-9


def test_roundtrip_on_cloner_comb():
    table = build_irrep_table(2)
    r1 = choi_r1_of_cloner(2).choi
    back = choi_from_blocks(blocks_from_choi(r1, table), table)
    assert max_abs(back - r1) < 1e-9


@pytest.mark.parametrize("d", [2, 3])
def test_block_fidelity_matches_direct_functional(d):
    table = build_irrep_table(d)
    rng = SeededRng(40 + d)
    for trial in range(10):
        blocks = _random_covariant_blocks(d, table, rng.substream(trial))
        choi = choi_from_blocks(blocks, table)
        f_blocks = block_fidelity(blocks, table)
        u = sample_haar_unitary(d, rng.substream(100 + trial))
        f_direct = comb_fidelity_functional(choi, u, d)
        assert abs(f_blocks - f_direct) < 1e-9 * max(1.0, abs(f_blocks))


def test_block_fidelity_of_cloner_comb():
    for d in (2, 3):
        table = build_irrep_table(d)
        blocks = blocks_from_choi(choi_r1_of_cloner(d).choi, table)
        assert abs(block_fidelity(blocks, table) - closed_form_fidelity(d)) < 1e-9


def test_covariance_group_element_shape():
    g = covariance_group_element(2, np.eye(2), np.eye(2))
    assert g.shape == (64, 64)
    assert max_abs(g - np.eye(64)) == 0.0


def test_build_irrep_table_rejects_unsupported_dimension():
    for bad in (1, 5):
        with pytest.raises(ValueError):
            build_irrep_table(bad)
