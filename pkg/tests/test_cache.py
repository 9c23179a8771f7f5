"""Eigen cache file format and hit/miss behaviour."""

import numpy as np
import pytest

from chronos.cache import CacheKey, EigenCache, EigenCodec
from chronos.errors import CacheFormatError
from chronos.operators import EigenSystem, OperatorKind, cto_matrix, eig_hermitian


@pytest.fixture
def cto_key(small_basis) -> CacheKey:
    return CacheKey(OperatorKind.CTO_PTT, small_basis.config.gamma_key, small_basis.K)


def test_filename(cto_key):
    assert cto_key.filename == "cto_g0.010000000000_K8.eig"
    assert cto_key.dim == 17


def test_codec_restores_exact_arrays(small_basis, cto_key):
    system = eig_hermitian(cto_matrix(small_basis))
    values, vectors = EigenCodec.parse(EigenCodec.build(cto_key, system), cto_key)
    np.testing.assert_array_equal(values, system.eigenvalues)
    np.testing.assert_array_equal(vectors, system.eigenvectors)


def test_codec_rejects_bad_files(small_basis, cto_key):
    data = EigenCodec.build(cto_key, eig_hermitian(cto_matrix(small_basis)))
    with pytest.raises(CacheFormatError):
        EigenCodec.parse(data.replace(b"CHRONOS-EIG", b"SOMETHING-X", 1), cto_key)
    with pytest.raises(CacheFormatError):
        EigenCodec.parse(data.replace(b" v1\n", b" v2\n", 1), cto_key)
    with pytest.raises(CacheFormatError):
        EigenCodec.parse(data[:-16], cto_key)
    other = CacheKey(OperatorKind.CTOA_TAT, cto_key.gamma_key, cto_key.K)
    with pytest.raises(CacheFormatError):
        EigenCodec.parse(data, other)


def test_hit_equals_miss(tmp_path, small_basis):
    cold = EigenCache(tmp_path)
    first = cold.eigensystem(OperatorKind.CTO_PTT, small_basis, cto_matrix)
    assert (cold.hits, cold.misses) == (0, 1)

    warm = EigenCache(tmp_path)
    second = warm.eigensystem(OperatorKind.CTO_PTT, small_basis, cto_matrix)
    assert (warm.hits, warm.misses) == (1, 0)
    np.testing.assert_array_equal(first.eigenvalues, second.eigenvalues)
    np.testing.assert_array_equal(first.eigenvectors, second.eigenvectors)
    assert not list(tmp_path.glob("*.tmp"))


def test_corrupt_file_is_recomputed(tmp_path, small_basis, cto_key):
    cache = EigenCache(tmp_path)
    cache.path_for(cto_key).write_bytes(b"CHRONOS-EIG v1\ngarbage")
    system = cache.eigensystem(OperatorKind.CTO_PTT, small_basis, cto_matrix)
    assert cache.misses == 1
    assert len(cache.notices) == 1 and "recomputing" in cache.notices[0]
    assert system.residual_bound <= 1e-10 * system.matrix_norm
    values, _ = EigenCodec.parse(cache.path_for(cto_key).read_bytes(), cto_key)
    np.testing.assert_array_equal(values, system.eigenvalues)


def test_wrong_payload_fails_residual_check(tmp_path, small_basis, cto_key):
    system = eig_hermitian(cto_matrix(small_basis))
    tampered = EigenSystem(
        eigenvalues=system.eigenvalues + 0.5,
        eigenvectors=system.eigenvectors,
        residual_bound=system.residual_bound,
    )
    cache = EigenCache(tmp_path)
    cache.store(cto_key, tampered)
    assert cache.load(cto_key, cto_matrix(small_basis)) is None
    assert "residual" in cache.notices[0]
