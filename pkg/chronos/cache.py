"""
Binary cache of eigendecompositions.

File layout::

    CHRONOS-EIG v1\\n
    gamma=<12 decimals> K=<int> operator=<CTOA|CTO>\\n
    N little-endian float64 eigenvalues
    N*N little-endian complex128 eigenvector entries, column-major

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import logging
import os
import re
import tempfile
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from chronos.basis import EnergyBasis
from chronos.errors import CacheFormatError
from chronos.operators import RESIDUAL_TOLERANCE, EigenSystem, HermitianMatrix, OperatorKind, eig_hermitian

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class CacheKey:
    """Identity of a cached decomposition."""

    operator: OperatorKind
    gamma_key: str
    K: int

    @property
    def dim(self) -> int:
        return 2 * self.K + 1

    @property
    def filename(self) -> str:
        return f"{self.operator.label.lower()}_g{self.gamma_key}_K{self.K}.eig"


class EigenCodec:
    """Encoder/decoder for the cache file format."""

    MAGIC = b"CHRONOS-EIG"
    VERSION = 1
    HEADER_PATTERN = re.compile(rb"^gamma=(?P<gamma>[0-9.]+) K=(?P<K>\d+) operator=(?P<op>[A-Z]+)$")

    @staticmethod
    def build(key: CacheKey, system: EigenSystem) -> bytes:
        """Serialize an eigensystem under its key."""
        if system.dim != key.dim:
            raise CacheFormatError(f"eigensystem of size {system.dim} does not match K={key.K}")
        header = b"%s v%d\n" % (EigenCodec.MAGIC, EigenCodec.VERSION)
        meta = f"gamma={key.gamma_key} K={key.K} operator={key.operator.label}\n".encode("ascii")
        values = np.ascontiguousarray(system.eigenvalues, dtype="<f8").tobytes()
        vectors = np.asarray(system.eigenvectors, dtype="<c16").tobytes(order="F")
        return header + meta + values + vectors

    @staticmethod
    def parse(data: bytes, expected: CacheKey) -> tuple[np.ndarray, np.ndarray]:
        """
        Decode eigenvalues and eigenvectors.

        Raises:
            CacheFormatError: wrong magic, version, key or payload size.
        """
        first, _, rest = data.partition(b"\n")
        second, _, payload = rest.partition(b"\n")
        magic, _, version = first.partition(b" v")
        if magic != EigenCodec.MAGIC:
            raise CacheFormatError("not a chronos eigen cache file")
        if version != str(EigenCodec.VERSION).encode("ascii"):
            raise CacheFormatError(f"cache version {version.decode('ascii', 'replace')} != {EigenCodec.VERSION}")

        match = EigenCodec.HEADER_PATTERN.match(second)
        if not match:
            raise CacheFormatError("malformed cache header")
        gamma_key = match["gamma"].decode("ascii")
        K = int(match["K"])
        label = match["op"].decode("ascii")
        if (gamma_key, K, label) != (expected.gamma_key, expected.K, expected.operator.label):
            raise CacheFormatError(f"cache key mismatch: gamma={gamma_key} K={K} operator={label}")

        n = expected.dim
        expected_size = 8 * n + 16 * n * n
        if len(payload) != expected_size:
            raise CacheFormatError(f"payload holds {len(payload)} bytes, expected {expected_size}")
        values = np.frombuffer(payload, dtype="<f8", count=n).astype(float)
        vectors = np.frombuffer(payload, dtype="<c16", offset=8 * n).reshape((n, n), order="F").astype(complex)
        return values, vectors


class EigenCache:
    """Directory of cached eigendecompositions keyed by (operator, gamma, K)."""

    def __init__(self, directory: Path):
        self._directory = Path(directory)
        self.notices: list[str] = []
        self.hits = 0
        self.misses = 0

    @property
    def directory(self) -> Path:
        return self._directory

    def path_for(self, key: CacheKey) -> Path:
        return self._directory / key.filename

    def load(self, key: CacheKey, matrix: HermitianMatrix) -> EigenSystem | None:
        """Cached eigensystem verified against the matrix, or None when absent or unusable."""
        path = self.path_for(key)
        if not path.is_file():
            return None
        try:
            values, vectors = EigenCodec.parse(path.read_bytes(), key)
        except CacheFormatError as err:
            notice = f"cache file {path.name} unusable ({err}); recomputing"
            _LOG.warning("%s", notice)
            self.notices.append(notice)
            return None

        norm = matrix.frobenius_norm
        residual = float(np.linalg.norm(matrix.entries @ vectors - vectors * values[None, :], axis=0).max())
        if residual > RESIDUAL_TOLERANCE * norm:
            notice = f"cache file {path.name} fails residual check ({residual:.3g}); recomputing"
            _LOG.warning("%s", notice)
            self.notices.append(notice)
            return None
        gram_error = float(np.abs(vectors.conj().T @ vectors - np.eye(key.dim)).max())
        return EigenSystem(
            eigenvalues=values,
            eigenvectors=vectors,
            residual_bound=residual,
            orthonormality_error=gram_error,
            matrix_norm=norm,
        )

    def store(self, key: CacheKey, system: EigenSystem) -> Path:
        """Write atomically; a failed write only costs a recompute later."""
        path = self.path_for(key)
        data = EigenCodec.build(key, system)
        try:
            self._directory.mkdir(parents=True, exist_ok=True)
            handle, tmp = tempfile.mkstemp(dir=self._directory, suffix=".tmp")
        except OSError as err:
            _LOG.warning("Could not create cache file in %s: %s", self._directory, err)
            return path
        try:
            with os.fdopen(handle, "wb") as tmp_file:
                tmp_file.write(data)
            os.replace(tmp, path)
        except OSError as err:
            _LOG.warning("Could not write cache file %s: %s", path, err)
            Path(tmp).unlink(missing_ok=True)
        return path

    def eigensystem(
        self,
        kind: OperatorKind,
        basis: EnergyBasis,
        build: Callable[[EnergyBasis], HermitianMatrix],
    ) -> EigenSystem:
        """Cached decomposition of build(basis), computing and storing it on a miss."""
        key = CacheKey(kind, basis.config.gamma_key, basis.K)
        matrix = build(basis)
        system = self.load(key, matrix)
        if system is not None:
            self.hits += 1
            _LOG.info("Cache hit %s", key.filename)
            # eigenvalues and vectors round-trip exactly; the residual is recomputed on load
            return system
        self.misses += 1
        _LOG.info("Cache miss %s, diagonalizing N=%d", key.filename, key.dim)
        system = eig_hermitian(matrix)
        self.store(key, system)
        return system
