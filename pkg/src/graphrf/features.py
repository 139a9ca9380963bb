"""Random-feature encoding of connectivity patterns.

An :class:`RFMap` freezes D spectral samples of a shift-invariant kernel and
maps a length-N pattern a to the 2D-dimensional unit vector

    z(a) = D^{-1/2} [sin(v_1.a), ..., sin(v_D.a), cos(v_1.a), ..., cos(v_D.a)]

Inner products of encodings are unbiased estimates of the kernel.  The
encoding is the only representation of a node that learners consume: the map
is many-to-one whenever D < N, so the raw pattern cannot be recovered from z.

Maps are immutable once built and encoding is pure, so batches of nodes can
be encoded concurrently against a shared map.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import KERNEL_FAMILIES, KernelSpec, spectral_sample

LAYOUT_VERSION = 1  # sines block first, then cosines
_MAGIC = b"GRFRFMAP"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RFMap:
    """Frozen D x N spectral-sample matrix plus its provenance."""

    v_matrix: np.ndarray
    kernel: KernelSpec
    seed: int
    layout_version: int = LAYOUT_VERSION

    def __post_init__(self):
        v = np.ascontiguousarray(self.v_matrix, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("v_matrix must be 2-d (D x N)")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "v_matrix", v)

    @property
    def d(self) -> int:
        return self.v_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.v_matrix.shape[1]

    @property
    def ref(self) -> str:
        """Identifier that fully determines this map under seeded rebuilds."""
        return (
            f"{self.kernel.family}:bw={self.kernel.bandwidth!r}:D={self.d}"
            f":N={self.n}:seed={self.seed}:L{self.layout_version}"
        )

    def encode_batch(self, patterns) -> np.ndarray:
        """Encode the rows of a (k, N) array into a (k, 2D) array."""
        a = np.atleast_2d(np.asarray(patterns, dtype=np.float64))
        if a.shape[1] != self.n:
            raise ValueError(f"patterns have dimension {a.shape[1]}, map expects {self.n}")
        x = a @ self.v_matrix.T
        return np.ascontiguousarray(
            np.concatenate([np.sin(x), np.cos(x)], axis=1) * self.d**-0.5
        )

    def encode(self, pattern) -> np.ndarray:
        """Encode one length-N pattern into its 2D-dimensional feature vector."""
        a = np.asarray(pattern, dtype=np.float64)
        if a.ndim != 1:
            raise ValueError("pattern must be a vector")
        return self.encode_batch(a[None, :])[0]


def build_map(kernel: KernelSpec, d: int, n: int, seed: int) -> RFMap:
    """Sample a fresh map for the given kernel; deterministic per seed."""
    v = spectral_sample(kernel, d, n, seed)
    return RFMap(v_matrix=v, kernel=kernel, seed=int(seed))


def encode(rf_map: RFMap, pattern) -> np.ndarray:
    return rf_map.encode(pattern)


def approx_kernel(rf_map: RFMap, a, b) -> float:
    """z(a).z(b): unbiased randomized estimate of the exact kernel."""
    return float(np.dot(rf_map.encode(a), rf_map.encode(b)))


def null_space_collision(rf_map: RFMap, pattern) -> np.ndarray:
    """A different pattern with exactly the same encoding.

    Exists whenever the spectral matrix has a nontrivial null space, in
    particular whenever D < N.  Raises if the map is injective on patterns.
    """
    a = np.asarray(pattern, dtype=np.float64)
    if a.shape != (rf_map.n,):
        raise ValueError(f"pattern must have length {rf_map.n}")
    v = rf_map.v_matrix
    _, s, vt = np.linalg.svd(v, full_matrices=True)
    tol = max(v.shape) * (s[0] if s.size else 0.0) * np.finfo(np.float64).eps
    rank = int((s > tol).sum())
    if rank >= rf_map.n:
        raise ValueError("map has full column rank: no guaranteed collision exists")
    return a + vt[rank]


def save_map(rf_map: RFMap, path) -> None:
    """Write the map in the little-endian binary layout (bit-exact)."""
    family_code = KERNEL_FAMILIES.index(rf_map.kernel.family)
    header = _MAGIC + struct.pack(
        "<IIQQBdq",
        _FORMAT_VERSION,
        rf_map.layout_version,
        rf_map.d,
        rf_map.n,
        family_code,
        rf_map.kernel.bandwidth,
        rf_map.seed,
    )
    body = np.ascontiguousarray(rf_map.v_matrix).astype("<f8").tobytes()
    Path(path).write_bytes(header + body)


def load_map(path) -> RFMap:
    raw = Path(path).read_bytes()
    if raw[: len(_MAGIC)] != _MAGIC:
        raise ValueError("not a random-feature map file")
    offset = len(_MAGIC)
    fmt = "<IIQQBdq"
    fields = struct.unpack_from(fmt, raw, offset)
    offset += struct.calcsize(fmt)
    version, layout, d, n, family_code, bandwidth, seed = fields
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported map format version {version}")
    if family_code >= len(KERNEL_FAMILIES):
        raise ValueError(f"unknown kernel family code {family_code}")
    body = np.frombuffer(raw, dtype="<f8", offset=offset)
    if body.size != d * n:
        raise ValueError("map file truncated")
    return RFMap(
        v_matrix=body.reshape(d, n),
        kernel=KernelSpec(KERNEL_FAMILIES[family_code], bandwidth),
        seed=seed,
        layout_version=layout,
    )
