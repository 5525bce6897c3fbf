"""Bit-packed sign matrices and the XNOR/popcount matmul kernel.

A real vector is approximated by a sign pattern plus one nonnegative
scalar (the mean absolute value), which is the least-squares optimal
rank-1 binary factorization. Matrices are binarized bucket-wise: one
bucket per weight column or per feature row, each with its own scalar.

Packing layout is LSB-first: bit i of a vector lives in word i // 64 at
bit position i % 64 (bit 1 encodes +1, bit 0 encodes -1). Padding bits
past the logical length are canonically set to 1, so two equal-length
vectors are equal iff their word arrays are equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WORD_BITS = 64

# Rows processed per block in bin_gemm; bounds the (block, cols, words)
# intermediate so large graphs don't blow up memory.
_GEMM_BLOCK_ROWS = 512


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words)


def _pad_mask(length: int) -> np.uint64:
    """All-ones mask for the valid bits of the final word."""
    rem = length % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


@dataclass(frozen=True)
class BitVector:
    """Packed +-1 vector; bit 1 is +1, bit 0 is -1, padding bits are 1."""

    words: np.ndarray  # 1-D uint64, length ceil(length / 64)
    length: int

    def __post_init__(self):
        expected = (self.length + WORD_BITS - 1) // WORD_BITS
        if self.words.shape != (expected,):
            raise ValueError(
                f"expected {expected} words for length {self.length}, got {self.words.shape}"
            )
        self.words.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.length == other.length and bool(
            np.array_equal(self.words, other.words)
        )

    def __len__(self) -> int:
        return self.length


def pack(signs) -> BitVector:
    """Pack a +-1 vector into a BitVector (padding canonicalized to 1)."""
    signs = np.asarray(signs)
    if signs.ndim != 1 or signs.size == 0:
        raise ValueError("signs must be a non-empty 1-D vector")
    if not np.isin(signs, (-1, 1)).all():
        raise ValueError("signs entries must be -1 or +1")
    return _pack_unchecked(signs > 0)


def _pack_unchecked(bits: np.ndarray) -> BitVector:
    """Pack a 1-D bool array; caller guarantees validity."""
    words = _pack_bits_2d(bits[None, :])[0]
    return BitVector(words=words, length=bits.size)


def _pack_bits_2d(bits: np.ndarray) -> np.ndarray:
    """Pack an (n, t) bool array into (n, ceil(t/64)) uint64 words."""
    n, t = bits.shape
    n_words = (t + WORD_BITS - 1) // WORD_BITS
    packed = np.packbits(bits, axis=1, bitorder="little")
    padded = np.zeros((n, n_words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    words = np.ascontiguousarray(padded).view("<u8").reshape(n, n_words)
    if t % WORD_BITS:
        words[:, -1] |= ~_pad_mask(t)  # canonical 1 padding
    return words


def unpack(vec: BitVector) -> np.ndarray:
    """Inverse of pack: return the +-1 vector as float64."""
    raw = np.frombuffer(vec.words.tobytes(), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[: vec.length]
    return np.where(bits.astype(bool), 1.0, -1.0)


def sign_pm1(x: np.ndarray) -> np.ndarray:
    """Elementwise sign with sign(0) = +1, as float64 +-1."""
    return (np.asarray(x) >= 0) * 2.0 - 1.0


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError(f"{what} contains non-finite entries")
    return x


def binarize_vector(v) -> tuple[BitVector, float]:
    """Binarize a real vector into (sign pattern, scalar).

    The scalar is the mean absolute value, which together with the sign
    pattern minimizes the squared reconstruction error over all
    (scalar, sign) pairs.
    """
    v = _check_finite(v, "vector")
    if v.ndim != 1 or v.size == 0:
        raise ValueError("vector must be non-empty and 1-D")
    scalar = float(np.abs(v).mean())
    return _pack_unchecked(v >= 0), scalar


@dataclass(frozen=True)
class PackedBinMatrix:
    """A +-1 matrix stored as packed words, one rescaling scalar per bucket.

    Row-bucketed: `rows` buckets of length `cols` (feature matrices).
    Column-bucketed: `cols` buckets of length `rows` (weight matrices).
    """

    rows: int
    cols: int
    orientation: str  # "row" or "col"
    words: np.ndarray  # (n_buckets, n_words) uint64
    scalars: np.ndarray  # (n_buckets,) float64, all >= 0

    def __post_init__(self):
        if self.orientation not in ("row", "col"):
            raise ValueError(f"bad orientation {self.orientation!r}")
        n_buckets, bucket_len = self._bucket_shape()
        n_words = (bucket_len + WORD_BITS - 1) // WORD_BITS
        if self.words.shape != (n_buckets, n_words):
            raise ValueError(
                f"words shape {self.words.shape} != ({n_buckets}, {n_words})"
            )
        if self.scalars.shape != (n_buckets,):
            raise ValueError("one scalar per bucket required")
        if (self.scalars < 0).any():
            raise ValueError("bucket scalars must be nonnegative")
        self.words.setflags(write=False)
        self.scalars.setflags(write=False)

    def _bucket_shape(self) -> tuple[int, int]:
        if self.orientation == "row":
            return self.rows, self.cols
        return self.cols, self.rows

    @property
    def bucket_length(self) -> int:
        return self._bucket_shape()[1]

    def bucket(self, i: int) -> BitVector:
        return BitVector(words=self.words[i].copy(), length=self.bucket_length)

    def sign_matrix(self) -> np.ndarray:
        """Unpack to a dense (rows, cols) +-1 float matrix."""
        raw = np.frombuffer(np.ascontiguousarray(self.words).tobytes(), dtype=np.uint8)
        bits = np.unpackbits(
            raw.reshape(self.words.shape[0], -1), axis=1, bitorder="little"
        )[:, : self.bucket_length]
        signs = np.where(bits.astype(bool), 1.0, -1.0)
        return signs if self.orientation == "row" else signs.T

    def reconstruct(self) -> np.ndarray:
        """Dense scalar-rescaled approximation of the source matrix."""
        signs = self.sign_matrix()
        if self.orientation == "row":
            return self.scalars[:, None] * signs
        return signs * self.scalars[None, :]


def binarize_rows(h) -> PackedBinMatrix:
    """Binarize each row of an (N, d) matrix as its own bucket.

    The per-row scalars act as node weights on the sign patterns.
    """
    h = _check_finite(h, "matrix")
    if h.ndim != 2 or h.shape[0] == 0 or h.shape[1] == 0:
        raise ValueError("matrix must be 2-D with positive dimensions")
    scalars = np.abs(h).mean(axis=1)
    return PackedBinMatrix(
        rows=h.shape[0],
        cols=h.shape[1],
        orientation="row",
        words=_pack_bits_2d(h >= 0),
        scalars=scalars,
    )


def binarize_columns(w) -> PackedBinMatrix:
    """Binarize each column of a (d_in, d_out) matrix as its own bucket.

    The per-column scalars act as feature attentions. Scalars are
    normalized by the bucket (column) length, i.e. the least-squares
    optimum, not by the number of buckets.
    """
    w = _check_finite(w, "matrix")
    if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
        raise ValueError("matrix must be 2-D with positive dimensions")
    scalars = np.abs(w).mean(axis=0)
    return PackedBinMatrix(
        rows=w.shape[0],
        cols=w.shape[1],
        orientation="col",
        words=_pack_bits_2d(w.T >= 0),
        scalars=scalars,
    )


def xnor_popcount_dot(a: BitVector, b: BitVector) -> int:
    """+-1 inner product via XNOR and popcount: 2*matches - length."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    xnor = ~(a.words ^ b.words)
    xnor[-1] &= _pad_mask(a.length)
    matches = int(_popcount(xnor).sum())
    return 2 * matches - a.length


def bin_gemm(f: PackedBinMatrix, b: PackedBinMatrix) -> np.ndarray:
    """Multiply a row-bucketed (N, d) by a column-bucketed (d, m) matrix.

    out[i, j] = beta_i * alpha_j * xnor_popcount_dot(row_i, col_j); equal
    to the dense product of the two reconstructed matrices up to float
    summation order. Pure function, safe to call concurrently.
    """
    if f.orientation != "row" or b.orientation != "col":
        raise ValueError("bin_gemm needs a row-bucketed left and column-bucketed right operand")
    if f.cols != b.rows:
        raise ValueError(f"inner dimensions disagree: {f.cols} vs {b.rows}")
    t = f.cols
    mask = np.full(f.words.shape[1], 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    mask[-1] = _pad_mask(t)

    out = np.empty((f.rows, b.cols), dtype=np.float64)
    bw = b.words
    for start in range(0, f.rows, _GEMM_BLOCK_ROWS):
        stop = min(start + _GEMM_BLOCK_ROWS, f.rows)
        xnor = ~(f.words[start:stop, None, :] ^ bw[None, :, :]) & mask
        matches = _popcount(xnor).sum(axis=2, dtype=np.int64)
        out[start:stop] = 2.0 * matches - t
    out *= f.scalars[:, None]
    out *= b.scalars[None, :]
    return out
