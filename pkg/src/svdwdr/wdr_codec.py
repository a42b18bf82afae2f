"""Wavelet difference reduction: bit-plane encoder, decoder and packed bitstream.

Pass ``p`` works at threshold ``T_p = T0 / 2**p``. A coefficient becomes
significant the first time ``|w| >= T_p``; its 1-based position is sent as
the gap from the previous significant position in the same pass, written as
a sign symbol followed by the gap's binary digits with the leading 1
dropped. Every coefficient that was already significant receives one
refinement bit per pass, the next binary digit of ``|w| / T_p``.

All encoder decisions derive from ``u = |w| / T0``: the magnitude multiple at
pass ``p`` is ``floor(u * 2**p)`` and scaling by a power of two is exact, so
the multiples nest exactly (``m_p = 2 * m_{p-1} + bit``).

Coefficients that are significant in the first pass may carry a magnitude
multiple above one (the maximum always does when ``T0 = max|w|``). Those
multiples, minus one, are written as ``top_bits`` fixed-width digits after
the first pass's significance symbols.

Wire layout (little-endian)::

    stream  = n_coeffs:u32  t0:f64  pass_count:u16  top_bits:u8  pass*
    pass    = threshold:f64  entry_count:u32  symbol_count:u32
              refinement_bit_count:u32  packed-symbols
    symbols = 2 bits each, 4 per byte, first symbol in the high bits:
              0 -> '0', 1 -> '1', 2 -> '+', 3 -> '-'; zero padded to a byte.
              Order: significance symbols, first-pass multiples, refinement bits.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AllZeroInput, MalformedStream

SYM_ZERO, SYM_ONE, SYM_PLUS, SYM_MINUS = 0, 1, 2, 3
_SYMBOL_CHARS = "01+-"

STREAM_HEADER = struct.Struct("<IdHB")
PASS_HEADER = struct.Struct("<dIII")

T0_RULES = ("max", "pow2")


@dataclass
class WdrParams:
    """Encoder settings.

    ``t0`` overrides ``t0_rule`` with an explicit initial threshold.
    ``budget_bytes`` caps the serialized size; the last pass is cut short to
    fill the budget exactly.
    """

    passes: int = 9
    t0_rule: str = "max"
    t0: float | None = None
    budget_bytes: int | None = None

    def __post_init__(self):
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.t0_rule not in T0_RULES:
            raise ValueError(f"unknown t0 rule {self.t0_rule!r}; choose from {T0_RULES}")
        if self.t0 is not None and not (self.t0 > 0 and math.isfinite(self.t0)):
            raise ValueError("explicit t0 must be positive and finite")


@dataclass(eq=False)
class PassRecord:
    threshold: float
    gaps: np.ndarray
    signs: np.ndarray
    refinement_bits: np.ndarray
    multiples: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.gaps = np.asarray(self.gaps, dtype=np.int64)
        self.signs = np.asarray(self.signs, dtype=np.int8)
        self.refinement_bits = np.asarray(self.refinement_bits, dtype=np.uint8)
        self.multiples = np.asarray(self.multiples, dtype=np.int64)

    @property
    def entries(self) -> list[tuple[int, str]]:
        return [(int(g), "+" if s > 0 else "-") for g, s in zip(self.gaps, self.signs)]

    @property
    def indices(self) -> np.ndarray:
        """1-based positions of the coefficients that became significant."""
        return np.cumsum(self.gaps)

    def __eq__(self, other):
        if not isinstance(other, PassRecord):
            return NotImplemented
        return (
            self.threshold == other.threshold
            and np.array_equal(self.gaps, other.gaps)
            and np.array_equal(self.signs, other.signs)
            and np.array_equal(self.refinement_bits, other.refinement_bits)
            and np.array_equal(self.multiples, other.multiples)
        )


@dataclass(eq=False)
class WdrStream:
    t0: float
    n_coeffs: int
    passes: list = field(default_factory=list)
    top_bits: int = 0

    @cached_property
    def serialized(self) -> bytes:
        return serialize_stream(self)

    def __len__(self):
        return len(self.serialized)

    def __eq__(self, other):
        if not isinstance(other, WdrStream):
            return NotImplemented
        return (
            self.t0 == other.t0
            and self.n_coeffs == other.n_coeffs
            and self.top_bits == other.top_bits
            and self.passes == other.passes
        )

    def truncate(self, passes: int) -> "WdrStream":
        """The stream an encoder limited to ``passes`` passes would have produced."""
        return WdrStream(self.t0, self.n_coeffs, list(self.passes[:passes]), self.top_bits)


# -- thresholds, significance, quantization ----------------------------------------

def _values(w) -> np.ndarray:
    values = getattr(w, "values", w)
    return np.asarray(values, dtype=np.float64).ravel()


def initial_threshold(w, rule: str = "max") -> float:
    """``T0 = max|w|`` (rule ``"max"``) or the next power of two at or above it (``"pow2"``)."""
    values = _values(w)
    if values.size == 0:
        raise AllZeroInput("empty coefficient vector")
    if not np.all(np.isfinite(values)):
        raise ValueError("coefficients must be finite")
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        raise AllZeroInput("all coefficients are zero")
    if rule == "max":
        return peak
    if rule == "pow2":
        mant, exp = math.frexp(peak)
        return peak if mant == 0.5 else math.ldexp(1.0, exp)
    raise ValueError(f"unknown t0 rule {rule!r}")


def significance_pass(w, T: float, already=()) -> tuple[np.ndarray, np.ndarray]:
    """1-based indices (increasing) with ``|w(i)| >= T`` not in ``already``, and their signs."""
    if not T > 0:
        raise ValueError("threshold must be positive")
    values = _values(w)
    mask = np.abs(values) >= T
    if len(already):
        mask[np.asarray(list(already), dtype=np.int64) - 1] = False
    pos = np.flatnonzero(mask)
    return pos + 1, np.where(values[pos] < 0, -1, 1).astype(np.int8)


def refine_values(w, T: float, significant) -> np.ndarray:
    """Floor-to-multiple quantization ``sign(w) * floor(|w| / T) * T`` at 1-based indices."""
    if not T > 0:
        raise ValueError("threshold must be positive")
    values = _values(w)[np.asarray(list(significant), dtype=np.int64) - 1]
    return np.sign(values) * np.floor(np.abs(values) / T) * T


# -- gap symbols ---------------------------------------------------------------------

def _bit_length(x: np.ndarray) -> np.ndarray:
    # exact for positive integers below 2**53
    return np.frexp(x.astype(np.float64))[1].astype(np.int64)


def encode_gaps(indices, signs) -> np.ndarray:
    """Symbol codes for strictly increasing 1-based ``indices`` and their ``signs``."""
    idx = np.asarray(indices, dtype=np.int64)
    sgn = np.asarray(signs)
    if idx.size == 0:
        return np.zeros(0, dtype=np.uint8)
    gaps = np.diff(idx, prepend=0)
    if np.any(gaps < 1):
        raise ValueError("indices must be strictly increasing and >= 1")
    nbits = _bit_length(gaps) - 1
    seglen = nbits + 1
    starts = np.cumsum(seglen) - seglen
    out = np.empty(int(seglen.sum()), dtype=np.uint8)
    out[starts] = np.where(sgn > 0, SYM_PLUS, SYM_MINUS)
    total_bits = int(nbits.sum())
    if total_bits:
        entry = np.repeat(np.arange(idx.size), nbits)
        j = np.arange(total_bits) - np.repeat(np.cumsum(nbits) - nbits, nbits)
        shift = nbits[entry] - 1 - j
        out[starts[entry] + 1 + j] = (gaps[entry] >> shift) & 1
    return out


def decode_gaps(symbols, n_coeffs: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`encode_gaps`; positions must stay within ``n_coeffs``."""
    sym = np.asarray(symbols, dtype=np.uint8)
    if sym.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8)
    if np.any(sym > SYM_MINUS):
        raise MalformedStream("unknown symbol code")
    is_sign = sym >= SYM_PLUS
    if not is_sign[0]:
        raise MalformedStream("gap bits before the first sign symbol")
    sign_pos = np.flatnonzero(is_sign)
    ends = np.append(sign_pos[1:], sym.size)
    nbits = ends - sign_pos - 1
    if nbits.max() > 40:
        raise MalformedStream("index gap too large")
    gaps = np.left_shift(1, nbits).astype(np.int64)
    bit_pos = np.flatnonzero(~is_sign)
    if bit_pos.size:
        entry = np.searchsorted(sign_pos, bit_pos, side="right") - 1
        shift = ends[entry] - 1 - bit_pos
        np.add.at(gaps, entry, sym[bit_pos].astype(np.int64) << shift)
    indices = np.cumsum(gaps)
    if indices[-1] > n_coeffs:
        raise MalformedStream(f"position {indices[-1]} exceeds {n_coeffs} coefficients")
    signs = np.where(sym[sign_pos] == SYM_PLUS, 1, -1).astype(np.int8)
    return indices, signs


def format_symbols(symbols) -> str:
    return "".join(_SYMBOL_CHARS[s] for s in np.asarray(symbols))


def parse_symbols(text: str) -> np.ndarray:
    """Inverse of :func:`format_symbols`; whitespace is ignored and U+2212 reads as '-'."""
    text = "".join(text.split()).replace("−", "-")
    try:
        return np.array([_SYMBOL_CHARS.index(c) for c in text], dtype=np.uint8)
    except ValueError:
        raise MalformedStream(f"invalid symbol text {text!r}") from None


def pack_symbols(sym) -> bytes:
    sym = np.asarray(sym, dtype=np.uint8)
    pad = (-sym.size) % 4
    if pad:
        sym = np.concatenate([sym, np.zeros(pad, dtype=np.uint8)])
    q = sym.reshape(-1, 4)
    return ((q[:, 0] << 6) | (q[:, 1] << 4) | (q[:, 2] << 2) | q[:, 3]).astype(np.uint8).tobytes()


def unpack_symbols(data: bytes, count: int) -> np.ndarray:
    b = np.frombuffer(data, dtype=np.uint8)
    sym = np.stack([b >> 6, (b >> 4) & 3, (b >> 2) & 3, b & 3], axis=1).ravel()
    if np.any(sym[count:]):
        raise MalformedStream("nonzero symbol padding")
    return sym[:count]


def _fixed_width_bits(values: np.ndarray, width: int) -> np.ndarray:
    if width == 0 or values.size == 0:
        return np.zeros(0, dtype=np.uint8)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _from_fixed_width_bits(bits: np.ndarray, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(bits.size, dtype=np.int64)
    weights = np.left_shift(1, np.arange(width - 1, -1, -1, dtype=np.int64))
    return bits.reshape(-1, width).astype(np.int64) @ weights


# -- encoder ---------------------------------------------------------------------------

def _pass_symbols(rec: PassRecord, top_bits: int, first: bool) -> np.ndarray:
    parts = [encode_gaps(rec.indices, rec.signs)]
    if first and top_bits:
        parts.append(_fixed_width_bits(rec.multiples - 1, top_bits))
    parts.append(rec.refinement_bits)
    return np.concatenate(parts)


def _cut_pass(rec: PassRecord, top_bits: int, first: bool, capacity: int) -> PassRecord | None:
    """Largest prefix of ``rec`` (entries first, then refinement bits) within ``capacity`` symbols."""
    seglen = _bit_length(rec.gaps) + (top_bits if first else 0)
    used = np.cumsum(seglen)
    n_entries = int(np.searchsorted(used, capacity, side="right"))
    spent = int(used[n_entries - 1]) if n_entries else 0
    n_refine = min(rec.refinement_bits.size, capacity - spent)
    if n_entries == 0 and n_refine == 0:
        return None
    return PassRecord(
        rec.threshold,
        rec.gaps[:n_entries],
        rec.signs[:n_entries],
        rec.refinement_bits[:n_refine],
        rec.multiples[:n_entries] if first else rec.multiples,
    )


def wdr_encode(w, params: WdrParams | None = None) -> WdrStream:
    """Encode a coefficient vector into an embedded WDR stream."""
    params = params or WdrParams()
    values = _values(w)
    if not np.all(np.isfinite(values)):
        raise ValueError("coefficients must be finite")
    n = values.size
    try:
        t0 = params.t0 if params.t0 is not None else initial_threshold(values, params.t0_rule)
    except AllZeroInput:
        return WdrStream(0.0, n)

    u = np.abs(values) / t0
    negative = values < 0
    significant = np.zeros(n, dtype=bool)
    order = np.zeros(0, dtype=np.int64)  # significance order, refined in this order
    records = []
    top_bits = 0
    budget = params.budget_bytes
    size = STREAM_HEADER.size

    for p in range(1, params.passes + 1):
        threshold = math.ldexp(t0, -p)
        mult = np.floor(np.ldexp(u, p)).astype(np.int64)
        refinement = (mult[order] & 1).astype(np.uint8)
        new = np.flatnonzero(~significant & (mult >= 1))
        gaps = np.diff(new + 1, prepend=0)
        signs = np.where(negative[new], -1, 1)
        multiples = np.zeros(0, dtype=np.int64)
        if p == 1:
            multiples = mult[new]
            if new.size:
                top_bits = int(multiples.max() - 1).bit_length()
        rec = PassRecord(threshold, gaps, signs, refinement, multiples)

        nsym = _pass_symbols(rec, top_bits, p == 1).size
        pass_size = PASS_HEADER.size + (nsym + 3) // 4
        if budget is not None and size + pass_size > budget:
            capacity = 4 * (budget - size - PASS_HEADER.size)
            if capacity > 0:
                cut = _cut_pass(rec, top_bits, p == 1, capacity)
                if cut is not None:
                    records.append(cut)
            break
        records.append(rec)
        size += pass_size
        significant[new] = True
        order = np.concatenate([order, new])

    return WdrStream(t0, n, records, top_bits)


# -- decoder ---------------------------------------------------------------------------

RECONSTRUCTIONS = ("floor", "midpoint")


def wdr_decode(stream: WdrStream, reconstruction: str = "floor") -> np.ndarray:
    """Reconstruct coefficient values from a stream.

    ``"floor"`` places each significant coefficient at the bottom of its
    quantization interval (``m * T``); ``"midpoint"`` adds half a step.
    """
    if reconstruction not in RECONSTRUCTIONS:
        raise ValueError(f"unknown reconstruction {reconstruction!r}")
    n = stream.n_coeffs
    out = np.zeros(n, dtype=np.float64)
    order = np.zeros(0, dtype=np.int64)
    mult = np.zeros(0, dtype=np.int64)
    neg = np.zeros(0, dtype=bool)
    seen = np.zeros(n, dtype=bool)
    threshold = None
    for p, rec in enumerate(stream.passes, start=1):
        threshold = math.ldexp(stream.t0, -p)
        if rec.threshold != threshold:
            raise MalformedStream(f"pass {p} threshold {rec.threshold} != T0/2**{p}")
        nref = rec.refinement_bits.size
        if nref > order.size:
            raise MalformedStream(f"pass {p} refines {nref} of {order.size} significant coefficients")
        mult = 2 * mult
        mult[:nref] += rec.refinement_bits
        idx = rec.indices - 1
        if idx.size:
            if np.any(rec.gaps < 1) or idx[-1] >= n:
                raise MalformedStream(f"pass {p} addresses a position outside the vector")
            if np.any(seen[idx]):
                raise MalformedStream(f"pass {p} repeats an already significant position")
        seen[idx] = True
        if p == 1 and rec.multiples.size:
            if rec.multiples.size != idx.size:
                raise MalformedStream("first pass multiples do not match its entries")
            new_mult = rec.multiples
        else:
            new_mult = np.ones(idx.size, dtype=np.int64)
        order = np.concatenate([order, idx])
        mult = np.concatenate([mult, new_mult])
        neg = np.concatenate([neg, rec.signs < 0])
    if threshold is None or order.size == 0:
        return out
    mag = mult.astype(np.float64)
    if reconstruction == "midpoint":
        mag = mag + 0.5
    mag *= threshold
    out[order] = np.where(neg, -mag, mag)
    return out


def decode_coefficients(stream: WdrStream, like, reconstruction: str = "floor"):
    """Decode into a :class:`~svdwdr.wavelet.CoeffVector` shaped like ``like``."""
    from .wavelet import CoeffVector

    return CoeffVector(wdr_decode(stream, reconstruction), like.shape_map, like.includes_approx)


# -- serialization -----------------------------------------------------------------

def serialize_stream(stream: WdrStream) -> bytes:
    chunks = [STREAM_HEADER.pack(stream.n_coeffs, stream.t0, len(stream.passes), stream.top_bits)]
    for p, rec in enumerate(stream.passes, start=1):
        sig = encode_gaps(rec.indices, rec.signs)
        sym = _pass_symbols(rec, stream.top_bits, p == 1)
        chunks.append(PASS_HEADER.pack(rec.threshold, rec.gaps.size, sig.size, rec.refinement_bits.size))
        chunks.append(pack_symbols(sym))
    return b"".join(chunks)


def parse_stream(data: bytes) -> WdrStream:
    """Parse a serialized stream.

    A stream cut at a pass boundary parses as the shorter stream, so any
    whole-pass prefix of a payload is itself decodable.
    """
    data = bytes(data)
    if len(data) < STREAM_HEADER.size:
        raise MalformedStream("stream shorter than its header")
    n_coeffs, t0, pass_count, top_bits = STREAM_HEADER.unpack_from(data, 0)
    if not (math.isfinite(t0) and t0 >= 0):
        raise MalformedStream("invalid initial threshold")
    pos = STREAM_HEADER.size
    passes = []
    for p in range(1, pass_count + 1):
        if pos == len(data):
            break
        if pos + PASS_HEADER.size > len(data):
            raise MalformedStream(f"pass {p} header is truncated")
        threshold, n_entries, n_sig, n_ref = PASS_HEADER.unpack_from(data, pos)
        pos += PASS_HEADER.size
        n_top = top_bits * n_entries if p == 1 else 0
        count = n_sig + n_top + n_ref
        nbytes = (count + 3) // 4
        if pos + nbytes > len(data):
            raise MalformedStream(f"pass {p} payload is truncated")
        sym = unpack_symbols(data[pos : pos + nbytes], count)
        pos += nbytes
        indices, signs = decode_gaps(sym[:n_sig], n_coeffs)
        if indices.size != n_entries:
            raise MalformedStream(f"pass {p} declares {n_entries} entries, found {indices.size}")
        extra = sym[n_sig:]
        if np.any(extra > SYM_ONE):
            raise MalformedStream(f"pass {p} has sign symbols among its bits")
        multiples = np.zeros(0, dtype=np.int64)
        if p == 1:
            multiples = _from_fixed_width_bits(extra[:n_top], top_bits) + 1 if top_bits else np.ones(n_entries, dtype=np.int64)
        passes.append(PassRecord(threshold, np.diff(indices, prepend=0), signs, extra[n_top:], multiples))
    if pos != len(data):
        raise MalformedStream("trailing bytes after the last pass")
    return WdrStream(t0, n_coeffs, passes, top_bits)


def wdr_compression_ratio(original_bytes: int, stream: WdrStream) -> float:
    """``OR / CZ`` with CZ the serialized length, headers included."""
    if original_bytes <= 0:
        raise ValueError("original size must be positive")
    return original_bytes / len(stream.serialized)
