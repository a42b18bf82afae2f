"""End-to-end SVD -> DWT -> WDR compression and the ``.swdr`` container.

Container layout (little-endian)::

    magic "SWDR" | version u8 | mode u8 | m u32 | n u32 | k u32 | wavelet u8
    | levels u8 | include_approx u8 | t0 f64 | pass_count u16 | approx_len u32
    | approx_len float32 values | WDR payload

The float32 block holds the approximation subband (row-major) when it is
not WDR coded. In ``svd_only`` mode it holds the truncated factors instead:
``U_k`` (m x k), ``sigma_k`` (k), ``V_k`` (n x k), and there is no payload.

Two compression ratios are tracked. ``cr_total`` is the product
``cr_svd * cr_wdr`` in which neither stage counts the other's storage;
``cr_measured`` is pixels over container bytes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import IoFailure, MalformedStream, RatioUnreachable, ShapeMismatch
from .image_io import GrayImage, to_gray, to_real
from .svd_lowrank import (
    SvdFactors,
    rank_for_ratio,
    svd_compression_ratio,
    svd_decompose,
    truncate_reconstruct,
)
from .wavelet import CoeffVector, delinearize, dwt2, idwt2, level_shapes, linearize, pyramid_template
from .wdr_codec import STREAM_HEADER, PASS_HEADER, WdrParams, parse_stream, wdr_decode, wdr_encode

MAGIC = b"SWDR"
VERSION = 1
HEADER = struct.Struct("<4sBBIIIBBBdHI")

MODES = ("svd_wdr", "wdr_only", "svd_only")
BASES = ("product", "measured")
_MODE_IDS = {name: i for i, name in enumerate(MODES)}
_WAVELET_IDS = {"haar": 0, "cdf53": 1}
_WAVELET_NAMES = {v: k for k, v in _WAVELET_IDS.items()}


@dataclass
class CompressionConfig:
    """Parameters for :func:`compress`.

    ``basis`` picks what ``target_ratio`` constrains: ``"product"`` makes
    ``cr_svd * cr_wdr`` meet it, ``"measured"`` makes pixels / container
    bytes meet it. ``svd_share`` is the exponent of the target handed to the
    SVD stage (``cr_svd ~ target ** svd_share``).
    """

    target_ratio: float | None = None
    svd_rank: int | None = None
    svd_share: float = 0.5
    wavelet: str = "haar"
    levels: int = 3
    include_approx: bool = False
    wdr: WdrParams = field(default_factory=WdrParams)
    mode: str = "svd_wdr"
    basis: str = "product"
    requantize_svd: bool = False
    svd_method: str = "lapack"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.basis not in BASES:
            raise ValueError(f"unknown ratio basis {self.basis!r}; choose from {BASES}")
        if self.wavelet not in _WAVELET_IDS:
            raise ValueError(f"unknown wavelet {self.wavelet!r}")
        if not 0.0 <= self.svd_share <= 1.0:
            raise ValueError("svd_share must lie in [0, 1]")
        if self.target_ratio is not None and not self.target_ratio > 1:
            raise ValueError("target ratio must exceed 1")
        if self.target_ratio is None and self.mode != "wdr_only" and self.svd_rank is None:
            raise ValueError("give a target ratio or an explicit SVD rank")


@dataclass(frozen=True)
class Plan:
    k: int | None
    passes: int
    budget_bytes: int | None
    cr_svd: float
    unreachable: bool = False


def _n_coeffs(m, n, cfg) -> int:
    shapes = level_shapes((m, n), cfg.levels)
    total = sum(3 * r * c for r, c in shapes[1:])
    if cfg.include_approx:
        total += shapes[-1][0] * shapes[-1][1]
    return total


def _approx_len(m, n, cfg, k=None) -> int:
    if cfg.mode == "svd_only":
        return k * (m + n + 1)
    if cfg.include_approx:
        return 0
    r, c = level_shapes((m, n), cfg.levels)[-1]
    return r * c


def _svd_stage(m, n, cfg, target) -> tuple[int, float, bool]:
    r = min(m, n)
    if cfg.svd_rank is not None:
        k = cfg.svd_rank
        unreachable = False
    elif cfg.svd_share == 0:
        return r, 1.0, False
    else:
        k, unreachable = rank_for_ratio(m, n, target**cfg.svd_share)
    if k >= r:
        return r, 1.0, unreachable
    return k, svd_compression_ratio(m, n, k), unreachable


def plan_parameters(m: int, n: int, cfg: CompressionConfig) -> Plan:
    """Pick the SVD rank and WDR byte budget that meet ``cfg.target_ratio``."""
    target = cfg.target_ratio
    passes = cfg.wdr.passes
    explicit_budget = cfg.wdr.budget_bytes

    if cfg.mode == "svd_only":
        r = min(m, n)
        if cfg.svd_rank is not None:
            k, unreachable = cfg.svd_rank, False
        elif cfg.basis == "product":
            k, unreachable = rank_for_ratio(m, n, target)
        else:
            room = (m * n) // target - HEADER.size
            k = min(r, int(room // (4 * (m + n + 1))))
            unreachable = k < 1
            k = max(k, 1)
        if unreachable and cfg.basis == "measured":
            raise RatioUnreachable(f"svd_only cannot reach {target}:1 measured on a {m}x{n} image")
        return Plan(k, 0, None, svd_compression_ratio(m, n, k), unreachable)

    if cfg.mode == "wdr_only":
        k, cr_svd, unreachable = None, 1.0, False
    else:
        k, cr_svd, unreachable = _svd_stage(m, n, cfg, target)

    if target is None:
        return Plan(k, passes, explicit_budget, cr_svd, unreachable)

    if cfg.basis == "product":
        if cr_svd >= target:
            budget = None
        else:
            budget = int(math.floor(_n_coeffs(m, n, cfg) * cr_svd / target))
    else:
        overhead = HEADER.size + 4 * _approx_len(m, n, cfg)
        budget = int((m * n) // target) - overhead
        if budget < STREAM_HEADER.size + PASS_HEADER.size + 1:
            raise RatioUnreachable(
                f"{target}:1 leaves {budget} bytes for WDR after {overhead} bytes of header "
                "and approximation band; code the approximation band (include_approx) "
                "or use more levels"
            )
    if explicit_budget is not None:
        budget = explicit_budget if budget is None else min(budget, explicit_budget)
    return Plan(k, passes, budget, cr_svd, unreachable)


@dataclass(eq=False)
class Container:
    mode: str
    m: int
    n: int
    k: int
    wavelet: str
    levels: int
    include_approx: bool
    t0: float
    pass_count: int
    approx: np.ndarray | None
    wdr_payload: bytes
    unreachable: bool = False

    # -- accounting ------------------------------------------------------------
    @property
    def n_coeffs(self) -> int:
        if not self.wdr_payload:
            return 0
        return STREAM_HEADER.unpack_from(self.wdr_payload, 0)[0]

    @property
    def cr_svd(self) -> float:
        if self.mode == "wdr_only" or (self.mode == "svd_wdr" and self.k >= min(self.m, self.n)):
            return 1.0
        return svd_compression_ratio(self.m, self.n, self.k)

    @property
    def cr_wdr(self) -> float:
        if self.mode == "svd_only":
            return 1.0
        return self.n_coeffs / len(self.wdr_payload)

    @property
    def cr_total(self) -> float:
        return self.cr_svd * self.cr_wdr

    @property
    def cr_measured(self) -> float:
        return (self.m * self.n) / len(self.to_bytes())

    @property
    def ratios(self) -> dict:
        return {
            "cr_svd": self.cr_svd,
            "cr_wdr": self.cr_wdr,
            "cr_total": self.cr_total,
            "cr_measured": self.cr_measured,
        }

    # -- serialization ---------------------------------------------------------
    def to_bytes(self) -> bytes:
        approx = np.zeros(0, dtype="<f4") if self.approx is None else np.asarray(self.approx, dtype="<f4")
        head = HEADER.pack(
            MAGIC,
            VERSION,
            _MODE_IDS[self.mode],
            self.m,
            self.n,
            self.k,
            _WAVELET_IDS[self.wavelet],
            self.levels,
            int(self.include_approx),
            self.t0,
            self.pass_count,
            approx.size,
        )
        return head + approx.tobytes() + self.wdr_payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Container":
        if len(data) < HEADER.size:
            raise MalformedStream("container shorter than its header")
        (magic, version, mode_id, m, n, k, wav_id, levels, inc, t0, pass_count, approx_len) = HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise MalformedStream("not an SWDR container (bad magic)")
        if version != VERSION:
            raise MalformedStream(f"unsupported container version {version}")
        if mode_id >= len(MODES) or wav_id not in _WAVELET_NAMES or inc > 1:
            raise MalformedStream("invalid container header field")
        end = HEADER.size + 4 * approx_len
        if len(data) < end:
            raise MalformedStream("approximation block is truncated")
        approx = np.frombuffer(data[HEADER.size : end], dtype="<f4").astype(np.float32) if approx_len else None
        return cls(
            MODES[mode_id], m, n, k, _WAVELET_NAMES[wav_id], levels, bool(inc), t0, pass_count,
            approx, bytes(data[end:]),
        )

    def truncate_passes(self, passes: int) -> "Container":
        """Keep only the first ``passes`` WDR passes."""
        stream = parse_stream(self.wdr_payload).truncate(passes)
        return replace(self, pass_count=len(stream.passes), wdr_payload=stream.serialized)


def load_container(path) -> Container:
    try:
        with open(path, "rb") as fh:
            return Container.from_bytes(fh.read())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def save_container(c: Container, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(c.to_bytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def compress(img: GrayImage, cfg: CompressionConfig, factors: SvdFactors | None = None) -> Container:
    """Compress ``img``; ``factors`` may carry a precomputed SVD of the same image."""
    m, n = img.shape
    plan = plan_parameters(m, n, cfg)
    A = to_real(img)

    if cfg.mode != "wdr_only" and plan.k < min(m, n) or cfg.mode == "svd_only":
        if factors is None:
            factors = svd_decompose(A, method=cfg.svd_method)

    if cfg.mode == "svd_only":
        k = plan.k
        block = np.concatenate([factors.U[:, :k].ravel(), factors.sigma[:k], factors.V[:, :k].ravel()])
        return Container("svd_only", m, n, k, cfg.wavelet, 0, False, 0.0, 0,
                         block.astype(np.float32), b"", plan.unreachable)

    if cfg.mode == "svd_wdr":
        k = plan.k
        if k < min(m, n):
            A = truncate_reconstruct(factors, k)
            if cfg.requantize_svd:
                A = to_real(to_gray(A))
    else:
        k = 0

    pyramid = dwt2(A, cfg.levels, cfg.wavelet)
    vec = linearize(pyramid, cfg.include_approx)
    params = replace(cfg.wdr, passes=plan.passes, budget_bytes=plan.budget_bytes)
    stream = wdr_encode(vec, params)
    approx = None if cfg.include_approx else pyramid.approx.astype(np.float32)
    return Container(cfg.mode, m, n, k, cfg.wavelet, cfg.levels, cfg.include_approx, stream.t0,
                     len(stream.passes), approx, stream.serialized, plan.unreachable)


def decompress(c: Container, reconstruction: str = "floor") -> GrayImage:
    if c.mode == "svd_only":
        m, n, k = c.m, c.n, c.k
        if c.approx is None or c.approx.size != k * (m + n + 1):
            raise ShapeMismatch("factor block does not match m, n, k")
        block = c.approx.astype(np.float64)
        U = block[: m * k].reshape(m, k)
        sigma = block[m * k : m * k + k]
        V = block[m * k + k :].reshape(n, k)
        return to_gray((U * sigma) @ V.T)

    stream = parse_stream(c.wdr_payload)
    approx = None
    if not c.include_approx:
        want = level_shapes((c.m, c.n), c.levels)[-1]
        if c.approx is None or c.approx.size != want[0] * want[1]:
            raise ShapeMismatch("approximation band does not match the image layout")
        approx = c.approx.astype(np.float64).reshape(want)
    template = pyramid_template((c.m, c.n), c.levels, c.wavelet, approx)
    layout = linearize(template, c.include_approx)
    if stream.n_coeffs != len(layout):
        raise ShapeMismatch(f"stream has {stream.n_coeffs} coefficients, layout needs {len(layout)}")
    values = wdr_decode(stream, reconstruction)
    pyramid = delinearize(CoeffVector(values, layout.shape_map, c.include_approx), template)
    return to_gray(idwt2(pyramid))
