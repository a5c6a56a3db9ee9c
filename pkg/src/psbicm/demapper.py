"""Soft demapping to bitwise L-values under an assumed Gaussian channel.

The demapper computes generalized a-posteriori L-values

    L_i(y) = L_i^pr + s * L_i^ex(y),        i = 1..m,

where ``L_i^pr = ln P(B_i=0)/P(B_i=1)`` comes from the symbol pmf and the
extrinsic part is the exact (log-sum-exp, never max-log) likelihood ratio
of the bitwise auxiliary channel: a Gaussian with variance taken from an
*assumed* SNR that may differ from the true channel SNR.  ``s`` scales
only the extrinsic part.  Positive L-values vote for bit 0.

For square QAM with a product pmf the computation factors per real
dimension; any other constellation is handled by a full 2-D sum.

A demap run is captured as an :class:`LValueTrace` — flattened
(bit, tributary, L-value) records plus the metadata the metric estimators
need (s, the true-to-assumed SNR ratio, per-tributary priors, the symbol
entropy, and the quantizer if one was applied).  Traces serialize to a
little-endian binary format or CSV, which is also the ingestion path for
externally captured L-values.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, replace

import numpy as np

_CHUNK = 1 << 16


@dataclass(frozen=True)
class Quantizer:
    """Odd-symmetric uniform L-value quantizer.

    ``n_levels`` lattice points ``{±0.5*step, ±1.5*step, ...}`` saturating
    at ``±l_max = ±(n_levels - 1) * step / 2``; there is no zero level, so
    ``n_levels`` must be even.
    """

    n_levels: int
    step: float

    def __post_init__(self):
        if self.n_levels < 2 or self.n_levels % 2:
            raise ValueError("n_levels must be even and >= 2")
        if not self.step > 0:
            raise ValueError("step must be positive")

    @property
    def l_max(self):
        return (self.n_levels - 1) * self.step / 2.0

    @property
    def lattice(self):
        """All lattice values, ascending."""
        half = (np.arange(self.n_levels // 2) + 0.5) * self.step
        return np.concatenate([-half[::-1], half])

    def apply(self, lvalues):
        """Round to the nearest lattice point (zero maps to +step/2)."""
        l = np.asarray(lvalues, dtype=float)
        j = np.clip(np.floor(np.abs(l) / self.step), 0, self.n_levels // 2 - 1)
        sign = np.where(l < 0, -1.0, 1.0)
        return sign * (j + 0.5) * self.step

    def indices(self, lvalues):
        """Lattice index in 0..n_levels-1 (ascending order) of each value."""
        l = np.asarray(lvalues, dtype=float)
        j = np.clip(np.floor(np.abs(l) / self.step), 0, self.n_levels // 2 - 1)
        half = self.n_levels // 2
        return np.where(l < 0, half - 1 - j, half + j).astype(np.int64)


@dataclass(frozen=True)
class DemapperConfig:
    """Auxiliary-channel assumption of the receiver.

    ``assumed_snr_db`` sets the Gaussian variance; ``scale`` is the
    extrinsic scaling s >= 0; an optional quantizer rounds the final
    L-values onto its lattice.
    """

    assumed_snr_db: float
    scale: float = 1.0
    quantizer: Quantizer | None = None

    def __post_init__(self):
        if not self.scale >= 0:
            raise ValueError("scale must be >= 0")

    @property
    def assumed_snr_linear(self):
        return float(10.0 ** (self.assumed_snr_db / 10.0))


def _lse_subset(w, mask):
    """Log-sum-exp of w[:, mask] along axis 1, -inf rows allowed."""
    wm = w[:, mask]
    mx = wm.max(axis=1)
    finite = np.isfinite(mx)
    out = np.full(mx.shape, -np.inf)
    if np.any(finite):
        wf = wm[finite]
        mf = mx[finite]
        with np.errstate(under="ignore"):
            out[finite] = mf + np.log(np.exp(wf - mf[:, None]).sum(axis=1))
    return out


def _position_priors(pmf):
    # canonical per-tributary priors broadcast to label positions, so the
    # prior/extrinsic split is bit-exact against the trace metadata
    pri_t = pmf.log_priors()
    n_trib = pri_t.size
    return pri_t[np.arange(pmf.m) % n_trib]


def _is_product_pmf(pmf, bar_m):
    joint = pmf.p.reshape(1 << bar_m, 1 << bar_m)
    pi = joint.sum(axis=1)
    pq = joint.sum(axis=0)
    return np.allclose(joint, np.outer(pi, pq), atol=1e-13)


def extrinsic_lvalues(y, constellation, pmf, assumed_snr_linear):
    """Extrinsic L-values, shape (n_symbols, m).

    Exact bitwise-posterior ratios minus the prior offsets, under the
    assumed-SNR Gaussian.  Factorizes per dimension for square formats
    with product pmfs.
    """
    y = np.asarray(y, dtype=complex).ravel()
    m = constellation.m
    pri = _position_priors(pmf)
    out = np.empty((y.size, m))

    if constellation.square and _is_product_pmf(pmf, constellation.bar_m):
        bar_m = constellation.bar_m
        lev = constellation.pam_points
        n_lab = lev.size
        p1 = pmf.p.reshape(n_lab, n_lab).sum(axis=1)   # I and Q share this pmf
        with np.errstate(divide="ignore"):
            logp1 = np.log(p1)
        labels = np.arange(n_lab)
        masks = [((labels >> (bar_m - 1 - i)) & 1) == 0 for i in range(bar_m)]
        for lo in range(0, y.size, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            for d, yd in ((0, y.real[sl]), (1, y.imag[sl])):
                w = logp1 - assumed_snr_linear * (yd[:, None] - lev) ** 2
                for i in range(bar_m):
                    pos = d * bar_m + i
                    l_ex = _lse_subset(w, masks[i]) - _lse_subset(w, ~masks[i])
                    out[sl, pos] = l_ex - pri[pos]
        return out

    points = constellation.points
    with np.errstate(divide="ignore"):
        logp = np.log(pmf.p)
    labels = np.arange(points.size)
    masks = [((labels >> (m - 1 - i)) & 1) == 0 for i in range(m)]
    for lo in range(0, y.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        d2 = np.abs(y[sl, None] - points) ** 2
        w = logp - assumed_snr_linear * d2
        for i in range(m):
            out[sl, i] = _lse_subset(w, masks[i]) - _lse_subset(w, ~masks[i]) - pri[i]
    return out


def bitwise_lvalues(y, constellation, pmf, config):
    """A-posteriori L-values prior + s * extrinsic, shape (n_symbols, m)."""
    lex = extrinsic_lvalues(y, constellation, pmf, config.assumed_snr_linear)
    pri = _position_priors(pmf)
    lam = pri + config.scale * lex
    if config.quantizer is not None:
        lam = config.quantizer.apply(lam)
    return lam


@dataclass(frozen=True)
class LValueTrace:
    """Flattened record of one demap run.

    ``bits``/``lvalues``/``tributaries`` are parallel arrays; tributary
    ids are 1-based.  ``scale`` is the s the L-values were computed with,
    ``scale_opt`` the true-to-assumed SNR ratio of the run (1 when
    matched), ``priors`` the per-tributary prior L-values and ``h_b`` the
    transmitted symbol entropy in bits per 2-D symbol.  ``quantizer`` is
    set iff the stored L-values lie on its lattice.
    """

    bits: np.ndarray
    lvalues: np.ndarray
    tributaries: np.ndarray
    m: int
    bar_m: int
    scale: float
    scale_opt: float
    priors: np.ndarray
    h_b: float
    quantizer: Quantizer | None = None

    def __post_init__(self):
        if not (self.bits.shape == self.lvalues.shape == self.tributaries.shape):
            raise ValueError("bits, lvalues and tributaries must have equal shape")
        if self.tributaries.size and (
            self.tributaries.min() < 1 or self.tributaries.max() > self.bar_m
        ):
            raise ValueError("tributary ids out of range")
        if len(self.priors) != self.bar_m:
            raise ValueError("need one prior per tributary")

    @property
    def n(self):
        return self.bits.size

    @property
    def s_ratio(self):
        """Default rescaling s_o/s for the mismatch-corrected estimators."""
        return self.scale_opt / self.scale

    def asymmetric(self):
        """Asymmetric L-values (-1)^bit * L: positive when the sign is right."""
        return np.where(self.bits == 0, self.lvalues, -self.lvalues)

    def tributary_counts(self):
        return np.bincount(self.tributaries, minlength=self.bar_m + 1)[1:]


def make_trace(bits, lvalues, pmf, scale=1.0, scale_opt=1.0, quantizer=None):
    """Assemble an LValueTrace from (n_sym, m) bit and L-value matrices.

    Flattening is symbol-major; tributary of position p is p % bar_m + 1.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    lvalues = np.asarray(lvalues, dtype=float)
    if bits.shape != lvalues.shape or bits.ndim != 2:
        raise ValueError("bits and lvalues must be matching (n_sym, m) matrices")
    n_sym, m = bits.shape
    bar_m = pmf.bar_m
    trib = np.tile(np.arange(m) % bar_m + 1, n_sym).astype(np.uint8)
    return LValueTrace(
        bits=bits.ravel(),
        lvalues=lvalues.ravel(),
        tributaries=trib,
        m=m,
        bar_m=bar_m,
        scale=float(scale),
        scale_opt=float(scale_opt),
        priors=np.asarray(pmf.log_priors(), dtype=float),
        h_b=pmf.entropy(),
        quantizer=quantizer,
    )


def demap_to_trace(labels, y, constellation, pmf, config, channel_snr_linear=None):
    """Demap received symbols and package the result as a trace.

    ``labels`` are the transmitted label integers.  When the true channel
    SNR is supplied the trace records scale_opt = SNR/assumed_SNR, the
    rescaling that undoes the Gaussian-variance mismatch.
    """
    bits = constellation.labels_to_bits(labels)
    lam = bitwise_lvalues(y, constellation, pmf, config)
    s_o = 1.0
    if channel_snr_linear is not None:
        s_o = float(channel_snr_linear) / config.assumed_snr_linear
    return make_trace(bits, lam, pmf, scale=config.scale, scale_opt=s_o,
                      quantizer=config.quantizer)


def quantize_trace(trace, quantizer):
    """Return a copy of the trace with L-values rounded onto the lattice."""
    return replace(trace, lvalues=quantizer.apply(trace.lvalues), quantizer=quantizer)


def default_quantizer(trace, n_levels):
    """Quantizer whose saturation covers the 1 - 1e-6 quantile of |L|."""
    l_cov = float(np.quantile(np.abs(trace.lvalues), 1.0 - 1e-6))
    if l_cov <= 0 or not np.isfinite(l_cov):
        l_cov = 1.0
    step = 2.0 * l_cov / (n_levels - 1)
    return Quantizer(n_levels=n_levels, step=step)


# --- trace serialization -------------------------------------------------

_MAGIC = b"LVTR"
_VERSION = 1
_REC_DTYPE = np.dtype([("bit", "u1"), ("trib", "u1"), ("lvalue", "<f8")])


def write_trace(path, trace):
    """Write the binary trace format (little-endian, magic 'LVTR')."""
    flags = 1 if trace.quantizer is not None else 0
    head = struct.pack(
        "<4sHHQHHddd",
        _MAGIC, _VERSION, flags, trace.n, trace.m, trace.bar_m,
        trace.scale, trace.scale_opt, trace.h_b,
    )
    pri = np.asarray(trace.priors, dtype="<f8").tobytes()
    q = b""
    if trace.quantizer is not None:
        q = struct.pack("<Id", trace.quantizer.n_levels, trace.quantizer.step)
    rec = np.empty(trace.n, dtype=_REC_DTYPE)
    rec["bit"] = trace.bits
    rec["trib"] = trace.tributaries
    rec["lvalue"] = trace.lvalues
    with open(path, "wb") as f:
        f.write(head + pri + q + rec.tobytes())


def read_trace(path):
    """Read a binary trace; raises ValueError on bad magic or truncation."""
    with open(path, "rb") as f:
        data = f.read()
    head_fmt = "<4sHHQHHddd"
    head_size = struct.calcsize(head_fmt)
    if len(data) < head_size or data[:4] != _MAGIC:
        raise ValueError("not an L-value trace file (bad magic)")
    magic, version, flags, n, m, bar_m, scale, scale_opt, h_b = struct.unpack(
        head_fmt, data[:head_size]
    )
    if version != _VERSION:
        raise ValueError(f"unsupported trace version {version}")
    off = head_size
    priors = np.frombuffer(data, dtype="<f8", count=bar_m, offset=off).copy()
    off += 8 * bar_m
    quantizer = None
    if flags & 1:
        n_levels, step = struct.unpack_from("<Id", data, off)
        off += struct.calcsize("<Id")
        quantizer = Quantizer(n_levels=n_levels, step=step)
    rec = np.frombuffer(data, dtype=_REC_DTYPE, count=n, offset=off)
    if rec.size != n:
        raise ValueError("trace file truncated")
    return LValueTrace(
        bits=rec["bit"].copy(), lvalues=rec["lvalue"].copy(),
        tributaries=rec["trib"].copy(), m=m, bar_m=bar_m, scale=scale,
        scale_opt=scale_opt, priors=priors, h_b=h_b, quantizer=quantizer,
    )


def write_trace_csv(path, trace):
    """CSV twin of the binary format: '# key=value' metadata, then rows."""
    buf = io.StringIO()
    buf.write("# psbicm-trace=1\n")
    buf.write(f"# m={trace.m} bar_m={trace.bar_m}\n")
    buf.write(f"# scale={trace.scale!r} scale_opt={trace.scale_opt!r} h_b={trace.h_b!r}\n")
    buf.write("# priors=" + ",".join(repr(float(p)) for p in trace.priors) + "\n")
    if trace.quantizer is not None:
        buf.write(f"# quantizer={trace.quantizer.n_levels},{trace.quantizer.step!r}\n")
    buf.write("bit,tributary,lvalue\n")
    for b, t, l in zip(trace.bits, trace.tributaries, trace.lvalues):
        buf.write(f"{b},{t},{float(l)!r}\n")
    with open(path, "w") as f:
        f.write(buf.getvalue())


def read_trace_csv(path):
    meta = {}
    bits, tribs, lvals = [], [], []
    with open(path) as f:
        header_seen = False
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
                continue
            if not header_seen:
                if line != "bit,tributary,lvalue":
                    raise ValueError("unexpected CSV header for trace file")
                header_seen = True
                continue
            b, t, l = line.split(",")
            bits.append(int(b))
            tribs.append(int(t))
            lvals.append(float(l))
    if "psbicm-trace" not in meta:
        raise ValueError("not a trace CSV (missing psbicm-trace marker)")
    quantizer = None
    if "quantizer" in meta:
        n_levels, step = meta["quantizer"].split(",")
        quantizer = Quantizer(n_levels=int(n_levels), step=float(step))
    return LValueTrace(
        bits=np.array(bits, dtype=np.uint8),
        lvalues=np.array(lvals, dtype=float),
        tributaries=np.array(tribs, dtype=np.uint8),
        m=int(meta["m"]),
        bar_m=int(meta["bar_m"]),
        scale=float(meta["scale"]),
        scale_opt=float(meta["scale_opt"]),
        priors=np.array([float(x) for x in meta["priors"].split(",")]),
        h_b=float(meta["h_b"]),
        quantizer=quantizer,
    )


# --- consistency diagnostics --------------------------------------------

@dataclass(frozen=True)
class TributaryConsistency:
    tributary: int
    centers: np.ndarray
    log_ratio: np.ndarray      # measured ln p(l|B=0)/p(l|B=1) per kept bin
    expected: np.ndarray       # (s_o/s) * l - prior
    counts0: np.ndarray
    counts1: np.ndarray
    slope: float
    intercept: float
    coverage: float            # fraction of this tributary's samples in kept bins

    @property
    def max_deviation(self):
        if self.log_ratio.size == 0:
            return np.nan
        return float(np.max(np.abs(self.log_ratio - self.expected)))


def consistency_check(trace, n_bins=41, min_count=1000):
    """Histogram test of the L-value consistency property.

    For each tributary, bins the conditional densities of L given the
    transmitted bit and compares ln p(l|B=0)/p(l|B=1) with the straight
    line (s_o/s)*l - L^pr; a matched exact demapper follows it with slope
    s_o/s = 1.  Bins with fewer than ``min_count`` samples on either side
    are skipped and reported via ``coverage``.  The slope comes from an
    inverse-variance weighted least-squares fit.
    """
    ratio = trace.s_ratio
    results = []
    for t in range(1, trace.bar_m + 1):
        sel = trace.tributaries == t
        l = trace.lvalues[sel]
        b = trace.bits[sel]
        finite = np.isfinite(l)
        l, b = l[finite], b[finite]
        if l.size == 0:
            continue
        lo, hi = np.quantile(l, [0.001, 0.999])
        if hi <= lo:
            continue
        edges = np.linspace(lo, hi, n_bins + 1)
        c0, _ = np.histogram(l[b == 0], bins=edges)
        c1, _ = np.histogram(l[b == 1], bins=edges)
        n0 = max(int((b == 0).sum()), 1)
        n1 = max(int((b == 1).sum()), 1)
        keep = (c0 >= min_count) & (c1 >= min_count)
        centers = 0.5 * (edges[:-1] + edges[1:])[keep]
        k0 = c0[keep].astype(float)
        k1 = c1[keep].astype(float)
        log_ratio = np.log(k0 / n0) - np.log(k1 / n1)
        expected = ratio * centers - trace.priors[t - 1]
        if centers.size >= 2:
            w = k0 * k1 / (k0 + k1)   # ~1/var of the log count ratio
            wx = np.average(centers, weights=w)
            wy = np.average(log_ratio, weights=w)
            slope = np.average((centers - wx) * (log_ratio - wy), weights=w)
            slope /= np.average((centers - wx) ** 2, weights=w)
            intercept = wy - slope * wx
        else:
            slope, intercept = np.nan, np.nan
        results.append(TributaryConsistency(
            tributary=t, centers=centers, log_ratio=log_ratio, expected=expected,
            counts0=k0, counts1=k1, slope=float(slope), intercept=float(intercept),
            coverage=float((k0.sum() + k1.sum()) / l.size),
        ))
    return results
