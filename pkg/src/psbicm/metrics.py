"""Decoding-aware performance metrics computed from L-value traces.

All estimators are Monte-Carlo sample means over a trace.  The family is
built around one scalar function, the soft bit cost

    f(x) = log2(1 + exp(-x)),

evaluated on (rescaled) asymmetric L-values ``l_a = (-1)^bit * L``:

* per-tributary means of f estimate the conditional entropies H(B_i|Y);
* ``1 - mean`` over all positions is the asymmetric information ASI;
* ``m * mean`` at a decoder scaling s_d is the decoding uncertainty
  U(s_d), giving the achievable FEC code rate [1 - U*/m]^+;
* subtracting the summed conditional entropies from H(B) gives the
  bit-metric-decoding rate Delta_H, which coincides with the GMI of the
  bitwise auxiliary channel when evaluated at the trace's own scaling.

All of these route through one reduction helper, so the algebraic
identities between them (achievable-FEC-rate = ASI at s_d = s_o/s,
fixed-scaling GMI = Delta_H) hold exactly on a common trace, not just
statistically.

Scaling-parameter searches (the s of the GMI, the s_d of the
uncertainty) use golden-section on [1e-3, 1e2] with absolute tolerance
1e-4; GMI(s) is concave and U(s_d) convex, so a bracket-interior argmax
is trustworthy and boundary hits are flagged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields

import numpy as np

from .demapper import quantize_trace

_LN2 = np.log(2.0)
SEARCH_LO = 1e-3
SEARCH_HI = 1e2
SEARCH_XTOL = 1e-4
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def soft_bit_cost(x):
    """log2(1 + exp(-x)), overflow/underflow safe for any real x."""
    return np.logaddexp(0.0, -np.asarray(x, dtype=float)) / _LN2


def _mean_cost_by_tributary(x_asym, tributaries, bar_m):
    # single shared reduction: every estimator that must satisfy an exact
    # cross-identity computes its means through this path
    f = soft_bit_cost(x_asym)
    sums = np.bincount(tributaries, weights=f, minlength=bar_m + 1)[1:]
    counts = np.bincount(tributaries, minlength=bar_m + 1)[1:]
    if np.any(counts == 0):
        raise ValueError("trace has empty tributaries")
    return sums / counts


def _uncertainty(trace, s_d):
    cond = _mean_cost_by_tributary(s_d * trace.asymmetric(),
                                   trace.tributaries, trace.bar_m)
    return (trace.m / trace.bar_m) * float(cond.sum())


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a 1-D golden-section scaling search."""

    x: float
    fx: float
    at_boundary: bool


def golden_section_max(f, lo=SEARCH_LO, hi=SEARCH_HI, xtol=SEARCH_XTOL):
    """Maximize a unimodal scalar function on [lo, hi].

    Classic two-point golden-section bracket shrink; ~30 evaluations for
    the default bracket and tolerance.  ``at_boundary`` flags an argmax
    within 2*xtol of either end (bracket exhausted).
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return SearchResult(x=x, fx=f(x), at_boundary=(x - lo < 2 * xtol or hi - x < 2 * xtol))


def golden_section_min(f, lo=SEARCH_LO, hi=SEARCH_HI, xtol=SEARCH_XTOL):
    r = golden_section_max(lambda x: -f(x), lo, hi, xtol)
    return SearchResult(x=r.x, fx=-r.fx, at_boundary=r.at_boundary)


def pre_fec_ber(trace):
    """Hard-decision bit error rate of sign(L); L = 0 counts half."""
    la = trace.asymmetric()
    return float(np.mean((la < 0) + 0.5 * (la == 0)))


def asi_mc(trace, s_ratio=None):
    """Monte-Carlo asymmetric information 1 - E[f(s_ratio * l_a)].

    ``s_ratio`` defaults to the trace's s_o/s, which on SNR-mismatched
    traces restores the matched value; pass 1.0 to evaluate the L-values
    exactly as the decoder would see them.  The expectation weights
    tributaries equally, which for the equal-occupancy traces produced
    here is the plain pooled mean.
    """
    if s_ratio is None:
        s_ratio = trace.s_ratio
    if not s_ratio > 0:
        raise ValueError("s_ratio must be positive")
    return 1.0 - _uncertainty(trace, s_ratio) / trace.m


def tributary_conditional_entropies(trace, s_ratio=1.0):
    """Per-tributary estimates of H(B_i | Y), in bits.

    Mean soft bit cost of the (optionally rescaled) asymmetric L-values,
    grouped by tributary; shape (bar_m,).
    """
    return _mean_cost_by_tributary(s_ratio * trace.asymmetric(),
                                   trace.tributaries, trace.bar_m)


@dataclass(frozen=True)
class BmdResult:
    """Bit-metric-decoding rate family, bits per 2-D symbol."""

    delta_h: float          # H(B) - sum_i H(B_i|Y), no clipping
    r_bmd: float            # [delta_h]^+
    r_bmd_net: float        # delta_h - shaping rate loss
    normalized_air: float   # r_bmd / H(B)


def bmd_rate(cond_entropies, h_b, m, r_loss=0.0):
    """Combine conditional-entropy estimates into the BMD rate family.

    ``cond_entropies`` holds one value per tributary; each tributary
    covers m/bar_m label positions, so the summed conditional entropy is
    scaled accordingly before subtracting from the symbol entropy h_b.
    """
    cond = np.asarray(cond_entropies, dtype=float)
    delta_h = h_b - (m / cond.size) * float(cond.sum())
    r_bmd = max(delta_h, 0.0)
    return BmdResult(
        delta_h=delta_h,
        r_bmd=r_bmd,
        r_bmd_net=delta_h - r_loss,
        normalized_air=r_bmd / h_b if h_b > 0 else 0.0,
    )


@dataclass(frozen=True)
class GmiResult:
    gmi_bits: float
    scale: float            # extrinsic scaling s achieving the reported GMI
    at_boundary: bool


def gmi_from_trace(trace, s="optimize"):
    """Generalized mutual information of the trace's auxiliary channel.

    The stored L-values are L^pr + s0*L^ex with s0 = trace.scale; the
    decomposition is inverted so GMI(s) can be evaluated at any extrinsic
    scaling s, and with ``s="optimize"`` the concave GMI(s) is maximized
    by golden-section search.  Evaluating at s = s0 needs no inversion
    and reproduces H(B) - sum_i H(B_i|Y) on the trace exactly.
    """
    if s != "optimize":
        s = float(s)
        if s < 0:
            raise ValueError("s must be >= 0")
        if s == trace.scale:
            cond = _mean_cost_by_tributary(trace.asymmetric(),
                                           trace.tributaries, trace.bar_m)
            g0 = trace.h_b - (trace.m / cond.size) * float(cond.sum())
            return GmiResult(gmi_bits=g0, scale=s, at_boundary=False)
    if trace.scale <= 0:
        raise ValueError("trace scale must be positive to rescale extrinsics")
    sign = np.where(trace.bits == 0, 1.0, -1.0)
    pri = trace.priors[trace.tributaries - 1]
    prior_a = sign * pri
    extr_a = sign * (trace.lvalues - pri) / trace.scale
    ppt = trace.m / trace.bar_m

    def g(si):
        cond = _mean_cost_by_tributary(prior_a + si * extr_a,
                                       trace.tributaries, trace.bar_m)
        return trace.h_b - ppt * float(cond.sum())

    if s == "optimize":
        r = golden_section_max(g)
        return GmiResult(gmi_bits=r.fx, scale=r.x, at_boundary=r.at_boundary)
    return GmiResult(gmi_bits=g(s), scale=s, at_boundary=False)


def gmi(bits, y, constellation, pmf, assumed_snr_linear, s="optimize"):
    """GMI from transmitted bits (n_sym, m) and received symbols.

    Demaps ``y`` under the assumed-SNR auxiliary channel, assembles a
    matched unit-scale trace and delegates to ``gmi_from_trace``.
    """
    from .demapper import extrinsic_lvalues, make_trace

    lex = extrinsic_lvalues(y, constellation, pmf, assumed_snr_linear)
    pri = pmf.log_priors()[np.arange(constellation.m) % pmf.bar_m]
    trace = make_trace(bits, pri + lex, pmf)
    return gmi_from_trace(trace, s=s)


def ngmi(gmi_bits, h_b, m):
    """Normalized GMI 1 - (H(B) - GMI)/m (the achievable binary code rate)."""
    return 1.0 - (h_b - gmi_bits) / m


@dataclass(frozen=True)
class RfecResult:
    uncertainty: float      # U at the reported decoder scaling
    r_fec_star: float       # [1 - U/m]^+
    scale: float            # s_d
    at_boundary: bool


def r_fec_star(trace, s_d="optimize"):
    """Achievable FEC code rate from the decoder's input L-values.

    U(s_d) is the mean soft bit cost of the s_d-scaled asymmetric
    L-values per label position, times m; the convex U is minimized over
    s_d unless a fixed value is given.  R*_fec = [1 - U*/m]^+, and at
    s_d = s_o/s it equals the (mismatch-corrected) ASI exactly.
    """
    if s_d == "optimize":
        r = golden_section_min(lambda sd: _uncertainty(trace, sd))
        u_star, sd, boundary = r.fx, r.x, r.at_boundary
    else:
        if not s_d > 0:
            raise ValueError("s_d must be positive")
        sd = float(s_d)
        u_star, boundary = _uncertainty(trace, sd), False
    return RfecResult(
        uncertainty=u_star,
        r_fec_star=max(1.0 - u_star / trace.m, 0.0),
        scale=sd,
        at_boundary=boundary,
    )


def asi_floor(pmf):
    """Low-SNR limit of the ASI, from the priors alone.

    With an uninformative channel the L-values collapse onto the prior
    offsets, and the expectation has the closed form
    1 - (1/bar_m) sum_i sum_b P_i(b) f((-1)^b L_i^pr).
    """
    tm = pmf.tributary_marginals()
    with np.errstate(divide="ignore"):
        pri = np.log(tm[:, 0]) - np.log(tm[:, 1])
    total = 0.0
    for t in range(tm.shape[0]):
        total += tm[t, 0] * float(soft_bit_cost(pri[t]))
        total += tm[t, 1] * float(soft_bit_cost(-pri[t]))
    return 1.0 - total / tm.shape[0]


@dataclass(frozen=True)
class QuantizedAsi:
    """Entropy-based ASI of a quantized trace plus its MC cross-check."""

    asi: float                    # 1 + H(|L_a|) - H(L_a) from the lattice pmf
    asi_mc: float                 # half-step-corrected Monte-Carlo form
    negative_saturation_mass: float
    lattice: np.ndarray
    pmf: np.ndarray


def asi_hist(trace, s_ratio=None):
    """ASI from the empirical pmf of quantized asymmetric L-values.

    Requires a quantized trace.  The entropy form 1 + H(|L_a|) - H(L_a)
    needs no scaling knowledge; the companion Monte-Carlo form rescales
    by the trace's s_o/s (or ``s_ratio``) and applies the half-step
    correction cosh(step/2), and agrees closely once the lattice is
    fine.  With two levels the entropy form reduces to one minus the
    binary entropy of the hard-decision error rate.  A warning is raised
    when the wrong-sign saturation bin holds more than 1e-3 probability
    (the lattice is then too coarse or too narrow to be trusted).
    """
    q = trace.quantizer
    if q is None:
        raise ValueError("asi_hist needs a quantized trace")
    if s_ratio is None:
        s_ratio = trace.s_ratio
    la = trace.asymmetric()
    p = np.bincount(q.indices(la), minlength=q.n_levels) / la.size
    half = q.n_levels // 2

    def ent(x):
        x = x[x > 0]
        return float(-(x * np.log2(x)).sum())

    neg_sat = float(p[0])
    if neg_sat > 1e-3:
        warnings.warn(
            f"wrong-sign saturation mass {neg_sat:.2e} > 1e-3; "
            "quantized ASI is unreliable at this lattice",
            stacklevel=2,
        )
    corr = np.cosh(q.step * s_ratio / 2.0)
    mc = 1.0 - float(np.mean(np.log2(1.0 + np.exp(-s_ratio * la) * corr)))
    return QuantizedAsi(
        asi=1.0 + ent(p[half:] + p[half - 1 :: -1]) - ent(p),
        asi_mc=mc,
        negative_saturation_mass=neg_sat,
        lattice=q.lattice,
        pmf=p,
    )


@dataclass(frozen=True)
class RateAccounting:
    info_rate: float        # H(B) - R_loss - (1 - R_c)*m, bits per 2-D
    code_rate_bound: float  # smallest workable R_c given the channel


def rate_accounting(h_b, r_loss, r_c, m, r_bmd_net):
    """Net information rate and the code-rate bound it implies.

    ``info_rate`` charges the FEC redundancy and shaping rate loss
    against the symbol entropy; ``code_rate_bound`` is the code rate at
    which the info rate would just reach the net BMD rate.
    """
    info = h_b - r_loss - (1.0 - r_c) * m
    bound = 1.0 - (h_b - r_loss - r_bmd_net) / m
    return RateAccounting(info_rate=info, code_rate_bound=bound)


# --- aggregated report ---------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    """All pre-decoding metrics for one simulation point.

    Quantized-ASI and rate-accounting fields are NaN when no quantizer or
    code rate applies.  Serialized as JSON or one fixed-schema CSV row.
    """

    pre_fec_ber: float
    gmi_bits: float
    gmi_scale: float
    ngmi: float
    delta_h: float
    bmd_rate: float
    bmd_rate_net: float
    normalized_air: float
    asi: float
    asi_quantized: float
    uncertainty: float
    r_fec_star: float
    decoder_scale: float
    info_rate: float
    code_rate_bound: float

    SCHEMA = "psbicm-metrics-v1"

    @classmethod
    def csv_header(cls):
        return ",".join(f.name for f in fields(cls))

    def csv_row(self):
        return ",".join(repr(float(getattr(self, f.name))) for f in fields(self))

    def to_json(self):
        d = {f.name: float(getattr(self, f.name)) for f in fields(self)}
        d["schema"] = self.SCHEMA
        return d


def compute_report(trace, quantizer=None, r_c=None, r_loss=0.0):
    """Evaluate the full metric family on one trace.

    ``quantizer`` adds the histogram ASI (applied to a copy if the trace
    is not already on that lattice); ``r_c`` enables the rate accounting.
    """
    g = gmi_from_trace(trace, s="optimize")
    cond = tributary_conditional_entropies(trace, s_ratio=1.0)
    bmd = bmd_rate(cond, trace.h_b, trace.m, r_loss=r_loss)
    rf = r_fec_star(trace, s_d="optimize")
    if quantizer is not None:
        qt = trace if trace.quantizer == quantizer else quantize_trace(trace, quantizer)
        asi_q = asi_hist(qt).asi
    elif trace.quantizer is not None:
        asi_q = asi_hist(trace).asi
    else:
        asi_q = float("nan")
    if r_c is not None:
        acc = rate_accounting(trace.h_b, r_loss, r_c, trace.m, bmd.r_bmd_net)
        info_rate, bound = acc.info_rate, acc.code_rate_bound
    else:
        info_rate, bound = float("nan"), float("nan")
    return MetricReport(
        pre_fec_ber=pre_fec_ber(trace),
        gmi_bits=g.gmi_bits,
        gmi_scale=g.scale,
        ngmi=ngmi(g.gmi_bits, trace.h_b, trace.m),
        delta_h=bmd.delta_h,
        bmd_rate=bmd.r_bmd,
        bmd_rate_net=bmd.r_bmd_net,
        normalized_air=bmd.normalized_air,
        asi=asi_mc(trace),
        asi_quantized=asi_q,
        uncertainty=rf.uncertainty,
        r_fec_star=rf.r_fec_star,
        decoder_scale=rf.scale,
        info_rate=info_rate,
        code_rate_bound=bound,
    )
