"""Full coded chains and the ASI as a cross-channel FEC predictor.

Runs the shipped length-1008 rate-1/2 code through three very different
transceivers -- uniform 64-QAM, a per-frame-random bit mapping, and a
PAS-shaped 16-QAM chain -- and shows that the post-FEC waterfall sits at
the same ASI in all of them, even though SNR, pre-FEC BER and spectral
efficiency are completely different.  Also compares the structured and
random bit mappings at one operating point: identical pre-decoding
metrics, visibly different decoder outcomes.
"""

import numpy as np

from psbicm import reference_code, run_coded_point, square_qam
from psbicm.shaping import quantize_pmf

code = reference_code()
deg = np.bincount(code.col_degrees)
profile = ", ".join(f"{n}x deg-{d}" for d, n in enumerate(deg) if n)
print(f"shipped code: n = {code.n}, k = {code.k} (rate {code.k / code.n:.3f}), "
      f"columns {profile}\n")

FMT = ("  {snr:4.1f} dB  ASI {asi:.3f}  pre {pre:.2e}  post {post:.2e}  "
       "FER {fer:.3f}")


def sweep(title, con, pmf, snrs, frames, **kw):
    print(title)
    for snr in snrs:
        res, _ = run_coded_point(code, con, pmf, snr, frames, max_iter=100, **kw)
        print(FMT.format(snr=snr, asi=res.asi, pre=res.pre_fec_ber,
                         post=res.post_fec_ber, fer=res.frame_error_rate))
    print()


# --- the same code in three transceivers --------------------------------

con64, pmf64 = square_qam(6)
sweep("uniform 64-QAM, structured mapping (fs1):", con64, pmf64,
      (11.0, 11.5, 12.0, 12.5), 300, mapping="fs1", seed=1)
sweep("uniform 64-QAM, per-frame random mapping (r):", con64, pmf64,
      (11.0, 11.5, 12.0, 12.5), 300, mapping="r", mapping_seed=2, seed=2)

# PAS: the matcher shapes the amplitudes, the code's parity becomes the
# uniform sign bits; same decoder, ~6.5 dB less SNR, different rate
comp = quantize_pmf([0.72, 0.28], 504)
con16, pmf16 = square_qam(4, amplitude_pmf=comp.pmf)
sweep("PAS-shaped 16-QAM (fs1):", con16, pmf16,
      (4.5, 5.0, 5.5, 6.0), 300, composition=comp, mapping="fs1", seed=3)

print("in every chain the decoder falls off its cliff as the ASI passes"
      " ~0.60-0.64:\nthe FEC only sees L-values, so the ASI predicts the"
      " waterfall regardless of\nconstellation, shaping or mapping.\n")

# --- mappings move the waterfall, not the pre-decoding metrics ----------

print("uniform 64-QAM @ 11.5 dB, 400 codewords per mapping:")
for kind in ("fs1", "fs2", "fu", "r"):
    res, _ = run_coded_point(code, con64, pmf64, 11.5, 400, mapping=kind,
                             mapping_seed=5, seed=4, max_iter=100)
    print(f"  {kind:3s}  pre {res.pre_fec_ber:.4e}  ASI {res.asi:.4f}  "
          f"post {res.post_fec_ber:.2e}  FER {res.frame_error_rate:.3f}")
print("\npre-FEC BER and ASI are mapping-invariant (same L-value multiset);"
      "\nonly the decoder outcome depends on which tributary feeds which"
      " code bit.")
