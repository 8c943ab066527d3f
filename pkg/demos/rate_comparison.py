"""Average sum rate of the per-subcarrier, digital and hybrid variants.

Also shows the effect of phase-shifter resolution and of running the
selection on a few subbands instead of every subcarrier.
"""
import numpy as np

from hlisa import SystemConfig, channel_tensor, generate_realization, trial_seed
from hlisa.baselines import run_method

cfg = SystemConfig(n_tx=32, n_rx=4, n_users=4, n_subcarriers=16, n_paths=4,
                   rf_tx=4, rf_rx=2, bandwidth_hz=800e6)
trials = 20
variants = [("lisa-dn", {}), ("lisa-dw", {}), ("lisa-hw", {}),
            ("lisa-hw", {"ps_bits": 3}), ("lisa-hw", {"ps_bits": 2}),
            ("lisa-hw", {"n_subbands": 3})]

channels = [channel_tensor(generate_realization(cfg, trial_seed(11, t)))
            for t in range(trials)]
for snr in (0.0, 10.0):
    c = cfg.with_snr_db(snr)
    print(f"SNR {snr:g} dB")
    for name, kw in variants:
        rates = [run_method(name, H, c, **kw)[0] for H in channels]
        tag = name + "".join(f" {k}={v}" for k, v in kw.items())
        print(f"  {tag:<24s} {np.mean(rates):7.3f} bit/s/Hz")
