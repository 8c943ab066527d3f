"""Reference strategies built from the same allocation engine.

``lisa-dn`` runs the narrowband algorithm on each subcarrier separately with
a per-subcarrier budget ``P_tx / L``; it ignores that a real analog network
is frequency flat, so it serves as an upper benchmark. ``lisa-dw`` and
``lisa-hw`` are the wideband algorithm in digital and hybrid mode.
"""

from dataclasses import replace

import numpy as np

from .lisa import LisaOptions, run_lisa
from .metrics import RateReport

__all__ = ["lisa_per_subcarrier", "lisa_digital_wideband",
           "lisa_hybrid_wideband", "METHODS", "run_method"]


def lisa_per_subcarrier(channels, config, nu=0.0, return_solutions=False):
    """Narrowband LISA on every subcarrier, budget ``P_tx / L`` each.

    Returns
    -------
    RateReport, or ``(RateReport, list of Solution)`` with ``return_solutions``.
    """
    channels = np.asarray(channels)
    K, L = channels.shape[:2]
    sub_cfg = replace(config, n_subcarriers=1, p_tx=config.p_tx / L)
    opts = LisaOptions(mode="digital", nu=nu)
    per = np.zeros((K, L))
    sols = []
    for ell in range(L):
        sol = run_lisa(channels[:, ell:ell + 1], sub_cfg, opts)
        sols.append(sol)
        for j, s in enumerate(sol.streams):
            per[s.user, ell] += np.log2(1.0 + sol.gains[j, 0] ** 2
                                        * sol.powers[j, 0] / config.noise_var)
    per_user = per.sum(axis=1) / L
    report = RateReport(per_user, per, float(per_user.sum()))
    return (report, sols) if return_solutions else report


def lisa_digital_wideband(channels, config, nu=0.0, n_subbands=None):
    return run_lisa(channels, config,
                    LisaOptions(mode="digital", nu=nu, n_subbands=n_subbands))


def lisa_hybrid_wideband(channels, config, nu=0.0, n_subbands=None,
                         ps_bits=None):
    return run_lisa(channels, config,
                    LisaOptions(mode="hybrid", nu=nu, n_subbands=n_subbands,
                                ps_bits=ps_bits))


METHODS = ("lisa-dn", "lisa-dw", "lisa-hw")


def run_method(name, channels, config, nu=0.0, n_subbands=None, ps_bits=None):
    """Run a named method; returns ``(sum_rate, streams, slots_off, solution)``.

    ``solution`` is ``None`` for ``lisa-dn``, whose streams differ per
    subcarrier; ``streams`` then counts the largest per-subcarrier allocation.
    """
    if name == "lisa-dn":
        report, sols = lisa_per_subcarrier(channels, config, nu,
                                           return_solutions=True)
        return report.sum_rate, max(s.n_streams for s in sols), 0, None
    if name == "lisa-dw":
        sol = lisa_digital_wideband(channels, config, nu, n_subbands)
    elif name == "lisa-hw":
        sol = lisa_hybrid_wideband(channels, config, nu, n_subbands, ps_bits)
    else:
        raise ValueError(f"unknown method {name!r}; expected one of {METHODS}")
    return sol.sum_rate, sol.n_streams, sol.subcarriers_off(), sol
