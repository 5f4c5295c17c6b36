"""Figures of merit for a teleporter: added noise, fidelity, T and V measures."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .circuits import RunResult
from .modes import BogoliubovMode, QuadratureStats, joint_stats, quadrature_stats

__all__ = [
    "TeleportReport",
    "added_noise",
    "coherent_fidelity",
    "gaussian_overlap",
    "transfer_coefficients",
    "conditional_variance",
    "is_classical_channel",
    "report",
    "CLASSICAL_FIDELITY",
]

CLASSICAL_FIDELITY = 0.5


def added_noise(out_stats: QuadratureStats, in_stats: QuadratureStats, gain: float = 1.0
                ) -> tuple[float, float]:
    g2 = gain * gain
    return (out_stats.var_plus - g2 * in_stats.var_plus,
            out_stats.var_minus - g2 * in_stats.var_minus)


def gaussian_overlap(mean_diff, cov) -> float:
    """Overlap <alpha|rho|alpha> of a single-mode Gaussian state with a coherent state.

    Parameters
    ----------
    mean_diff : array_like, shape (2,)
        Quadrature means of the state minus those of the coherent state.
    cov : array_like, shape (2, 2)
        Symmetrised (X+, X-) covariance matrix, vacuum = identity.
    """
    sigma = np.asarray(cov, dtype=float) + np.eye(2)
    d = np.asarray(mean_diff, dtype=float)
    expo = -0.5 * d @ np.linalg.solve(sigma, d)
    return float(2.0 / np.sqrt(np.linalg.det(sigma)) * np.exp(expo))


def coherent_fidelity(var_plus: float, var_minus: float, gain: float = 1.0,
                      mean_in: tuple[float, float] = (0.0, 0.0)) -> float:
    """Fidelity of the teleported state with the coherent input.

    ``var_plus``/``var_minus`` are the output quadrature variances, ``mean_in``
    the input's quadrature means. The output mean is taken as ``gain * mean_in``.
    """
    g1 = gain - 1.0
    mp, mm = mean_in
    expo = (g1 * g1 * mp * mp / (2.0 * (1.0 + var_plus))
            + g1 * g1 * mm * mm / (2.0 * (1.0 + var_minus)))
    return float(2.0 / np.sqrt((1.0 + var_plus) * (1.0 + var_minus)) * np.exp(-expo))


def transfer_coefficients(in_stats: QuadratureStats, out_stats: QuadratureStats,
                          gain: float = 1.0) -> tuple[float, float]:
    """Signal-to-noise transfer T = g^2 Var_in / Var_out for each quadrature."""
    g2 = gain * gain
    return (g2 * in_stats.var_plus / out_stats.var_plus,
            g2 * in_stats.var_minus / out_stats.var_minus)


def conditional_variance(mode_in: BogoliubovMode, mode_out: BogoliubovMode
                         ) -> tuple[float, float]:
    """Output variance left once the input quadrature is known."""
    j = joint_stats(mode_in, mode_out)
    vp = j.var2_plus * (1.0 - j.cov_plus ** 2 / (j.var1_plus * j.var2_plus))
    vm = j.var2_minus * (1.0 - j.cov_minus ** 2 / (j.var1_minus * j.var2_minus))
    return vp, vm


def is_classical_channel(mode: BogoliubovMode, threshold: float = 100.0) -> bool:
    """A photocurrent (zero commutator) is classical by construction; a field
    must have both quadrature variances at or above ``threshold``."""
    if abs(mode.commutator_norm) < 1e-10:
        return True
    return quadrature_stats(mode).is_classical(threshold)


@dataclass(frozen=True)
class TeleportReport:
    signal_gain: float
    added_noise_plus: float
    added_noise_minus: float
    fidelity: float
    transfer_plus: float
    transfer_minus: float
    conditional_variance_plus: float
    conditional_variance_minus: float
    classical_channel_flag: bool

    @property
    def unity_gain(self) -> bool:
        return abs(self.signal_gain - 1.0) < 1e-12

    @property
    def beats_classical_fidelity(self) -> bool:
        return self.fidelity > CLASSICAL_FIDELITY + 1e-12

    @property
    def transfer_sum(self) -> float:
        return self.transfer_plus + self.transfer_minus

    @property
    def beats_classical_transfer(self) -> bool:
        return self.transfer_sum > 1.0 + 1e-12

    def as_dict(self) -> dict:
        d = asdict(self)
        d["transfer_sum"] = self.transfer_sum
        d["unity_gain"] = self.unity_gain
        d["beats_classical_fidelity"] = self.beats_classical_fidelity
        d["beats_classical_transfer"] = self.beats_classical_transfer
        return d


def report(result: RunResult, threshold: float = 100.0) -> TeleportReport:
    """Summarise a circuit run.

    Signal gain is the magnitude of the output's coefficient on the signal input.
    The fidelity uses the full output covariance and the actual output mean.
    """
    a_in, a_out = result.input, result.output
    signal = result.circuit.signal
    g = abs(a_out.coefficient(signal)[0])
    s_in, s_out = quadrature_stats(a_in), quadrature_stats(a_out)
    n_p, n_m = added_noise(s_out, s_in, g)
    t_p, t_m = transfer_coefficients(s_in, s_out, g)
    v_p, v_m = conditional_variance(a_in, a_out)
    cov = [[s_out.var_plus, s_out.cov_pm], [s_out.cov_pm, s_out.var_minus]]
    diff = (s_out.mean_plus - s_in.mean_plus, s_out.mean_minus - s_in.mean_minus)
    chan = result.channel
    return TeleportReport(
        signal_gain=g,
        added_noise_plus=n_p,
        added_noise_minus=n_m,
        fidelity=gaussian_overlap(diff, cov),
        transfer_plus=t_p,
        transfer_minus=t_m,
        conditional_variance_plus=v_p,
        conditional_variance_minus=v_m,
        classical_channel_flag=bool(chan is not None and is_classical_channel(chan, threshold)),
    )
