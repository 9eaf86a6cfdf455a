"""LFMCW base-band echo synthesis.

Each PRI freezes the target delay (stop-and-hop) and emits the closed-form
base-band beat signal; node echoes, a static wall return and complex white
Gaussian noise sum into the frame.  The noise generator is seeded per frame
and split per PRI, so serial and parallel synthesis agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mdcl.activities import ActivitySpec, MotionState
from mdcl.motion import node_distance
from mdcl.scene import ALL_NODES, NodeId, SceneParams

C_LIGHT = 299_792_458.0


class RadarConfigError(ValueError):
    pass


_DEFAULT_REFLECTIVITY = {
    NodeId.HEAD: 0.6,
    NodeId.TORSO: 1.0,
    NodeId.HAND_L: 0.3,
    NodeId.HAND_R: 0.3,
    NodeId.FOOT_L: 0.3,
    NodeId.FOOT_R: 0.3,
}


@dataclass(frozen=True)
class RadarConfig:
    """LFMCW radar parameters; defaults follow the uniform system table."""

    carrier: float = 1.5e9           # fc, Hz
    bandwidth: float = 2.0e9         # B, Hz
    pri: float = 4.0 / 1024.0        # Ts, seconds
    slow_samples: int = 1024         # M
    fast_samples: int = 1024         # N
    tx_amplitude: float = 1.0
    reflectivity: dict[NodeId, float] = field(
        default_factory=lambda: dict(_DEFAULT_REFLECTIVITY))
    wall_reflectivity: float = 10.0
    wall_range: float = 0.5          # front face one-way distance, meters
    max_range: float = 5.0           # range-axis crop used downstream

    def __post_init__(self):
        if self.carrier <= 0:
            raise RadarConfigError(f"radar.carrier must be > 0, got {self.carrier}")
        if self.bandwidth <= 0:
            raise RadarConfigError(f"radar.bandwidth must be > 0, got {self.bandwidth}")
        if self.pri <= 0:
            raise RadarConfigError(f"radar.pri must be > 0, got {self.pri}")
        if self.slow_samples < 2 or self.fast_samples < 2:
            raise RadarConfigError("need at least 2 slow and fast samples")

    @property
    def chirp_rate(self) -> float:
        """mu = B / Ts, Hz/s."""
        return self.bandwidth / self.pri

    @property
    def fast_rate(self) -> float:
        return self.fast_samples / self.pri

    @property
    def window(self) -> float:
        return self.pri * self.slow_samples

    @property
    def range_bin(self) -> float:
        """Range per beat-spectrum bin: c / 2B."""
        return C_LIGHT / (2.0 * self.bandwidth)

    def beat_bin(self, one_way_range: float) -> float:
        """Fractional beat-spectrum bin of a scatterer at the given range."""
        return one_way_range / self.range_bin


@dataclass(frozen=True)
class NoiseConfig:
    """Additive complex white Gaussian noise at a target SNR.

    ``target_snr`` is the ratio of summed node-echo power to noise power in
    dB; ``None`` disables noise.  When the frame carries no node echo (empty
    scene) the noise power falls back to 10^(-snr/10) of a unit reference.
    """

    target_snr: float | None = -16.0
    seed: int = 0


@dataclass
class EchoFrame:
    """Complex base-band data matrix, slow time (rows) x fast time (cols)."""

    data: np.ndarray
    config: RadarConfig
    seed: int | None = None

    def __post_init__(self):
        m, n = self.data.shape
        if (m, n) != (self.config.slow_samples, self.config.fast_samples):
            raise ValueError("frame shape does not match the radar config")
        if not np.all(np.isfinite(self.data.view(float))):
            raise ValueError("frame contains non-finite samples")


def _beat_rows(cfg: RadarConfig, amplitude: float, tau: np.ndarray) -> np.ndarray:
    """Base-band beat signal rows for per-PRI delays ``tau`` (shape (M,))."""
    mu = cfg.chirp_rate
    if np.any(tau >= cfg.pri):
        raise RadarConfigError(
            "delay exceeds the PRI: scatterer outside the unambiguous range")
    t_fast = np.arange(cfg.fast_samples) / cfg.fast_rate   # within-PRI time
    phase = (cfg.carrier * tau - 0.5 * mu * tau * tau)[:, None] \
        + mu * tau[:, None] * t_fast[None, :]
    return amplitude * np.exp(2j * np.pi * phase)


def node_delays(node: NodeId, p: SceneParams, act: ActivitySpec,
                cfg: RadarConfig) -> np.ndarray:
    """Stop-and-hop two-way delays, one per PRI."""
    t_slow = np.arange(cfg.slow_samples) * cfg.pri
    return 2.0 * node_distance(node, p, act, t_slow) / C_LIGHT


def synth_node_echo(node: NodeId, p: SceneParams, act: ActivitySpec,
                    cfg: RadarConfig, m: int) -> np.ndarray:
    """Fast-time base-band row of one node in PRI ``m``."""
    if not 0 <= m < cfg.slow_samples:
        raise ValueError(f"PRI index {m} outside [0, {cfg.slow_samples})")
    eta = cfg.reflectivity.get(node, 0.0)
    amp = 0.5 * eta * cfg.tx_amplitude ** 2
    if amp == 0.0 or act.node(node).state is MotionState.INACTIVE:
        return np.zeros(cfg.fast_samples, dtype=complex)
    tau = 2.0 * node_distance(node, p, act, np.array([m * cfg.pri])) / C_LIGHT
    return _beat_rows(cfg, amp, tau)[0]


def wall_clutter(cfg: RadarConfig, p: SceneParams) -> np.ndarray:
    """Stationary wall return: one fast-time row, identical across PRIs."""
    if cfg.wall_reflectivity == 0.0:
        return np.zeros(cfg.fast_samples, dtype=complex)
    tau = np.array([2.0 * cfg.wall_range / C_LIGHT])
    amp = 0.5 * cfg.wall_reflectivity * cfg.tx_amplitude ** 2
    return _beat_rows(cfg, amp, tau)[0]


def _node_sum(p: SceneParams, act: ActivitySpec, cfg: RadarConfig) -> np.ndarray:
    total = np.zeros((cfg.slow_samples, cfg.fast_samples), dtype=complex)
    for node in ALL_NODES:
        eta = cfg.reflectivity.get(node, 0.0)
        if eta == 0.0 or act.node(node).state is MotionState.INACTIVE:
            continue
        tau = node_delays(node, p, act, cfg)
        total += _beat_rows(cfg, 0.5 * eta * cfg.tx_amplitude ** 2, tau)
    return total


def _noise_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Unit-power complex Gaussian noise, split deterministically per PRI."""
    children = np.random.SeedSequence(seed).spawn(m)
    out = np.empty((m, n), dtype=complex)
    for i, child in enumerate(children):
        rng = np.random.Generator(np.random.Philox(child))
        block = rng.standard_normal(2 * n)
        out[i] = (block[0::2] + 1j * block[1::2]) / np.sqrt(2.0)
    return out


def synth_frame(p: SceneParams, act: ActivitySpec, cfg: RadarConfig,
                noise: NoiseConfig | None = None) -> EchoFrame:
    """Full frame: node echoes + wall clutter + noise at the target SNR."""
    signal = _node_sum(p, act, cfg)
    data = signal + wall_clutter(cfg, p)[None, :]
    seed = None
    if noise is not None and noise.target_snr is not None:
        seed = noise.seed
        p_sig = float(np.mean(np.abs(signal) ** 2))
        reference = p_sig if p_sig > 0 else 1.0
        p_noise = reference * 10.0 ** (-noise.target_snr / 10.0)
        data = data + np.sqrt(p_noise) * _noise_matrix(
            cfg.slow_samples, cfg.fast_samples, noise.seed)
    return EchoFrame(data=data, config=cfg, seed=seed)
