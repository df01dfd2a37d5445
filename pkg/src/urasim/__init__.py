"""Link-level simulator for SPARC-LDPC coded MIMO unsourced random access.

A transmitter splits each user's message into a compressed-sensing part
(codeword selection from a shared complex dictionary) and an LDPC-coded,
BPSK-modulated, user-specifically interleaved part.  The receiver runs an
AMP sparse-recovery stage to detect active codewords and estimate MIMO
channels, then a joint belief-propagation decoder with successive
interference cancellation to recover the remaining bits.  A Monte Carlo
harness sweeps operating points and reports misdetection / false-alarm
rates.
"""

__version__ = "0.1.0"

from .config import SimConfig, DerivedEnergy, build_config, derive_energy, mix_seed

__all__ = [
    "SimConfig",
    "DerivedEnergy",
    "build_config",
    "derive_energy",
    "mix_seed",
    "__version__",
]
