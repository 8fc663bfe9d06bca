"""Secure RFPA frequency-hopping ISAC waveform simulation."""

from .config import WaveformConfig, default_config, load_config, validate_config
from .errors import RfpaError

__version__ = "0.1.0"

__all__ = ["RfpaError", "WaveformConfig", "default_config", "load_config", "validate_config", "__version__"]
