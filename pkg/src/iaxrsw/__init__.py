"""IAX/RSW media gateway toolkit: wire codecs, translation, simulation."""

__version__ = "0.1.0"

from .framing import GSM_PROFILE, CodecProfile, Side, get_profile
from .packets import IaxMiniHeader, MediaPacket, RtpHeader
from .translator import SessionBinding, TranslationBuffer, iax_to_rsw, open_binding, rsw_to_iax

__all__ = [
    "__version__",
    "CodecProfile",
    "GSM_PROFILE",
    "IaxMiniHeader",
    "MediaPacket",
    "RtpHeader",
    "SessionBinding",
    "Side",
    "TranslationBuffer",
    "get_profile",
    "iax_to_rsw",
    "open_binding",
    "rsw_to_iax",
]
