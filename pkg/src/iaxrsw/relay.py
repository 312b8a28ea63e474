"""Live UDP relay: one socket per side, translate and forward.

Datagrams arriving on the IAX socket are parsed as mini frames,
translated, and sent out the RSW socket toward the configured RSW peer;
the reverse path mirrors it. Unparseable or untranslatable datagrams are
counted and dropped, never forwarded. A single selectors loop runs in a
daemon thread so callers can poll stats or stop without blocking.
"""

from __future__ import annotations

import selectors
import socket
import threading
from dataclasses import dataclass, field

from .framing import CodecProfile, get_profile
from .packets import (
    FrameKind,
    MediaPacket,
    PacketError,
    classify_iax_datagram,
    parse_mini,
    parse_rtp,
    serialize_mini,
    serialize_rtp,
)
from .translator import TranslationError, iax_to_rsw, open_binding, rsw_to_iax

_POLL_INTERVAL_S = 0.05
_RECV_BUFFER = 2048


class RelayError(RuntimeError):
    pass


class BindFailureError(RelayError):
    pass


class NotRunningError(RelayError):
    pass


class RelayConflictError(RelayError):
    pass


class InvalidRelayConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RelayConfig:
    iax_bind: tuple[str, int] = ("127.0.0.1", 0)
    rsw_bind: tuple[str, int] = ("127.0.0.1", 0)
    iax_peer: tuple[str, int] | None = None
    rsw_peer: tuple[str, int] | None = None
    call_number: int = 1
    ssrc_seed: int = 1
    codec: str = "gsm"

    def validate(self) -> None:
        for label, endpoint in (("iax_bind", self.iax_bind), ("rsw_bind", self.rsw_bind)):
            _check_endpoint(label, endpoint)
        for label, endpoint in (("iax_peer", self.iax_peer), ("rsw_peer", self.rsw_peer)):
            if endpoint is not None:
                _check_endpoint(label, endpoint)
        # Port 0 means "assign at bind time", so only literal clashes are detectable here.
        if self.iax_bind == self.rsw_bind and self.iax_bind[1] != 0:
            raise InvalidRelayConfigError("iax_bind and rsw_bind must differ")


def _check_endpoint(label: str, endpoint: tuple[str, int]) -> None:
    host, port = endpoint
    if not host:
        raise InvalidRelayConfigError(f"{label}: host must not be empty")
    if not 0 <= port <= 65535:
        raise InvalidRelayConfigError(f"{label}: port {port} out of range")


@dataclass
class DirectionCounters:
    packets_in: int = 0
    packets_out: int = 0
    bytes_in: int = 0
    bytes_out: int = 0
    parse_rejects: int = 0
    translate_drops: int = 0

    def check_conservation(self) -> None:
        assert self.packets_in == self.packets_out + self.parse_rejects + self.translate_drops


@dataclass
class RelayStats:
    iax_to_rsw: DirectionCounters = field(default_factory=DirectionCounters)
    rsw_to_iax: DirectionCounters = field(default_factory=DirectionCounters)

    def snapshot(self) -> "RelayStats":
        return RelayStats(
            iax_to_rsw=DirectionCounters(**vars(self.iax_to_rsw)),
            rsw_to_iax=DirectionCounters(**vars(self.rsw_to_iax)),
        )


def format_stats_lines(stats: RelayStats) -> list[str]:
    lines = []
    for label, c in (("iax_to_rsw", stats.iax_to_rsw), ("rsw_to_iax", stats.rsw_to_iax)):
        lines.append(
            f"{label}: in={c.packets_in} out={c.packets_out} "
            f"bytes_in={c.bytes_in} bytes_out={c.bytes_out} "
            f"parse_rejects={c.parse_rejects} translate_drops={c.translate_drops}"
        )
    return lines


class UdpRelay:
    """Bidirectional translating relay over two bound UDP sockets.

    Peers may be configured up front or learned from the source address
    of the first datagram seen on each side.
    """

    def __init__(self, config: RelayConfig, profile: CodecProfile | None = None):
        config.validate()
        self.config = config
        self.profile = profile if profile is not None else get_profile(config.codec)
        self.binding = open_binding(config.call_number, config.ssrc_seed)
        self.stats = RelayStats()
        self._iax_peer = config.iax_peer
        self._rsw_peer = config.rsw_peer
        self._lock = threading.Lock()
        self._stop_event = threading.Event()
        self._thread: threading.Thread | None = None
        self._iax_sock = self._bind("iax_bind", config.iax_bind)
        try:
            self._rsw_sock = self._bind("rsw_bind", config.rsw_bind)
        except BindFailureError:
            self._iax_sock.close()
            raise
        self.iax_address = self._iax_sock.getsockname()
        self.rsw_address = self._rsw_sock.getsockname()

    @staticmethod
    def _bind(label: str, endpoint: tuple[str, int]) -> socket.socket:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            sock.bind(endpoint)
        except OSError as exc:
            sock.close()
            raise BindFailureError(f"{label} {endpoint[0]}:{endpoint[1]}: {exc}") from exc
        sock.setblocking(False)
        return sock

    def start(self) -> None:
        if self._thread is not None:
            raise RelayError("relay already started")
        self._thread = threading.Thread(target=self._loop, name="udp-relay", daemon=True)
        self._thread.start()

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def _loop(self) -> None:
        sel = selectors.DefaultSelector()
        sel.register(self._iax_sock, selectors.EVENT_READ, self._handle_iax)
        sel.register(self._rsw_sock, selectors.EVENT_READ, self._handle_rsw)
        try:
            while not self._stop_event.is_set():
                for key, _ in sel.select(timeout=_POLL_INTERVAL_S):
                    key.data()
        finally:
            sel.close()
            self._iax_sock.close()
            self._rsw_sock.close()

    def _handle_iax(self) -> None:
        try:
            data, addr = self._iax_sock.recvfrom(_RECV_BUFFER)
        except OSError:
            return
        with self._lock:
            c = self.stats.iax_to_rsw
            c.packets_in += 1
            c.bytes_in += len(data)
            if self._iax_peer is None:
                self._iax_peer = addr
            if classify_iax_datagram(data) is not FrameKind.MINI:
                c.parse_rejects += 1
                return
            try:
                header, payload = parse_mini(data)
                out = iax_to_rsw(MediaPacket(header, payload), self.binding, self.profile)
            except PacketError:
                c.parse_rejects += 1
                return
            except TranslationError:
                c.translate_drops += 1
                return
            if self._rsw_peer is None:
                c.translate_drops += 1
                return
            wire = serialize_rtp(out.header, out.payload)
            self._rsw_sock.sendto(wire, self._rsw_peer)
            c.packets_out += 1
            c.bytes_out += len(wire)

    def _handle_rsw(self) -> None:
        try:
            data, addr = self._rsw_sock.recvfrom(_RECV_BUFFER)
        except OSError:
            return
        with self._lock:
            c = self.stats.rsw_to_iax
            c.packets_in += 1
            c.bytes_in += len(data)
            if self._rsw_peer is None:
                self._rsw_peer = addr
            try:
                header, payload = parse_rtp(data)
                out = rsw_to_iax(MediaPacket(header, payload), self.binding, self.profile)
            except PacketError:
                c.parse_rejects += 1
                return
            except TranslationError:
                c.translate_drops += 1
                return
            if self._iax_peer is None:
                c.translate_drops += 1
                return
            wire = serialize_mini(out.header, out.payload)
            self._iax_sock.sendto(wire, self._iax_peer)
            c.packets_out += 1
            c.bytes_out += len(wire)

    def snapshot_stats(self) -> RelayStats:
        with self._lock:
            snap = self.stats.snapshot()
        snap.iax_to_rsw.check_conservation()
        snap.rsw_to_iax.check_conservation()
        return snap

    def close(self) -> None:
        """Release sockets for a relay that was never started."""
        if self._thread is None:
            self._iax_sock.close()
            self._rsw_sock.close()

    def stop(self, timeout_s: float = 2.0) -> RelayStats:
        """Signal the loop, join the thread, and return final stats."""
        if self._thread is None:
            raise NotRunningError("relay was never started")
        self._stop_event.set()
        self._thread.join(timeout=timeout_s)
        with self._lock:
            return self.stats.snapshot()


def start_relay(config: RelayConfig, profile: CodecProfile | None = None) -> UdpRelay:
    relay = UdpRelay(config, profile=profile)
    relay.start()
    return relay
