"""Cluster node power control over a simulated half-duplex RS-485 bus."""

from .audit import AuditEntry, AuditLog
from .bus import Bus, BusConfig, BusEvent, SecondMasterError, UnknownPortError
from .config import SimWorld, build_world, load_config
from .master import (
    BusMaster,
    NodeRecord,
    Outcome,
    Registry,
    TransactionPolicy,
    UnknownBlockError,
)
from .node import DisplayState, NodeController, NodeDiagnostics
from .protocol import (
    CommandCode,
    Frame,
    ProtocolError,
    ResponseFrame,
    decode_command,
    decode_response,
    encode_command,
    encode_response,
    resync_scan,
)
from .service import ControlService, MalformedPayloadError, SensorTimeoutError

__version__ = "0.1.0"

__all__ = [
    "AuditEntry",
    "AuditLog",
    "Bus",
    "BusConfig",
    "BusEvent",
    "BusMaster",
    "CommandCode",
    "ControlService",
    "DisplayState",
    "Frame",
    "MalformedPayloadError",
    "NodeController",
    "NodeDiagnostics",
    "NodeRecord",
    "Outcome",
    "ProtocolError",
    "Registry",
    "ResponseFrame",
    "SecondMasterError",
    "SensorTimeoutError",
    "SimWorld",
    "TransactionPolicy",
    "UnknownBlockError",
    "UnknownPortError",
    "build_world",
    "decode_command",
    "decode_response",
    "encode_command",
    "encode_response",
    "load_config",
    "resync_scan",
]
