"""Two-stage bounded pipeline and the binary frame protocol.

Stage 1 acquires and decodes mask frames; stage 2 extracts regions using an
internal worker pool (the two class clusterings of a frame run as pool tasks).
Stages communicate through a bounded queue and a token semaphore keeps at most
2 * queue_capacity frames in flight, so backpressure blocks instead of
dropping. Output order equals input order for every pool size.
"""
from __future__ import annotations

import json
import os
import socket
import struct
import threading
import time
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from queue import Queue
from typing import Any, Callable

import numpy as np

from .core import RoadClass, SegmentationMask, road_class_from_name
from .netpbm import PnmError, read_mask
from .policy import advise
from .regions import ExtractionConfig, build_document, document_bytes, extract_regions

MAGIC = b"LDLS"
VERSION = 1
MSG_MASK = 1
MSG_REGIONS = 2

_HEADER = struct.Struct(">4sBBII")  # magic, version, msg_type, frame_id, payload_len
_MASK_HEAD = struct.Struct(">HHB")  # width, height, road_class
HEADER_SIZE = _HEADER.size
_MAX_PAYLOAD = 1 << 26


class ProtocolError(ValueError):
    """Base for every wire-format rejection."""


class MagicError(ProtocolError):
    pass


class VersionError(ProtocolError):
    pass


class MessageTypeError(ProtocolError):
    pass


class TruncatedError(ProtocolError):
    pass


class LengthError(ProtocolError):
    pass


class PayloadError(ProtocolError):
    pass


@dataclass(frozen=True)
class MaskPayload:
    width: int
    height: int
    road_class: RoadClass
    mask_bytes: bytes

    def to_mask(self) -> SegmentationMask:
        data = np.frombuffer(self.mask_bytes, dtype=np.uint8)
        return SegmentationMask(data.reshape(self.height, self.width).copy())


@dataclass(frozen=True)
class RegionPayload:
    document: bytes


@dataclass(frozen=True)
class FrameMessage:
    frame_id: int
    payload: MaskPayload | RegionPayload


def mask_frame(frame_id: int, mask: SegmentationMask, road_class: RoadClass) -> FrameMessage:
    return FrameMessage(
        frame_id=frame_id,
        payload=MaskPayload(
            width=mask.width,
            height=mask.height,
            road_class=road_class,
            mask_bytes=mask.data.tobytes(),
        ),
    )


def encode_frame(msg: FrameMessage) -> bytes:
    if isinstance(msg.payload, MaskPayload):
        p = msg.payload
        if len(p.mask_bytes) != p.width * p.height:
            raise ValueError("mask byte length must equal width*height")
        body = _MASK_HEAD.pack(p.width, p.height, int(p.road_class)) + p.mask_bytes
        msg_type = MSG_MASK
    else:
        body = msg.payload.document
        msg_type = MSG_REGIONS
    return _HEADER.pack(MAGIC, VERSION, msg_type, msg.frame_id, len(body)) + body


def decode_frame(data: bytes) -> FrameMessage:
    """Decode one complete frame; every malformation has its own error class."""
    if len(data) < HEADER_SIZE:
        raise TruncatedError(f"{len(data)} bytes is shorter than a header")
    magic, version, msg_type, frame_id, payload_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionError(f"unsupported version {version}")
    if msg_type not in (MSG_MASK, MSG_REGIONS):
        raise MessageTypeError(f"unknown message type {msg_type}")
    if payload_len > _MAX_PAYLOAD:
        raise LengthError(f"payload length {payload_len} implausible")
    body = data[HEADER_SIZE:]
    if len(body) < payload_len:
        raise TruncatedError(f"payload needs {payload_len} bytes, got {len(body)}")
    if len(body) > payload_len:
        raise LengthError(f"{len(body) - payload_len} trailing bytes after payload")
    if msg_type == MSG_REGIONS:
        return FrameMessage(frame_id, RegionPayload(document=bytes(body)))
    if len(body) < _MASK_HEAD.size:
        raise TruncatedError("mask payload shorter than its fixed fields")
    width, height, rc = _MASK_HEAD.unpack_from(body)
    mask_bytes = bytes(body[_MASK_HEAD.size :])
    if len(mask_bytes) != width * height:
        raise LengthError(
            f"mask needs {width * height} bytes, got {len(mask_bytes)}"
        )
    try:
        road_class = RoadClass(rc)
    except ValueError:
        raise PayloadError(f"invalid road class code {rc}") from None
    return FrameMessage(
        frame_id, MaskPayload(width, height, road_class, mask_bytes)
    )


# ---------------------------------------------------------------------------
# Sources and sinks


@dataclass(frozen=True)
class SourceFrame:
    frame_id: int
    road_class: RoadClass
    mask: SegmentationMask


@dataclass(frozen=True)
class SourceFailure:
    reason: str


def dir_source(path: str | os.PathLike) -> Iterator[SourceFrame | SourceFailure]:
    """Masks from sorted *.pgm files; frame ids are positional.

    A sibling <name>.json carrying a "road_class" key labels the frame.
    """
    files = sorted(Path(path).glob("*.pgm"))
    for frame_id, pgm in enumerate(files):
        try:
            mask = read_mask(pgm)
        except (PnmError, OSError) as e:
            yield SourceFailure(f"{pgm.name}: {e}")
            continue
        road_class = RoadClass.UNKNOWN
        side = pgm.with_suffix(".json")
        if side.exists():
            try:
                raw = json.loads(side.read_text())
                if isinstance(raw, dict) and "road_class" in raw:
                    road_class = road_class_from_name(str(raw["road_class"]))
            except (ValueError, OSError):
                pass
        yield SourceFrame(frame_id, road_class, mask)


def gen_source(spec: str, seed: int = 0) -> Iterator[SourceFrame | SourceFailure]:
    """Synthetic frames from a compact spec: N[xWxH][@noise], e.g. 100x640x480@0.01."""
    from .scenes import generate, sample_spec

    count, width, height, noise = _parse_gen_spec(spec)
    for i in range(count):
        scene = sample_spec(seed + i, width=width, height=height, noise_rate=noise)
        mask, _ = generate(scene)
        yield SourceFrame(i, scene.road_class, mask)


def _parse_gen_spec(spec: str) -> tuple[int, int, int, float | None]:
    body, noise = spec, None
    if "@" in spec:
        body, rate = spec.split("@", 1)
        noise = float(rate)
    parts = body.split("x")
    if len(parts) == 1:
        count, width, height = int(parts[0]), 640, 480
    elif len(parts) == 3:
        count, width, height = int(parts[0]), int(parts[1]), int(parts[2])
    else:
        raise ValueError(f"generator spec {spec!r} is not N or NxWxH")
    if count < 1:
        raise ValueError("generator spec needs at least one frame")
    return count, width, height, noise


def _recv_exact(conn: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            break
        buf.extend(chunk)
    return bytes(buf)


def read_wire_frame(conn: socket.socket) -> FrameMessage | None:
    """One frame from a stream socket; None on clean end-of-stream."""
    header = _recv_exact(conn, HEADER_SIZE)
    if not header:
        return None
    if len(header) < HEADER_SIZE:
        raise TruncatedError("connection closed inside a header")
    payload_len = _HEADER.unpack(header)[4]
    if payload_len > _MAX_PAYLOAD:
        raise LengthError(f"payload length {payload_len} implausible")
    body = _recv_exact(conn, payload_len)
    if len(body) < payload_len:
        raise TruncatedError("connection closed inside a payload")
    return decode_frame(header + body)


def socket_source(conn: socket.socket) -> Iterator[SourceFrame | SourceFailure]:
    """Mask frames from a connection until end-of-stream or the first violation."""
    last_id = -1
    while True:
        try:
            msg = read_wire_frame(conn)
        except ProtocolError as e:
            yield SourceFailure(f"protocol: {e}")
            return
        if msg is None:
            return
        if not isinstance(msg.payload, MaskPayload):
            yield SourceFailure("protocol: expected a mask frame")
            return
        if msg.frame_id <= last_id:
            yield SourceFailure(
                f"protocol: frame id {msg.frame_id} not increasing after {last_id}"
            )
            return
        last_id = msg.frame_id
        try:
            mask = msg.payload.to_mask()
        except ValueError as e:
            yield SourceFailure(f"frame {msg.frame_id}: {e}")
            continue
        yield SourceFrame(msg.frame_id, msg.payload.road_class, mask)


class DirSink:
    """Writes each region document to <frame_id>.json under a directory."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)

    def deliver(self, frame_id: int, document: bytes) -> None:
        (self.path / f"{frame_id:06d}.json").write_bytes(document)

    def close(self) -> None:
        pass


class NullSink:
    def deliver(self, frame_id: int, document: bytes) -> None:
        pass

    def close(self) -> None:
        pass


class WireSink:
    """Sends region frames over a connected stream socket."""

    def __init__(self, conn: socket.socket, owns: bool = False):
        self.conn = conn
        self.owns = owns

    def deliver(self, frame_id: int, document: bytes) -> None:
        frame = FrameMessage(frame_id, RegionPayload(document))
        self.conn.sendall(encode_frame(frame))

    def close(self) -> None:
        if self.owns:
            self.conn.close()


class TeeSink:
    def __init__(self, *sinks):
        self.sinks = sinks

    def deliver(self, frame_id: int, document: bytes) -> None:
        for s in self.sinks:
            s.deliver(frame_id, document)

    def close(self) -> None:
        for s in self.sinks:
            s.close()


# ---------------------------------------------------------------------------
# Pipeline


@dataclass(frozen=True)
class PipelineConfig:
    queue_capacity: int = 8
    worker_pool_size: int = 6
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)

    def __post_init__(self) -> None:
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if self.worker_pool_size < 1:
            raise ValueError("worker_pool_size must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "PipelineConfig":
        kw = dict(raw)
        try:
            if "extraction" in kw:
                kw["extraction"] = ExtractionConfig.from_dict(kw["extraction"])
            return cls(**kw)
        except TypeError as e:
            raise ValueError(f"bad pipeline config: {e}") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "queue_capacity": self.queue_capacity,
            "worker_pool_size": self.worker_pool_size,
            "extraction": self.extraction.to_dict(),
        }


@dataclass
class PipelineStats:
    frames_processed: int = 0
    errors: int = 0
    elapsed_s: float = 0.0
    throughput_fps: float = 0.0
    latency_ms_min: float | None = None
    latency_ms_mean: float | None = None
    latency_ms_p99: float | None = None
    max_in_flight: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "frames_processed": self.frames_processed,
            "errors": self.errors,
            "elapsed_s": self.elapsed_s,
            "throughput_fps": self.throughput_fps,
            "latency_ms": {
                "min": self.latency_ms_min,
                "mean": self.latency_ms_mean,
                "p99": self.latency_ms_p99,
            },
            "max_in_flight": self.max_in_flight,
        }


class _InFlightGauge:
    def __init__(self, limit: int):
        self.sem = threading.Semaphore(limit)
        self.lock = threading.Lock()
        self.current = 0
        self.peak = 0

    def acquire(self) -> None:
        self.sem.acquire()
        with self.lock:
            self.current += 1
            self.peak = max(self.peak, self.current)

    def release(self) -> None:
        with self.lock:
            self.current -= 1
        self.sem.release()


def run_pipeline(
    source: Iterable[SourceFrame | SourceFailure],
    sink,
    cfg: PipelineConfig | None = None,
    observe: Callable[[SourceFrame], None] | None = None,
) -> PipelineStats:
    """Drive every source frame through extraction to the sink, in order.

    `observe` is a test hook called by stage 1 after each successful decode.
    """
    cfg = cfg or PipelineConfig()
    stats = PipelineStats()
    gauge = _InFlightGauge(2 * cfg.queue_capacity)
    frames: Queue = Queue(maxsize=cfg.queue_capacity)
    failures = 0
    t_start = time.perf_counter()

    def produce() -> None:
        nonlocal failures
        it = iter(source)
        try:
            while True:
                # The token gates decoding of the next frame, so frames that
                # exist but are not yet delivered never exceed the bound.
                gauge.acquire()
                item = next(it, None)
                if item is None:
                    gauge.release()
                    break
                if isinstance(item, SourceFailure):
                    failures += 1
                    gauge.release()
                    continue
                if observe is not None:
                    observe(item)
                frames.put((item, time.perf_counter()))
        finally:
            frames.put(None)

    producer = threading.Thread(target=produce, name="mask-source", daemon=True)
    producer.start()

    latencies: list[float] = []
    with ThreadPoolExecutor(max_workers=cfg.worker_pool_size) as pool:
        while True:
            got = frames.get()
            if got is None:
                break
            frame, t_in = got
            regions = extract_regions(frame.mask, cfg.extraction, executor=pool)
            advice = advise(frame.road_class, regions)
            doc = build_document(frame.frame_id, frame.road_class, regions, advice.as_dict())
            sink.deliver(frame.frame_id, document_bytes(doc))
            latencies.append((time.perf_counter() - t_in) * 1000.0)
            gauge.release()
            stats.frames_processed += 1
    producer.join()

    stats.errors = failures
    stats.elapsed_s = time.perf_counter() - t_start
    stats.max_in_flight = gauge.peak
    if stats.elapsed_s > 0:
        stats.throughput_fps = stats.frames_processed / stats.elapsed_s
    if latencies:
        arr = np.asarray(latencies)
        stats.latency_ms_min = float(arr.min())
        stats.latency_ms_mean = float(arr.mean())
        stats.latency_ms_p99 = float(np.percentile(arr, 99))
    return stats


# ---------------------------------------------------------------------------
# Socket deployment


def parse_address(address: str) -> tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must be host:port, got {address!r}")
    return host, int(port)


def serve(
    address: str,
    cfg: PipelineConfig | None = None,
    extra_sink=None,
    bound_callback: Callable[[int], None] | None = None,
) -> PipelineStats:
    """Answer one region frame per mask frame on a single accepted connection.

    Returns when the client closes the stream; a malformed frame closes the
    connection and is counted in stats.errors.
    """
    host, port = parse_address(address)
    with socket.create_server((host, port)) as server:
        if bound_callback is not None:
            bound_callback(server.getsockname()[1])
        conn, _ = server.accept()
        with conn:
            sink = WireSink(conn)
            if extra_sink is not None:
                sink = TeeSink(sink, extra_sink)
            return run_pipeline(socket_source(conn), sink, cfg)


class PipelineClient:
    """Blocking client for a served pipeline: send a mask, read the answer."""

    def __init__(self, address: str, timeout: float | None = 30.0):
        host, port = parse_address(address)
        self.conn = socket.create_connection((host, port), timeout=timeout)

    def send_mask(self, frame_id: int, mask: SegmentationMask, road_class: RoadClass) -> None:
        self.conn.sendall(encode_frame(mask_frame(frame_id, mask, road_class)))

    def recv_regions(self) -> FrameMessage | None:
        msg = read_wire_frame(self.conn)
        if msg is not None and not isinstance(msg.payload, RegionPayload):
            raise MessageTypeError("expected a region frame")
        return msg

    def finish_sending(self) -> None:
        self.conn.shutdown(socket.SHUT_WR)

    def close(self) -> None:
        self.conn.close()


def connect_source(address: str, timeout: float | None = 30.0) -> PipelineClient:
    return PipelineClient(address, timeout=timeout)


def make_source(spec: str, seed: int = 0) -> Iterable[SourceFrame | SourceFailure]:
    """Build a mask source from a CLI spec: dir:<path> or gen:<spec>."""
    kind, _, rest = spec.partition(":")
    if kind == "dir" and rest:
        return dir_source(rest)
    if kind == "gen" and rest:
        return gen_source(rest, seed)
    raise ValueError(f"unsupported source {spec!r}")


def make_sink(spec: str):
    """Build a region sink from a CLI spec: dir:<path>, tcp:<host:port>, or null."""
    if spec == "null":
        return NullSink()
    kind, _, rest = spec.partition(":")
    if kind == "dir" and rest:
        return DirSink(rest)
    if kind == "tcp" and rest:
        host, port = parse_address(rest)
        return WireSink(socket.create_connection((host, port), timeout=30.0), owns=True)
    raise ValueError(f"unsupported sink {spec!r}")
