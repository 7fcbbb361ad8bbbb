"""Edge-side grading service.

Runs the first layer (segment, features, classify) beside the line. Only
frames classified Ripened trigger a DetectRequest to the cloud service; if
the cloud is unreachable those frames are flagged degraded and routed by the
fail-safe policy. Besides the TCP wire endpoint for the simulator, the edge
exposes an HTTP interface for the operator console:

    POST /grade    manual image upload (manual mode only)
    GET  /events   server-sent event stream of GradeEvents (history first)
    POST /control  pause / resume / set-mode / override-route
    GET  /state    current mode, pause flag and counters
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from ..classifiers.labels import Label, Subclass
from ..detection import detection_from_obj
from ..errors import DegenerateImageError, ProtocolError
from ..imaging import RgbImage
from ..pipeline import GradeConfig, GradeResult, assemble_result, classify_frame
from . import protocol

log = logging.getLogger("gradeline.edge")


@dataclass(frozen=True)
class EdgeConfig:
    host: str = "127.0.0.1"
    wire_port: int = 0
    http_port: int = 0
    cloud_timeout: float = 5.0
    max_payload: int = protocol.DEFAULT_MAX_PAYLOAD
    thumbnail_size: int = 64
    event_log_path: str | None = None


@dataclass
class EdgeCounters:
    frames: int = 0
    cloud_requests: int = 0
    cloud_bytes_sent: int = 0
    degraded: int = 0
    manual_uploads: int = 0

    def to_obj(self) -> dict:
        return dict(self.__dict__)


class EdgeService:
    def __init__(self, model, cloud_addr: tuple[str, int] | None,
                 cfg: EdgeConfig = EdgeConfig(), grade_cfg: GradeConfig = GradeConfig()):
        self.model = model
        self.cloud_addr = cloud_addr
        self.cfg = cfg
        self.grade_cfg = grade_cfg
        self.mode = "auto"
        self.paused = False
        self.counters = EdgeCounters()
        self._state_lock = threading.Lock()
        self._events: list[dict] = []
        self._audit: list[dict] = []
        self._events_cond = threading.Condition()
        self._streams: list[protocol.MessageStream] = []
        self._streams_lock = threading.Lock()
        self._acks: dict[str, threading.Event] = {}
        self._manual_seq = 0
        self._relay_seq = 0

        service = self

        class WireHandler(socketserver.BaseRequestHandler):
            def handle(self):
                stream = protocol.MessageStream(self.request, max_payload=cfg.max_payload)
                with service._streams_lock:
                    service._streams.append(stream)
                try:
                    service._wire_loop(stream)
                finally:
                    with service._streams_lock:
                        if stream in service._streams:
                            service._streams.remove(stream)

        class WireServer(socketserver.ThreadingTCPServer):
            daemon_threads = True
            allow_reuse_address = True

        self._wire_server = WireServer((cfg.host, cfg.wire_port), WireHandler)
        self._http_server = ThreadingHTTPServer((cfg.host, cfg.http_port),
                                                _make_http_handler(self))
        self._threads: list[threading.Thread] = []

    # ------------------------------------------------------------------ wire

    @property
    def wire_address(self) -> tuple[str, int]:
        return self._wire_server.server_address[:2]

    @property
    def http_address(self) -> tuple[str, int]:
        return self._http_server.server_address[:2]

    def _wire_loop(self, stream: protocol.MessageStream) -> None:
        while True:
            try:
                msg = stream.read()
            except ProtocolError as exc:
                try:
                    stream.write(protocol.ERROR, None, {"error": str(exc)})
                except OSError:
                    return
                continue
            except OSError:
                return
            if msg is None:
                return
            try:
                self._handle_wire_message(stream, msg)
            except OSError:
                return

    def _handle_wire_message(self, stream, msg: protocol.WireMessage) -> None:
        if msg.type == protocol.DETECT_REQUEST:
            if self.mode != "auto":
                stream.write(protocol.ERROR, msg.id,
                             {"error": "edge is in manual mode; frame rejected"})
                return
            try:
                img = protocol.decode_image(msg.payload.get("image"))
            except ProtocolError as exc:
                stream.write(protocol.ERROR, msg.id, {"error": str(exc)})
                return
            item_id = msg.id or f"item-{self.counters.frames}"
            result, event = self.process_frame(img, item_id)
            stream.write(protocol.GRADE_EVENT, msg.id, event)
            stream.write(protocol.SWITCH_COMMAND, f"switch-{item_id}", {
                "item_id": item_id,
                "route": result.route.value,
                "operator": None,
            })
        elif msg.type == protocol.CONTROL_COMMAND:
            # Ack for a relayed control directive.
            if msg.id is not None:
                done = self._acks.pop(msg.id, None)
                if done:
                    done.set()
        else:
            stream.write(protocol.ERROR, msg.id, {"error": f"unsupported type {msg.type!r}"})

    # ----------------------------------------------------------------- grade

    def process_frame(self, img: RgbImage, item_id: str) -> tuple[GradeResult, dict]:
        """Grade one frame: layer 1 locally, layer 2 via the cloud when the
        prediction is Ripened. Returns the result and the GradeEvent payload."""
        start = time.perf_counter()
        degraded = False
        detections = []
        subclass = None
        layer2 = False
        try:
            label, _mask, timings = classify_frame(img, self.model, self.grade_cfg)
            unclassifiable = False
        except DegenerateImageError:
            label = None
            timings = {}
            unclassifiable = True
        if label == Label.RIPENED:
            layer2 = True
            t0 = time.perf_counter()
            try:
                detections, subclass, nbytes = self._cloud_detect(img)
                with self._state_lock:
                    self.counters.cloud_requests += 1
                    self.counters.cloud_bytes_sent += nbytes
            except (OSError, ProtocolError) as exc:
                log.warning("cloud detect failed for %s: %s", item_id, exc)
                degraded = True
                with self._state_lock:
                    self.counters.degraded += 1
            timings["detect"] = time.perf_counter() - t0
        timings["total"] = time.perf_counter() - start
        result = assemble_result(label, subclass, detections, layer2,
                                 self.grade_cfg.policy, timings,
                                 unclassifiable=unclassifiable, degraded=degraded)
        with self._state_lock:
            self.counters.frames += 1
        event = dict(result.to_obj())
        event["item_id"] = item_id
        event["image_size"] = [img.width, img.height]
        event["thumbnail"] = protocol.encode_image(_thumbnail(img, self.cfg.thumbnail_size))
        with self._events_cond:
            event["seq"] = len(self._events)
            self._events.append(event)
            self._events_cond.notify_all()
        return result, event

    def _cloud_detect(self, img: RgbImage):
        if self.cloud_addr is None:
            raise OSError("no cloud service configured")
        request = protocol.encode_message(
            protocol.DETECT_REQUEST, f"edge-{time.monotonic_ns()}",
            {"image": protocol.encode_image(img)})
        with socket.create_connection(self.cloud_addr, timeout=self.cfg.cloud_timeout) as sock:
            sock.sendall(request)
            stream = protocol.MessageStream(sock, max_payload=self.cfg.max_payload)
            reply = stream.read()
        if reply is None:
            raise ProtocolError("cloud closed the connection without answering")
        if reply.type == protocol.ERROR:
            raise ProtocolError(f"cloud error: {reply.payload.get('error')}")
        if reply.type != protocol.DETECT_RESPONSE:
            raise ProtocolError(f"unexpected cloud reply type {reply.type!r}")
        detections = [detection_from_obj(o) for o in reply.payload.get("detections", [])]
        subclass = Subclass.from_name(reply.payload["subclass"])
        return detections, subclass, len(request)

    # --------------------------------------------------------------- control

    def control(self, action: str, **kwargs) -> dict:
        """Apply a console control command; returns the acknowledged state or
        the audit entry for overrides."""
        if action == "pause":
            self.paused = True
            self._relay({"action": "pause"})
        elif action == "resume":
            self.paused = False
            self._relay({"action": "resume"})
        elif action == "set-mode":
            mode = kwargs.get("mode")
            if mode not in ("auto", "manual"):
                raise ValueError(f"mode must be 'auto' or 'manual', got {mode!r}")
            self.mode = mode
            # Manual assessment stops the line; returning to auto restarts it.
            self.paused = mode == "manual"
            self._relay({"action": "pause" if mode == "manual" else "resume"})
        elif action == "inject":
            self._relay({"action": "inject", "spec": kwargs.get("spec") or {}})
        elif action == "override-route":
            return self._override(kwargs.get("item_id"), kwargs.get("route"),
                                  kwargs.get("operator") or "console")
        else:
            raise ValueError(f"unknown control action {action!r}")
        return self.state()

    def _override(self, item_id: str | None, route: str | None, operator: str) -> dict:
        if not item_id or route not in ("Market", "Defective"):
            raise ValueError("override-route needs item_id and route Market|Defective")
        with self._events_cond:
            event = next((e for e in self._events if e["item_id"] == item_id), None)
        if event is None:
            raise KeyError(f"unknown item {item_id!r}")
        entry = {
            "item_id": item_id,
            "from_route": event["route"],
            "to_route": route,
            "operator": operator,
            "ts": time.time(),
        }
        with self._state_lock:
            self._audit.append(entry)
        sent = self._broadcast(protocol.SWITCH_COMMAND, f"override-{item_id}", {
            "item_id": item_id, "route": route, "operator": operator,
        })
        return {"audit": entry, "delivered": sent}

    def _relay(self, payload: dict, timeout: float = 2.0) -> None:
        """Push a control directive to every connected simulator and wait
        briefly for their acks."""
        with self._streams_lock:
            streams = list(self._streams)
        events = []
        for stream in streams:
            self._relay_seq += 1
            msg_id = f"ctl-{self._relay_seq}"
            done = threading.Event()
            self._acks[msg_id] = done
            try:
                stream.write(protocol.CONTROL_COMMAND, msg_id, payload)
                events.append((msg_id, done))
            except OSError:
                self._acks.pop(msg_id, None)
        deadline = time.monotonic() + timeout
        for msg_id, done in events:
            done.wait(max(0.0, deadline - time.monotonic()))
            self._acks.pop(msg_id, None)

    def _broadcast(self, msg_type: str, msg_id: str, payload: dict) -> int:
        with self._streams_lock:
            streams = list(self._streams)
        sent = 0
        for stream in streams:
            try:
                stream.write(msg_type, msg_id, payload)
                sent += 1
            except OSError:
                continue
        return sent

    # ----------------------------------------------------------------- state

    def state(self) -> dict:
        with self._state_lock:
            return {
                "mode": self.mode,
                "paused": self.paused,
                "counters": self.counters.to_obj(),
                "events": len(self._events),
                "audit": len(self._audit),
            }

    def events_snapshot(self) -> list[dict]:
        with self._events_cond:
            return list(self._events)

    def audit_snapshot(self) -> list[dict]:
        with self._state_lock:
            return list(self._audit)

    def manual_item_id(self) -> str:
        with self._state_lock:
            self._manual_seq += 1
            self.counters.manual_uploads += 1
            return f"manual-{self._manual_seq}"

    # ------------------------------------------------------------- lifecycle

    def start(self) -> "EdgeService":
        for name, target in (("edge-wire", self._wire_server.serve_forever),
                             ("edge-http", self._http_server.serve_forever)):
            t = threading.Thread(target=target, name=name, daemon=True)
            t.start()
            self._threads.append(t)
        log.info("edge service: wire %s:%d, http %s:%d",
                 *self.wire_address, *self.http_address)
        return self

    def stop(self) -> None:
        self._wire_server.shutdown()
        self._wire_server.server_close()
        self._http_server.shutdown()
        self._http_server.server_close()
        for t in self._threads:
            t.join(timeout=5)
        self.flush_event_log()

    def flush_event_log(self) -> None:
        if self.cfg.event_log_path:
            events = self.events_snapshot()
            lines = [json.dumps(e) for e in events]
            Path(self.cfg.event_log_path).write_text(
                "\n".join(lines) + ("\n" if lines else ""))


def _thumbnail(img: RgbImage, max_side: int) -> RgbImage:
    """Nearest-neighbour downscale keeping aspect, longest side <= max_side."""
    scale = max(img.width, img.height) / max_side
    if scale <= 1.0:
        return img
    w = max(1, int(img.width / scale))
    h = max(1, int(img.height / scale))
    ys = (np.arange(h) * img.height / h).astype(np.int64)
    xs = (np.arange(w) * img.width / w).astype(np.int64)
    return RgbImage(img.pixels[np.ix_(ys, xs)])


def _make_http_handler(service: EdgeService):
    class ConsoleHandler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

        def _json(self, code: int, obj: dict) -> None:
            body = json.dumps(obj).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length <= 0 or length > service.cfg.max_payload:
                raise ValueError("missing or oversized request body")
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
            if not isinstance(doc, dict):
                raise ValueError("expected a JSON object")
            return doc

        def do_POST(self):
            if self.path == "/grade":
                self._post_grade()
            elif self.path == "/control":
                self._post_control()
            else:
                self._json(404, {"error": f"unknown endpoint {self.path}"})

        def do_GET(self):
            if self.path == "/events":
                self._get_events()
            elif self.path == "/state":
                self._json(200, service.state())
            else:
                self._json(404, {"error": f"unknown endpoint {self.path}"})

        def _post_grade(self):
            if service.mode != "manual":
                self._json(409, {"error": "manual upload requires manual mode"})
                return
            try:
                body = self._read_body()
                img = protocol.decode_image(body.get("image"))
            except (ValueError, ProtocolError) as exc:
                self._json(400, {"error": f"bad payload: {exc}"})
                return
            _result, event = service.process_frame(img, service.manual_item_id())
            self._json(200, event)

        def _post_control(self):
            try:
                body = self._read_body()
                action = body.get("action")
                outcome = service.control(
                    action,
                    mode=body.get("mode"),
                    item_id=body.get("item_id"),
                    route=body.get("route"),
                    operator=body.get("operator"),
                    spec=body.get("spec"),
                )
            except (ValueError, KeyError) as exc:
                self._json(400, {"error": str(exc)})
                return
            self._json(200, {"ok": True, "action": action, "state": service.state(),
                             **(outcome if "audit" in outcome else {})})

        def _get_events(self):
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            cursor = 0
            try:
                while True:
                    with service._events_cond:
                        pending = service._events[cursor:]
                        if not pending:
                            service._events_cond.wait(timeout=1.0)
                            pending = service._events[cursor:]
                    for event in pending:
                        data = json.dumps(event)
                        self.wfile.write(f"id: {event['seq']}\ndata: {data}\n\n".encode())
                        cursor += 1
                    if not pending:
                        self.wfile.write(b": keep-alive\n\n")
                    self.wfile.flush()
            except (OSError, ValueError):
                return

    return ConsoleHandler


def serve_edge(bind: tuple[str, int], model, cloud_addr: tuple[str, int] | None,
               cfg: EdgeConfig | None = None,
               grade_cfg: GradeConfig = GradeConfig()) -> EdgeService:
    """Build and start an edge service; bind is (host, wire_port) and the HTTP
    port comes from cfg (0 picks a free one)."""
    base = cfg or EdgeConfig()
    cfg = EdgeConfig(host=bind[0], wire_port=bind[1], http_port=base.http_port,
                     cloud_timeout=base.cloud_timeout, max_payload=base.max_payload,
                     thumbnail_size=base.thumbnail_size,
                     event_log_path=base.event_log_path)
    return EdgeService(model, cloud_addr, cfg, grade_cfg).start()
