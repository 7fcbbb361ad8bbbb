"""Cloud-side defect detection service: answers DetectRequest frames with the
defect boxes and the mid/well sub-classification over a TCP JSON stream."""

from __future__ import annotations

import logging
import socketserver
import threading
from dataclasses import dataclass

from ..detection import Detector, detection_to_obj, ripeness_subclass
from ..errors import DegenerateImageError, ProtocolError
from ..segmentation import SegmentationConfig, segment
from . import protocol

log = logging.getLogger("gradeline.cloud")


@dataclass(frozen=True)
class CloudConfig:
    host: str = "127.0.0.1"
    port: int = 0  # 0 = pick a free port
    max_payload: int = protocol.DEFAULT_MAX_PAYLOAD
    segmentation: SegmentationConfig = SegmentationConfig()


class CloudService:
    """Threaded TCP service wrapping a detector. Each connection may pipeline
    any number of requests; malformed input gets an Error reply and the
    connection stays usable."""

    def __init__(self, detector: Detector, cfg: CloudConfig = CloudConfig()):
        self.detector = detector
        self.cfg = cfg
        self._lock = threading.Lock()
        self.request_count = 0
        service = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                stream = protocol.MessageStream(self.request, max_payload=cfg.max_payload)
                while True:
                    try:
                        msg = stream.read()
                    except ProtocolError as exc:
                        stream.write(protocol.ERROR, None, {"error": str(exc)})
                        continue
                    except OSError:
                        return
                    if msg is None:
                        return
                    try:
                        service._answer(stream, msg)
                    except OSError:
                        return

        class Server(socketserver.ThreadingTCPServer):
            daemon_threads = True
            allow_reuse_address = True

        self._server = Server((cfg.host, cfg.port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def _answer(self, stream: protocol.MessageStream, msg: protocol.WireMessage) -> None:
        if msg.type != protocol.DETECT_REQUEST:
            stream.write(protocol.ERROR, msg.id, {"error": f"unsupported type {msg.type!r}"})
            return
        try:
            img = protocol.decode_image(msg.payload.get("image"))
            mask = segment(img, self.cfg.segmentation)
            detections = self.detector.detect(img, mask)
        except (ProtocolError, DegenerateImageError) as exc:
            stream.write(protocol.ERROR, msg.id, {"error": str(exc)})
            return
        with self._lock:
            self.request_count += 1
        stream.write(protocol.DETECT_RESPONSE, msg.id, {
            "detections": [detection_to_obj(d) for d in detections],
            "subclass": ripeness_subclass(detections).wire_name,
        })

    def start(self) -> "CloudService":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="cloud-service", daemon=True)
        self._thread.start()
        log.info("cloud service listening on %s:%d", *self.address)
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)


def serve_cloud(bind: tuple[str, int], detector: Detector,
                cfg: CloudConfig | None = None) -> CloudService:
    """Build and start a cloud service bound to (host, port)."""
    cfg = cfg or CloudConfig()
    cfg = CloudConfig(host=bind[0], port=bind[1], max_payload=cfg.max_payload,
                      segmentation=cfg.segmentation)
    return CloudService(detector, cfg).start()
