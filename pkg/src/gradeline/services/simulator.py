"""Conveyor simulator: emits synthetic frames to the edge service at a fixed
rate, applies the SwitchCommands that come back, and scores resolved routes
against its own ground truth. Pause/resume/inject arrive either through the
Python API or as ControlCommand relays from the edge."""

from __future__ import annotations

import logging
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..classifiers.labels import Label
from ..errors import ProtocolError
from ..pipeline import Route, RoutingPolicy
from . import protocol
from .synthetic import GroundTruth, SyntheticSpec, generate_synthetic, make_spec

log = logging.getLogger("gradeline.simulator")

DEFAULT_CLASS_MIX = {Label.UNRIPENED: 1 / 3, Label.RIPENED: 1 / 3, Label.OVERRIPENED: 1 / 3}


@dataclass
class LineItem:
    item_id: str
    spec: SyntheticSpec
    truth: GroundTruth
    arrival: float
    event: dict | None = None
    route: Route | None = None
    commands: list[dict] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return self.route is not None


@dataclass(frozen=True)
class SimulatorConfig:
    buffer_limit: int = 64
    image_size: int = 128
    max_payload: int = protocol.DEFAULT_MAX_PAYLOAD
    policy: RoutingPolicy = RoutingPolicy()


class ConveyorSimulator:
    def __init__(self, rate: float, class_mix: dict[Label, float] | None,
                 seed: int, edge_addr: tuple[str, int],
                 cfg: SimulatorConfig = SimulatorConfig(),
                 max_items: int | None = None):
        if rate <= 0:
            raise ValueError(f"rate must be positive, got {rate}")
        self.rate = rate
        self.class_mix = dict(class_mix or DEFAULT_CLASS_MIX)
        total = sum(self.class_mix.values())
        if total <= 0:
            raise ValueError("class mix must have positive mass")
        self.class_mix = {k: v / total for k, v in self.class_mix.items()}
        self.seed = seed
        self.edge_addr = edge_addr
        self.cfg = cfg
        self.max_items = max_items
        self.items: dict[str, LineItem] = {}
        self.emitted = 0
        self.dropped = 0
        self._paused = threading.Event()
        self._stop = threading.Event()
        self._stream: protocol.MessageStream | None = None
        self._lock = threading.Lock()
        self._resolved = threading.Condition()
        self._threads: list[threading.Thread] = []
        self._inject_queue: list[SyntheticSpec] = []
        self._backlog: list[bytes] = []  # frames awaiting an edge that came back
        self._rng = np.random.default_rng(seed)

    # ------------------------------------------------------------------ api

    def start(self) -> "ConveyorSimulator":
        sock = socket.create_connection(self.edge_addr, timeout=10)
        self._stream = protocol.MessageStream(sock, max_payload=self.cfg.max_payload)
        for name, target in (("sim-reader", self._read_loop),
                             ("sim-producer", self._produce_loop)):
            t = threading.Thread(target=target, name=name, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._stream:
            self._stream.close()
        for t in self._threads:
            t.join(timeout=5)

    def pause(self) -> None:
        self._paused.set()

    def resume(self) -> None:
        self._paused.clear()

    @property
    def paused(self) -> bool:
        return self._paused.is_set()

    def inject(self, spec: SyntheticSpec) -> None:
        """Queue one extra frame; it is emitted ahead of the scheduled flow."""
        with self._lock:
            self._inject_queue.append(spec)

    def wait_for_resolved(self, count: int, timeout: float = 60.0) -> bool:
        """Block until at least count items carry a resolved route."""
        deadline = time.monotonic() + timeout
        with self._resolved:
            while self._resolved_count() < count:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._resolved.wait(remaining)
        return True

    def _resolved_count(self) -> int:
        return sum(1 for item in self.items.values() if item.resolved)

    def line_accuracy(self) -> float:
        """Fraction of resolved items routed consistently with ground truth."""
        resolved = [i for i in self.items.values() if i.resolved]
        if not resolved:
            return 0.0
        good = sum(1 for i in resolved
                   if i.route == self.cfg.policy.route_for(i.truth.label, i.truth.subclass))
        return good / len(resolved)

    def routing_log(self) -> list[dict]:
        out = []
        for item in sorted(self.items.values(), key=lambda i: i.item_id):
            expected = self.cfg.policy.route_for(item.truth.label, item.truth.subclass)
            out.append({
                "item_id": item.item_id,
                "truth_label": item.truth.label.wire_name,
                "truth_subclass": (item.truth.subclass.wire_name
                                   if item.truth.subclass is not None else None),
                "expected_route": expected.value,
                "route": item.route.value if item.route else None,
                "consistent": item.route == expected if item.route else None,
                "overridden": any(c.get("operator") for c in item.commands),
            })
        return out

    # ------------------------------------------------------------- internals

    def _sample_label(self) -> Label:
        labels = sorted(self.class_mix, key=int)
        weights = [self.class_mix[l] for l in labels]
        return labels[int(self._rng.choice(len(labels), p=weights))]

    def _produce_loop(self) -> None:
        interval = 1.0 / self.rate
        next_emit = time.monotonic()
        while not self._stop.is_set():
            injected = None
            with self._lock:
                if self._inject_queue:
                    injected = self._inject_queue.pop(0)
            if injected is None:
                if self.max_items is not None and self.emitted >= self.max_items:
                    return
                now = time.monotonic()
                if self._paused.is_set() or now < next_emit:
                    time.sleep(min(0.01, max(0.0, next_emit - now)) if not self._paused.is_set()
                               else 0.01)
                    if self._paused.is_set():
                        next_emit = time.monotonic()
                    continue
                next_emit += interval
                spec = make_spec(self._sample_label(),
                                 seed=int(self._rng.integers(2 ** 62)),
                                 size=self.cfg.image_size)
            else:
                spec = injected
            self._emit(spec)

    def _emit(self, spec: SyntheticSpec) -> None:
        img, truth = generate_synthetic(spec)
        item_id = f"item-{self.emitted:06d}"
        item = LineItem(item_id=item_id, spec=spec, truth=truth, arrival=time.time())
        with self._lock:
            self.items[item_id] = item
            self.emitted += 1
        frame = protocol.encode_message(protocol.DETECT_REQUEST, item_id,
                                        {"image": protocol.encode_image(img)})
        with self._lock:
            pending = self._backlog + [frame]
            self._backlog = []
        for line in pending:
            try:
                self._stream.write_raw(line)
            except OSError:
                with self._lock:
                    self._backlog.append(line)
                    while len(self._backlog) > self.cfg.buffer_limit:
                        self._backlog.pop(0)
                        self.dropped += 1
                log.warning("edge unreachable, %d frame(s) buffered, %d dropped",
                            len(self._backlog), self.dropped)

    def _read_loop(self) -> None:
        while not self._stop.is_set():
            try:
                msg = self._stream.read()
            except ProtocolError as exc:
                log.warning("protocol error from edge: %s", exc)
                continue
            except OSError:
                return
            if msg is None:
                return
            if msg.type == protocol.GRADE_EVENT:
                item = self.items.get(msg.payload.get("item_id", msg.id))
                if item:
                    item.event = msg.payload
            elif msg.type == protocol.SWITCH_COMMAND:
                self._apply_switch(msg.payload)
            elif msg.type == protocol.CONTROL_COMMAND:
                self._apply_control(msg)
            elif msg.type == protocol.ERROR:
                log.warning("edge error for %s: %s", msg.id, msg.payload.get("error"))

    def _apply_switch(self, payload: dict) -> None:
        item = self.items.get(payload.get("item_id", ""))
        if item is None:
            return
        item.commands.append(payload)
        try:
            item.route = Route.from_name(payload.get("route", ""))
        except ValueError:
            return
        with self._resolved:
            self._resolved.notify_all()

    def _apply_control(self, msg: protocol.WireMessage) -> None:
        action = msg.payload.get("action")
        if action == "pause":
            self.pause()
        elif action == "resume":
            self.resume()
        elif action == "inject":
            spec_obj = msg.payload.get("spec") or {}
            try:
                label = Label.from_name(spec_obj.get("label", "Ripened"))
                self.inject(make_spec(label, seed=int(spec_obj.get("seed", 0)),
                                      size=self.cfg.image_size))
            except ValueError as exc:
                log.warning("bad inject spec: %s", exc)
        # Always ack so the edge stops waiting.
        try:
            self._stream.write(protocol.CONTROL_COMMAND, msg.id, {"ack": action})
        except OSError:
            pass


def run_simulator(rate: float, class_mix: dict[Label, float] | None, seed: int,
                  edge_addr: tuple[str, int], cfg: SimulatorConfig | None = None,
                  max_items: int | None = None) -> ConveyorSimulator:
    return ConveyorSimulator(rate, class_mix, seed, edge_addr,
                             cfg or SimulatorConfig(), max_items=max_items).start()
