"""Command-line entry points for every workflow: dataset generation,
augmentation, training, evaluation, single-image grading, serving and
simulation.

Configuration overlay order is fixed: built-in defaults, then the JSON config
file (--config flag or GRADELINE_CONFIG), then explicit flags. Exit codes:
0 success (or Market for `grade`), 1 usage or IO error, 2 Defective grade.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import time
from pathlib import Path

from . import classifiers
from .augmentation import DatasetManifest, ManifestEntry, augment_dataset
from .classifiers import ALGORITHMS, LabeledDataset, Label
from .detection import BrownSpotDetector, SpotDetectorConfig, load_detections, load_ground_truth
from .errors import GradelineError
from .evaluation import (classification_report, confusion, format_classification_table,
                         match_detections)
from .features import VARIANTS, build_feature_vector
from .imaging import load_image, save_image
from .pipeline import GradeConfig, Route, grade
from .segmentation import apply_mask, save_mask, segment
from .services.cloud import CloudConfig, CloudService
from .services.edge import EdgeConfig, EdgeService
from .services.simulator import ConveyorSimulator, SimulatorConfig
from .services.synthetic import generate_synthetic, make_spec

log = logging.getLogger("gradeline.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEFECTIVE = 2


class CliError(Exception):
    """Usage or input problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we own the exit codes
        raise CliError(message)


def _build_parser() -> _Parser:
    # Shared flags are accepted both before and after the subcommand. The
    # subparser variant suppresses its defaults so it never clobbers a value
    # parsed ahead of the subcommand.
    def shared(default):
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--config", default=default,
                       help="JSON config file overlaying defaults (flags still win)")
        p.add_argument("--pretty", action="store_const", const=True, default=default,
                       help="render human tables instead of bare JSON where supported")
        return p

    top = shared(None)
    common = shared(argparse.SUPPRESS)
    parser = _Parser(prog="gradeline", description=__doc__, parents=[top])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common],
                       help="render synthetic frames with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--size", type=int, default=None)

    p = sub.add_parser("augment", parents=[common], help="enlarge a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rotation", type=int, default=None)
    p.add_argument("--flipping", type=int, default=None)
    p.add_argument("--shifting", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("train", parents=[common], help="train a first-layer classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--algorithm", choices=ALGORITHMS, default=None)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--holdout", type=float, default=None)
    p.add_argument("--k", type=int, default=None, help="knn neighbours")
    p.add_argument("--metric", choices=("euclidean", "manhattan"), default=None)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--C", dest="C", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("eval", parents=[common],
                       help="evaluate a model or detection files")
    p.add_argument("--model", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--detections", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--pred-labels", default=None, help="JSON list of predicted label names")
    p.add_argument("--truth-labels", default=None, help="JSON list of true label names")
    p.add_argument("--iou-thresh", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("grade", parents=[common],
                       help="grade one image end to end (local detector)")
    p.add_argument("--image", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--min-area", type=int, default=None)
    p.add_argument("--merge-gap", type=int, default=None)

    p = sub.add_parser("serve-cloud", parents=[common], help="run the cloud defect service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    p = sub.add_parser("serve-edge", parents=[common], help="run the edge grading service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None, help="wire (simulator) port")
    p.add_argument("--http-port", type=int, default=None, help="console HTTP port")
    p.add_argument("--cloud-addr", default=None, help="host:port of the cloud service")
    p.add_argument("--cloud-timeout", type=float, default=None)
    p.add_argument("--event-log", default=None)

    p = sub.add_parser("simulate", parents=[common],
                       help="run the conveyor simulator against an edge")
    p.add_argument("--edge-addr", required=True, help="host:port of the edge wire endpoint")
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--items", type=int, default=None, help="stop after this many items")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--size", type=int, default=None)

    return parser


DEFAULTS = {
    "per_class": 10, "seed": 0, "size": 128,
    "rotation": 0, "flipping": 0, "shifting": 0,
    "algorithm": "svm", "variant": "A", "holdout": 0.2,
    "k": 3, "metric": "euclidean", "trees": 100,
    "gamma": 0.005, "C": 1000.0, "tol": 1e-3,
    "iou_thresh": 0.5,
    "min_area": 25, "merge_gap": 2,
    "host": "127.0.0.1", "port": 0, "http_port": 0,
    "cloud_timeout": 5.0, "rate": 2.0,
}


def _overlay(args: argparse.Namespace) -> dict:
    """defaults < config file < flags."""
    merged = dict(DEFAULTS)
    cfg_path = args.config or os.environ.get("GRADELINE_CONFIG")
    if cfg_path:
        try:
            file_cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config file {cfg_path}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise CliError(f"config file {cfg_path} must hold a JSON object")
        merged.update(file_cfg)
    for key, value in vars(args).items():
        if value is not None:
            merged[key] = value
    return merged


def _emit(obj, pretty_text: str | None, cfg: dict) -> None:
    if cfg.get("pretty") and pretty_text is not None:
        print(pretty_text)
    else:
        print(json.dumps(obj, indent=2))


# ---------------------------------------------------------------- commands


def cmd_generate(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    per_class = int(cfg["per_class"])
    if per_class < 0:
        raise CliError("--per-class must be >= 0")
    entries = []
    truth_index = {}
    i = 0
    for label in Label:
        for _ in range(per_class):
            spec = make_spec(label, seed=int(cfg["seed"]) * 1_000_003 + i, size=int(cfg["size"]))
            img, truth = generate_synthetic(spec)
            name = f"{label.wire_name.lower()}_{i:05d}"
            img_path = out / f"{name}.png"
            save_image(img, img_path)
            save_mask(truth.mask, out / f"{name}_mask.png")
            entries.append(ManifestEntry(path=str(img_path), label=label, tag="synthetic"))
            truth_index[str(img_path)] = {
                "label": label.wire_name,
                "subclass": (truth.subclass.wire_name
                             if truth.subclass is not None else None),
                "mask": str(out / f"{name}_mask.png"),
                "spot_boxes": [{"x": b.x, "y": b.y, "w": b.w, "h": b.h}
                               for b in truth.spot_boxes],
            }
            i += 1
    manifest = DatasetManifest(entries=entries)
    manifest_path = out / "manifest.jsonl"
    manifest.save(manifest_path)
    (out / "ground_truth.json").write_text(json.dumps(truth_index, indent=2))
    _emit({"manifest": str(manifest_path), "entries": len(manifest),
           "counts": manifest.counts_per_tag()}, None, cfg)
    return EXIT_OK


def cmd_augment(cfg: dict) -> int:
    manifest = DatasetManifest.load(cfg["manifest"])
    plan = {tag: int(cfg[tag]) for tag in ("rotation", "flipping", "shifting") if int(cfg[tag])}
    enlarged = augment_dataset(manifest, plan, seed=int(cfg["seed"]), out_dir=cfg["out"])
    out_path = Path(cfg["out"]) / "manifest.jsonl"
    enlarged.save(out_path)
    _emit({"manifest": str(out_path), "entries": len(enlarged),
           "counts": enlarged.counts_per_tag()}, None, cfg)
    return EXIT_OK


def _extract_dataset(manifest: DatasetManifest, variant: str,
                     grade_cfg: GradeConfig) -> LabeledDataset:
    pairs = []
    for entry in manifest.entries:
        img = load_image(entry.path)
        mask = segment(img, grade_cfg.segmentation)
        fv = build_feature_vector(apply_mask(img, mask), mask, variant)
        pairs.append((fv, entry.label))
    return LabeledDataset.from_pairs(pairs)


def _train_model(ds: LabeledDataset, cfg: dict):
    algorithm = cfg["algorithm"]
    if algorithm == "knn":
        return classifiers.knn_train(ds, k=int(cfg["k"]), metric=cfg["metric"])
    if algorithm == "nb":
        return classifiers.nb_train(ds)
    if algorithm == "rf":
        return classifiers.rf_train(ds, trees=int(cfg["trees"]), seed=int(cfg["seed"]))
    return classifiers.svm_train(ds, gamma=float(cfg["gamma"]), C=float(cfg["C"]),
                                 tol=float(cfg["tol"]))


def cmd_train(cfg: dict) -> int:
    manifest = DatasetManifest.load(cfg["manifest"])
    manifest.validate_files()
    started = time.perf_counter()
    ds = _extract_dataset(manifest, cfg["variant"], GradeConfig())
    train_ds, test_ds = ds.split(float(cfg["holdout"]), seed=int(cfg["seed"]))
    model = _train_model(train_ds, cfg)
    wall = time.perf_counter() - started
    classifiers.save_model(model, cfg["model"])
    pred = [classifiers.predict(model, x) for x in test_ds.vectors]
    cm = confusion(pred, [Label(int(t)) for t in test_ds.labels])
    report = {
        "algorithm": cfg["algorithm"], "variant": cfg["variant"],
        "model": cfg["model"],
        "params": {k: cfg[k] for k in ("k", "metric", "trees", "gamma", "C", "tol")},
        "train_samples": len(train_ds), "held_out_samples": len(test_ds),
        "held_out": classification_report(cm),
        "wall_time_s": wall,
    }
    _emit(report, format_classification_table(cm), cfg)
    return EXIT_OK


def cmd_eval(cfg: dict) -> int:
    if cfg.get("detections") and cfg.get("truth"):
        preds = load_detections(cfg["detections"])
        truths = load_ground_truth(cfg["truth"])
        result = match_detections(preds, truths, iou_thresh=float(cfg["iou_thresh"]))
        _emit(result.to_obj(), None, cfg)
        return EXIT_OK
    if cfg.get("pred_labels") and cfg.get("truth_labels"):
        pred = [Label.from_name(n) for n in json.loads(Path(cfg["pred_labels"]).read_text())]
        truth = [Label.from_name(n) for n in json.loads(Path(cfg["truth_labels"]).read_text())]
        cm = confusion(pred, truth)
        _emit(classification_report(cm), format_classification_table(cm), cfg)
        return EXIT_OK
    if cfg.get("model") and cfg.get("manifest"):
        model = classifiers.load_model(cfg["model"])
        manifest = DatasetManifest.load(cfg["manifest"])
        manifest.validate_files()
        ds = _extract_dataset(manifest, model.variant, GradeConfig())
        pred = [classifiers.predict(model, x) for x in ds.vectors]
        cm = confusion(pred, [Label(int(t)) for t in ds.labels])
        _emit(classification_report(cm), format_classification_table(cm), cfg)
        return EXIT_OK
    raise CliError("eval needs --model+--manifest, --detections+--truth, "
                   "or --pred-labels+--truth-labels")


def cmd_grade(cfg: dict) -> int:
    img = load_image(cfg["image"])
    model = classifiers.load_model(cfg["model"])
    detector = BrownSpotDetector(SpotDetectorConfig(min_area=int(cfg["min_area"]),
                                                    merge_gap=int(cfg["merge_gap"])))
    result = grade(img, model, detector)
    _emit(result.to_obj(), None, cfg)
    return EXIT_OK if result.route == Route.MARKET else EXIT_DEFECTIVE


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise CliError(f"address must look like host:port, got {text!r}")
    return host, int(port)


def _serve_until_signal(*services) -> int:
    stop = {"flag": False}

    def _handler(_sig, _frame):
        stop["flag"] = True

    signal.signal(signal.SIGTERM, _handler)
    signal.signal(signal.SIGINT, _handler)
    try:
        while not stop["flag"]:
            time.sleep(0.2)
    finally:
        for service in services:
            service.stop()
    return EXIT_OK


def cmd_serve_cloud(cfg: dict) -> int:
    detector = BrownSpotDetector(SpotDetectorConfig(min_area=int(cfg["min_area"]),
                                                    merge_gap=int(cfg["merge_gap"])))
    try:
        service = CloudService(detector, CloudConfig(host=cfg["host"], port=int(cfg["port"])))
    except OSError as exc:
        raise CliError(f"cannot bind {cfg['host']}:{cfg['port']}: {exc}") from exc
    service.start()
    print(json.dumps({"cloud": "%s:%d" % service.address}), flush=True)
    return _serve_until_signal(service)


def cmd_serve_edge(cfg: dict) -> int:
    model = classifiers.load_model(cfg["model"])
    cloud_addr = _parse_addr(cfg["cloud_addr"]) if cfg.get("cloud_addr") else None
    edge_cfg = EdgeConfig(host=cfg["host"], wire_port=int(cfg["port"]),
                          http_port=int(cfg["http_port"]),
                          cloud_timeout=float(cfg["cloud_timeout"]),
                          event_log_path=cfg.get("event_log"))
    try:
        service = EdgeService(model, cloud_addr, edge_cfg)
    except OSError as exc:
        raise CliError(f"cannot bind edge ports: {exc}") from exc
    service.start()
    print(json.dumps({"wire": "%s:%d" % service.wire_address,
                      "http": "%s:%d" % service.http_address}), flush=True)
    return _serve_until_signal(service)


def cmd_simulate(cfg: dict) -> int:
    sim_cfg = SimulatorConfig(image_size=int(cfg["size"]))
    try:
        sim = ConveyorSimulator(rate=float(cfg["rate"]), class_mix=None,
                                seed=int(cfg["seed"]), edge_addr=_parse_addr(cfg["edge_addr"]),
                                cfg=sim_cfg, max_items=cfg.get("items"))
    except OSError as exc:
        raise CliError(f"cannot reach edge at {cfg['edge_addr']}: {exc}") from exc
    sim.start()
    try:
        if cfg.get("items"):
            sim.wait_for_resolved(int(cfg["items"]),
                                  timeout=max(60.0, 10 * int(cfg["items"]) / float(cfg["rate"])))
        else:
            while True:
                time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        sim.stop()
    _emit({"emitted": sim.emitted, "dropped": sim.dropped,
           "line_accuracy": sim.line_accuracy(), "routing_log": sim.routing_log()},
          None, cfg)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "augment": cmd_augment,
    "train": cmd_train,
    "eval": cmd_eval,
    "grade": cmd_grade,
    "serve-cloud": cmd_serve_cloud,
    "serve-edge": cmd_serve_edge,
    "simulate": cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("GRADELINE_LOG", "WARNING").upper())
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _overlay(args)
        return COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (GradelineError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
