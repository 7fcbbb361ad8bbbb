"""Versioned JSON persistence for trained first-layer models.

The on-disk schema is documented in docs/model-format.md. Every file records
the feature variant and the LBP neighbour ordering the features were built
with; loading reproduces predictions exactly (floats round-trip via repr).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError, VariantMismatchError
from ..features import LBP_NEIGHBOR_ORDER, VARIANT_DIMS
from .forest import ForestModel, TreeNode
from .knn import KnnModel
from .nb import NbModel
from .svm import BinaryMachine, SvmModel

FORMAT = "gradeline-model"
SCHEMA_VERSION = 1


def save_model(model, path) -> None:
    if isinstance(model, KnnModel):
        algorithm, data = "knn", _knn_data(model)
    elif isinstance(model, NbModel):
        algorithm, data = "nb", _nb_data(model)
    elif isinstance(model, ForestModel):
        algorithm, data = "rf", _rf_data(model)
    elif isinstance(model, SvmModel):
        algorithm, data = "svm", _svm_data(model)
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    doc = {
        "format": FORMAT,
        "schema_version": SCHEMA_VERSION,
        "algorithm": algorithm,
        "variant": model.variant,
        "lbp_neighbor_order": LBP_NEIGHBOR_ORDER,
        "data": data,
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path):
    text = Path(path).read_text()
    if not text.strip():
        raise ModelFormatError(f"corrupt model file (empty): {path}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file: {path}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError(f"not a {FORMAT} file: {path}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelFormatError(
            f"unsupported schema version {doc.get('schema_version')} (expected {SCHEMA_VERSION})"
        )
    if doc.get("lbp_neighbor_order") != LBP_NEIGHBOR_ORDER:
        raise ModelFormatError(
            f"model built with LBP order {doc.get('lbp_neighbor_order')!r}, "
            f"this build uses {LBP_NEIGHBOR_ORDER!r}"
        )
    variant = doc.get("variant")
    if variant not in VARIANT_DIMS:
        raise VariantMismatchError(f"unknown feature variant {variant!r}")
    try:
        algorithm = doc["algorithm"]
        data = doc["data"]
        if algorithm == "knn":
            model = _knn_load(data, variant)
        elif algorithm == "nb":
            model = _nb_load(data, variant)
        elif algorithm == "rf":
            model = _rf_load(data, variant)
        elif algorithm == "svm":
            model = _svm_load(data, variant)
        else:
            raise ModelFormatError(f"unknown algorithm {algorithm!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file: {path}") from exc
    _check_dims(model, variant, path)
    return model


def _check_dims(model, variant: str, path) -> None:
    expected = VARIANT_DIMS[variant]
    dim = None
    if isinstance(model, KnnModel):
        dim = model.X.shape[1]
    elif isinstance(model, NbModel):
        dim = model.means.shape[1]
    elif isinstance(model, SvmModel):
        dims = [m.sv_x.shape[1] for m in model.machines if m.sv_x.size]
        dim = dims[0] if dims else expected
    if dim is not None and dim != expected:
        raise VariantMismatchError(
            f"variant tag {variant} expects {expected}-dim vectors but the file "
            f"stores {dim}-dim data: {path}"
        )


def _knn_data(m: KnnModel) -> dict:
    return {"k": m.k, "metric": m.metric, "X": m.X.tolist(), "y": m.y.tolist()}


def _knn_load(d: dict, variant: str) -> KnnModel:
    return KnnModel(k=int(d["k"]), metric=str(d["metric"]),
                    X=np.asarray(d["X"], dtype=np.float64),
                    y=np.asarray(d["y"], dtype=np.int64), variant=variant)


def _nb_data(m: NbModel) -> dict:
    return {"classes": m.classes.tolist(), "priors": m.priors.tolist(),
            "means": m.means.tolist(), "variances": m.variances.tolist()}


def _nb_load(d: dict, variant: str) -> NbModel:
    return NbModel(classes=np.asarray(d["classes"], dtype=np.int64),
                   priors=np.asarray(d["priors"], dtype=np.float64),
                   means=np.asarray(d["means"], dtype=np.float64),
                   variances=np.asarray(d["variances"], dtype=np.float64),
                   variant=variant)


def _rf_data(m: ForestModel) -> dict:
    return {"seed": m.seed, "trees": [t.to_obj() for t in m.trees]}


def _rf_load(d: dict, variant: str) -> ForestModel:
    return ForestModel(trees=[TreeNode.from_obj(t) for t in d["trees"]],
                       variant=variant, seed=int(d["seed"]))


def _svm_data(m: SvmModel) -> dict:
    return {
        "gamma": m.gamma, "C": m.C, "tol": m.tol,
        "machines": [{
            "pos_label": mc.pos_label, "neg_label": mc.neg_label,
            "sv_x": mc.sv_x.tolist(), "sv_y": mc.sv_y.tolist(),
            "alphas": mc.alphas.tolist(), "bias": mc.bias,
            "iterations": mc.iterations, "converged": mc.converged,
            "kkt_max_violation": mc.kkt_max_violation, "dual_balance": mc.dual_balance,
        } for mc in m.machines],
    }


def _svm_load(d: dict, variant: str) -> SvmModel:
    model = SvmModel(gamma=float(d["gamma"]), C=float(d["C"]), tol=float(d["tol"]),
                     variant=variant)
    for mc in d["machines"]:
        sv_x = np.asarray(mc["sv_x"], dtype=np.float64)
        if sv_x.size == 0:
            sv_x = sv_x.reshape(0, VARIANT_DIMS[variant])
        model.machines.append(BinaryMachine(
            pos_label=int(mc["pos_label"]), neg_label=int(mc["neg_label"]),
            sv_x=sv_x,
            sv_y=np.asarray(mc["sv_y"], dtype=np.float64),
            alphas=np.asarray(mc["alphas"], dtype=np.float64),
            bias=float(mc["bias"]), iterations=int(mc["iterations"]),
            converged=bool(mc["converged"]),
            kkt_max_violation=float(mc.get("kkt_max_violation", 0.0)),
            dual_balance=float(mc.get("dual_balance", 0.0)),
        ))
    return model
