"""Ripeness labels. The integer order is fixed: it indexes confusion matrices
and settles every tie-break in the package."""

from __future__ import annotations

import enum


class Label(enum.IntEnum):
    UNRIPENED = 0
    RIPENED = 1
    OVERRIPENED = 2

    @property
    def wire_name(self) -> str:
        return _LABEL_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "Label":
        try:
            return _LABELS_BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown label {name!r}") from None


class Subclass(enum.IntEnum):
    MID_RIPENED = 0
    WELL_RIPENED = 1

    @property
    def wire_name(self) -> str:
        return _SUBCLASS_NAMES[self]

    @classmethod
    def from_name(cls, name: str) -> "Subclass":
        try:
            return _SUBCLASS_BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown subclass {name!r}") from None


_LABEL_NAMES = {
    Label.UNRIPENED: "Unripened",
    Label.RIPENED: "Ripened",
    Label.OVERRIPENED: "Overripened",
}
_LABELS_BY_NAME = {v: k for k, v in _LABEL_NAMES.items()}

_SUBCLASS_NAMES = {
    Subclass.MID_RIPENED: "MidRipened",
    Subclass.WELL_RIPENED: "WellRipened",
}
_SUBCLASS_BY_NAME = {v: k for k, v in _SUBCLASS_NAMES.items()}
