"""``key = value`` text configuration for model parameters and sweep plans."""
from __future__ import annotations

import dataclasses

from .errors import ParamError
from .model import MIX_FIELDS, ModelParams

PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(ModelParams))
INT_FIELDS = ("population", "n_threads", "seed")


def parse_kv_lines(text: str) -> list[tuple[str, str, int]]:
    """``(key, value, line number)`` for every non-blank, non-comment line."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParamError(f"line {lineno}: missing key")
        out.append((key, value, lineno))
    return out


def parse_param_value(name: str, text: str):
    if name not in PARAM_FIELDS:
        raise ParamError(f"unknown model parameter {name!r}")
    text = text.strip()
    try:
        if name in MIX_FIELDS:
            parts = text.replace("/", ",").split(",")
            return tuple(float(p) for p in parts if p.strip())
        if name in INT_FIELDS:
            return int(text)
        if name == "reader_prior" and text.lower() in ("none", "uniform"):
            return None
        return float(text)
    except ValueError:
        raise ParamError(f"{name}: cannot parse {text!r}") from None


def params_from_mapping(values: dict, base: ModelParams | None = None) -> ModelParams:
    """``base`` (default: the baseline parameter set) with ``values`` applied."""
    base = base or ModelParams()
    parsed = {k: parse_param_value(k, v) if isinstance(v, str) else v for k, v in values.items()}
    for k in parsed:
        if k not in PARAM_FIELDS:
            raise ParamError(f"unknown model parameter {k!r}")
    return base.replace(**parsed)


def read_config_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParamError(f"cannot read config {path}: {exc.strerror or exc}") from None


def load_params_file(path) -> dict:
    return {k: v for k, v, _ in parse_kv_lines(read_config_text(path))}
