"""Command line front end: config resolution, dispatch, CSV/JSON emission.

Configuration precedence: explicit flags > JSON config file (flat key
space mirroring flag names) > XYZCA_* environment variables > defaults.
Unknown config keys are rejected.

Exit codes: 0 success; 2 usage errors; 3 invalid input data; 4 decoder
failure (inconsistent syndrome, heralded cluster failure, or a correction
that is logically wrong for a supplied error frame).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    ConfigError,
    DecoderFailure,
    DimensionError,
    InvalidSyndrome,
    ProbabilityError,
    UsageError,
    XyzcaError,
)

ENV_PREFIX = "XYZCA_"

# Per-subcommand parameter schemas: name -> (type tag, default).
# Types: int, float, str, bool, sizes (e.g. "6x9,9x12"), floats (csv list).
_COMMON = {
    "seed": ("int", 0),
    "workers": ("int", 1),
    "out": ("str", ""),
    "format": ("str", "csv"),
}

SCHEMAS: Dict[str, Dict[str, Tuple[str, object]]] = {
    "certify-size": {"L": ("int", None), "H": ("int", None), **_COMMON},
    "decode": {
        "input": ("str", None),
        "decoder": ("str", "exact"),
        "zeta": ("float", math.inf),
        **_COMMON,
    },
    "memtime": {
        "sizes": ("sizes", [(6, 9)]),
        "gamma_z": ("float", None),
        "zeta": ("float", math.inf),
        "ca": ("bool", True),
        "checker": ("str", "auto"),
        "samples": ("int", 100),
        **_COMMON,
    },
    "threshold": {
        "sizes": ("sizes", [(12, 15), (24, 27)]),
        "p_grid": ("floats", [0.05, 0.08, 0.11, 0.14]),
        "zeta_p": ("float", 10.0),
        "trials": ("int", 200),
        **_COMMON,
    },
    "simulate": {
        "L": ("int", 6),
        "H": ("int", 9),
        "gamma_z": ("float", None),
        "zeta": ("float", math.inf),
        "ca": ("bool", True),
        "t_stop": ("float", 0.0),
        "events": ("int", 0),
        **_COMMON,
    },
}


@dataclass
class RunConfig:
    """Fully-resolved run description (defaults included)."""

    subcommand: str
    params: Dict[str, object] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.params["seed"])

    @property
    def workers(self) -> int:
        return int(self.params["workers"])

    @property
    def out(self) -> Optional[str]:
        return self.params["out"] or None

    def emit(self) -> Dict[str, object]:
        """Flat JSON-ready mapping; parse(emit(c)) == c."""
        out: Dict[str, object] = {"subcommand": self.subcommand}
        for key, value in self.params.items():
            out[key] = _value_to_json(SCHEMAS[self.subcommand][key][0], value)
        return out


def _value_to_json(kind: str, value):
    if kind == "sizes":
        return ",".join(f"{L}x{H}" for L, H in value)
    if kind == "floats":
        return ",".join(repr(float(p)) for p in value)
    if kind == "float":
        v = float(value)
        return "inf" if math.isinf(v) else v
    return value


def _parse_value(kind: str, raw, key: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("1", "true", "yes", "on"):
                return True
            if str(raw).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "sizes":
            if isinstance(raw, list):
                return [(int(a), int(b)) for a, b in raw]
            pairs = []
            for part in str(raw).split(","):
                left, _, right = part.strip().partition("x")
                pairs.append((int(left), int(right)))
            return pairs
        if kind == "floats":
            if isinstance(raw, list):
                return [float(v) for v in raw]
            return [float(v) for v in str(raw).split(",")]
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key!r}: {raw!r}") from exc


def _flag_name(key: str) -> str:
    return "--" + key.replace("_", "-")


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Resolve argv (+ optional --config file, + environment) to a RunConfig."""
    parser = argparse.ArgumentParser(
        prog="xyzca",
        description="Simulation and decoding laboratory for the biased-noise color code",
    )
    sub = parser.add_subparsers(dest="subcommand")
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON file with flat keys")
        for key, (kind, _default) in schema.items():
            if kind == "bool":
                group = p.add_mutually_exclusive_group()
                group.add_argument(_flag_name(key), dest=key, action="store_const", const="true")
                group.add_argument(
                    "--no-" + key.replace("_", "-"), dest=key, action="store_const", const="false"
                )
            else:
                p.add_argument(_flag_name(key), dest=key, default=None)
    try:
        ns = parser.parse_args(list(argv))
    except SystemExit as exc:  # argparse reports its own message
        raise UsageError("bad command line") from exc
    if not ns.subcommand:
        raise UsageError("missing subcommand")
    schema = SCHEMAS[ns.subcommand]

    file_values: Dict[str, object] = {}
    if ns.config is not None:
        try:
            with open(ns.config) as fh:
                raw = json.load(fh)
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {ns.config}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in raw.items():
            if key == "subcommand":
                if value != ns.subcommand:
                    raise UsageError(
                        f"config subcommand {value!r} conflicts with {ns.subcommand!r}"
                    )
                continue
            if key not in schema:
                raise UsageError(f"unknown config key {key!r} for {ns.subcommand}")
            file_values[key] = value

    params: Dict[str, object] = {}
    for key, (kind, default) in schema.items():
        flag_value = getattr(ns, key)
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        if flag_value is not None:
            params[key] = _parse_value(kind, flag_value, key)
        elif key in file_values:
            params[key] = _parse_value(kind, file_values[key], key)
        elif env_value is not None:
            params[key] = _parse_value(kind, env_value, key)
        elif default is not None:
            params[key] = default
        else:
            raise UsageError(f"missing required option {_flag_name(key)}")
    config = RunConfig(ns.subcommand, params)
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    p = config.params
    if p["format"] not in ("csv", "json"):
        raise UsageError(f"unknown format {p['format']!r}")
    if config.subcommand == "decode":
        if p["decoder"] not in ("exact", "rg"):
            raise UsageError(f"unknown decoder {p['decoder']!r}")
        if p["decoder"] == "exact" and not math.isinf(p["zeta"]):
            raise UsageError("--decoder exact requires infinite bias (omit --zeta)")
    if config.subcommand == "memtime":
        if p["checker"] not in ("auto", "exact", "rg"):
            raise UsageError(f"unknown checker {p['checker']!r}")
        if p["checker"] == "exact" and not math.isinf(p["zeta"]):
            raise UsageError("exact failure checks require infinite bias")
    if config.subcommand in ("memtime", "simulate") and p["gamma_z"] <= 0:
        raise UsageError("--gamma-z must be positive")


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _write_or_print(text: str, out: Optional[str]) -> None:
    from .experiments import atomic_write_text

    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_certify(config: RunConfig) -> int:
    from .gf2 import cycle_length_from_single_one
    from .logicals import certify_size, count_biased_logicals

    L = int(config.params["L"])
    H = int(config.params["H"])
    try:
        dim = count_biased_logicals(L, H)
        ok = certify_size(L, H)
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    pi = cycle_length_from_single_one(L)
    _write_or_print(
        "L,H,pi_L,kernel_dim,certified\n" + f"{L},{H},{pi},{dim},{'yes' if ok else 'no'}",
        config.out,
    )
    return 0


def _load_decode_input(path: str):
    from .lattice import PauliFrame, Syndrome, syndrome

    try:
        with open(path) as fh:
            text = fh.read()
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read decode input: {exc}") from exc
    if "x_plane" in obj:
        frame = PauliFrame.from_json(text)
        return frame, syndrome(frame)
    if "a" in obj and "b" in obj:
        return None, Syndrome.from_json(text)
    raise ValueError("decode input must be a frame or syndrome JSON object")


def _cmd_decode(config: RunConfig) -> int:
    from .exact_decoder import decode_infinite_bias, is_failure
    from .logicals import get_logical_set
    from .rg_decoder import rg_decode

    try:
        frame, syn = _load_decode_input(config.params["input"])
    except (ValueError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    dims = syn.dims
    result = {
        "correction": None,
        "class_weights": None,
        "chosen_class": None,
        "consistent": False,
    }
    code = 0
    if config.params["decoder"] == "exact":
        try:
            res = decode_infinite_bias(syn, dims)
        except InvalidSyndrome as exc:
            print(f"decoder failure: inconsistent linear system ({exc})", file=sys.stderr)
            _write_or_print(json.dumps(result), config.out)
            return 4
        result["correction"] = json.loads(res.correction.to_json())
        result["class_weights"] = res.class_weights
        result["chosen_class"] = list(res.chosen_class)
        result["consistent"] = True
        correction = res.correction
    else:
        try:
            correction = rg_decode(syn, dims)
        except DecoderFailure as exc:
            print(f"decoder failure: {exc}", file=sys.stderr)
            _write_or_print(json.dumps(result), config.out)
            return 4
        result["correction"] = json.loads(correction.to_json())
        result["consistent"] = True
    if frame is not None:
        ls = get_logical_set(dims.L, dims.H)
        if is_failure(frame, correction, ls):
            print(
                "decoder failure: correction is logically wrong for the supplied error frame",
                file=sys.stderr,
            )
            code = 4
    _write_or_print(json.dumps(result), config.out)
    return code


def _cmd_memtime(config: RunConfig) -> int:
    from .experiments import format_memtime_csv, memory_curve

    p = config.params
    checker = p["checker"]
    if checker == "auto":
        checker = "exact" if math.isinf(p["zeta"]) else "rg"
    try:
        rows = memory_curve(
            p["sizes"],
            gamma_z=p["gamma_z"],
            zeta=p["zeta"],
            ca_enabled=p["ca"],
            n_samples=p["samples"],
            checker=checker,
            seed_base=config.seed,
            workers=config.workers,
        )
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if p["format"] == "json":
        payload = {"config": config.emit(), "rows": [vars(r) for r in rows]}
        _write_or_print(json.dumps(payload, default=str), config.out)
    else:
        _write_or_print(format_memtime_csv(rows, f"seed{config.seed}", config.emit()), config.out)
    return 0


def _cmd_threshold(config: RunConfig) -> int:
    from .experiments import format_threshold_csv, threshold_scan

    p = config.params
    try:
        scan = threshold_scan(
            p["sizes"],
            p["p_grid"],
            p["zeta_p"],
            p["trials"],
            seed_base=config.seed,
            workers=config.workers,
        )
    except (ConfigError, DimensionError, ProbabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for small, large, pc, ci in scan.crossings:
        print(
            f"crossing {small[0]}x{small[1]} vs {large[0]}x{large[1]}: "
            f"p_c ~ {pc:.4f} (95% CI {ci[0]:.4f}..{ci[1]:.4f})",
            file=sys.stderr,
        )
    if p["format"] == "json":
        payload = {
            "config": config.emit(),
            "rows": [vars(r) for r in scan.rows],
            "crossings": [
                {"small": list(s), "large": list(l), "p_c": pc, "ci": list(ci)}
                for s, l, pc, ci in scan.crossings
            ],
        }
        _write_or_print(json.dumps(payload, default=str), config.out)
    else:
        _write_or_print(
            format_threshold_csv(scan.rows, config.emit(), scan.crossings, p["zeta_p"]),
            config.out,
        )
    return 0


def _cmd_simulate(config: RunConfig) -> int:
    from .dynamics import init_engine, run_until
    from .lattice import NoiseParams, build_lattice

    p = config.params
    try:
        dims = build_lattice(int(p["L"]), int(p["H"]))
        gamma_tot = p["gamma_z"] * (
            1.0 + (0.0 if math.isinf(p["zeta"]) else 1.0 / p["zeta"])
        )
        noise = NoiseParams.from_bias(gamma_tot, p["zeta"])
        eng = init_engine(dims, noise, p["ca"], config.seed)
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    t_stop = p["t_stop"] if p["t_stop"] > 0 else None
    max_events = p["events"] if p["events"] > 0 else None
    if t_stop is None and max_events is None:
        print("error: simulate needs --t-stop or --events", file=sys.stderr)
        return 2
    run_until(eng, t_stop=t_stop, max_events=max_events)
    _write_or_print(eng.snapshot_json(), config.out)
    return 0


_DISPATCH = {
    "certify-size": _cmd_certify,
    "decode": _cmd_decode,
    "memtime": _cmd_memtime,
    "threshold": _cmd_threshold,
    "simulate": _cmd_simulate,
}


def dispatch(config: RunConfig) -> int:
    return _DISPATCH[config.subcommand](config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return dispatch(config)
    except XyzcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
