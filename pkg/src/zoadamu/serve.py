"""Line-based JSON protocol driving optimizers from a host process.

The host supplies the loss function: during a step the server emits
``{"op": "eval", "theta_hex": ...}`` requests (exactly two per ZO step)
and the host answers ``{"loss": <number>}``. Parameter vectors cross the
boundary hex-encoded as little-endian float64 so trajectories match the
native runs bit for bit.

Requests (one JSON object per line):
  {"op": "create", "kind": ..., "config": {...}}   -> {"ok": true, "handle": h, "t": 0}
  {"op": "step", "handle": h}                      -> eval exchanges, then
                                                      {"ok": true, "record": {...}}
  {"op": "get_params", "handle": h}                -> {"ok": true, "theta_hex": ..., "dim": d}
  {"op": "close", "handle": h}                     -> {"ok": true}
  {"op": "shutdown"}                               -> {"ok": true} and exit

Failures answer {"ok": false, "error": <type>, "message": ..., "field": ...?}.
A step that fails (host error reply or non-finite loss) is rolled back:
parameters, momentum and the seed sequence are restored.
"""

from __future__ import annotations

import copy
import json
import sys

import numpy as np

from .errors import (
    CallbackRaised,
    ClosedHandle,
    ConfigError,
    NonFiniteLoss,
    ZoAdaMUError,
)
from .optimizers import OptimizerConfig, RunState, make_run_state, step_fn
from .schedule import AnnealConfig, SchedulePreset

__all__ = ["serve", "theta_to_hex", "theta_from_hex"]

_SERVE_KINDS = ("mezo", "zo-adamu", "zo-adamm")
_PRESETS = {p.value: p for p in SchedulePreset}


def theta_to_hex(theta: np.ndarray) -> str:
    return np.ascontiguousarray(theta, dtype="<f8").tobytes().hex()


def theta_from_hex(text: str) -> np.ndarray:
    return np.frombuffer(bytes.fromhex(text), dtype="<f8").copy()


class _Handle:
    def __init__(self, kind: str, state: RunState, cfg: OptimizerConfig):
        self.kind = kind
        self.state = state
        self.cfg = cfg
        self.closed = False


class _HostObjective:
    """Forwards evaluate() to the host over the wire."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    def evaluate(self, theta, batch=None) -> float:
        self.writer({"op": "eval", "theta_hex": theta_to_hex(theta)})
        reply = self.reader()
        if reply is None:
            raise CallbackRaised("host closed the connection during a step")
        if "error" in reply:
            raise CallbackRaised(str(reply["error"]))
        if "loss" not in reply:
            raise CallbackRaised(f"eval reply missing 'loss': {reply}")
        try:
            # accepts JSON numbers plus "NaN"/"Infinity" strings from hosts
            # whose JSON encoder cannot represent non-finite numbers
            return float(reply["loss"])
        except (TypeError, ValueError):
            raise CallbackRaised(f"eval reply loss is not a number: {reply['loss']!r}")


def _build_config(mapping: dict) -> tuple[OptimizerConfig, np.ndarray, int]:
    def need(key):
        if key not in mapping:
            raise ConfigError(key, "required key missing")
        return mapping[key]

    preset = _PRESETS.get(str(mapping.get("preset", "text-final-phase")).lower())
    if preset is None:
        raise ConfigError("preset", f"unknown preset {mapping.get('preset')!r}")
    anneal = AnnealConfig(
        t1=int(need("t1")),
        t2=int(need("t2")),
        t3=int(need("t3")),
        phi_alpha=float(mapping.get("phi_alpha", 1.0)),
        phi_beta1=float(mapping.get("phi_beta1", 0.1)),
        phi_beta2=float(mapping.get("phi_beta2", 1.5)),
        preset=preset,
    )
    cfg = OptimizerConfig(
        eta=float(need("eta")),
        eps=float(mapping.get("eps", 1e-3)),
        sigma=float(mapping.get("sigma", 1e-8)),
        anneal=anneal,
    )
    if "theta0_hex" in mapping:
        theta0 = theta_from_hex(mapping["theta0_hex"])
    else:
        theta0 = np.array(need("theta0"), dtype=np.float64)
    seed = int(mapping.get("seed", 0))
    return cfg, theta0, seed


def _record_payload(state: RunState) -> dict:
    rec = state.trace[-1]
    return {
        "step": rec.step,
        "seed": rec.seed,
        "loss_plus": rec.loss_plus,
        "loss_minus": rec.loss_minus,
        "g_scalar": rec.g_scalar,
        "alpha": rec.alpha,
        "beta1": rec.beta1,
        "beta2": rec.beta2,
        "theta_checksum": rec.theta_checksum,
    }


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def reader():
        line = stdin.readline()
        if not line:
            return None
        return json.loads(line)

    def writer(obj):
        stdout.write(json.dumps(obj))
        stdout.write("\n")
        stdout.flush()

    handles: dict[int, _Handle] = {}
    next_handle = 0
    host_loss = _HostObjective(reader, writer)

    def get_handle(msg) -> _Handle:
        h = handles.get(int(msg.get("handle", -1)))
        if h is None or h.closed:
            raise ClosedHandle("no live optimizer for that handle")
        return h

    while True:
        msg = reader()
        if msg is None:
            return 0
        try:
            op = msg.get("op")
            if op == "shutdown":
                writer({"ok": True})
                return 0
            if op == "create":
                kind = msg.get("kind")
                if kind not in _SERVE_KINDS:
                    raise ConfigError("kind", f"must be one of {_SERVE_KINDS}")
                cfg, theta0, seed = _build_config(msg.get("config", {}))
                state = make_run_state(theta0, kind, seed)
                handles[next_handle] = _Handle(kind, state, cfg)
                writer({"ok": True, "handle": next_handle, "t": 0})
                next_handle += 1
            elif op == "step":
                h = get_handle(msg)
                snapshot = (
                    h.state.theta.copy(),
                    h.state.m.copy(),
                    None if h.state.v is None else h.state.v.copy(),
                    h.state.t,
                    copy.deepcopy(h.state.seed_rng.bit_generator.state),
                )
                try:
                    step_fn(h.kind)(h.state, host_loss, None, h.cfg)
                except (CallbackRaised, NonFiniteLoss):
                    theta, m, v, t, rng_state = snapshot
                    h.state.theta[:] = theta
                    h.state.m = m
                    h.state.v = v
                    h.state.t = t
                    h.state.seed_rng.bit_generator.state = rng_state
                    raise
                writer({"ok": True, "record": _record_payload(h.state)})
            elif op == "get_params":
                h = get_handle(msg)
                writer({
                    "ok": True,
                    "theta_hex": theta_to_hex(h.state.theta),
                    "dim": int(h.state.theta.shape[0]),
                })
            elif op == "close":
                h = get_handle(msg)
                h.closed = True
                writer({"ok": True})
            else:
                writer({"ok": False, "error": "ProtocolError",
                        "message": f"unknown op {op!r}"})
        except ZoAdaMUError as exc:
            payload = {"ok": False, "error": type(exc).__name__, "message": str(exc)}
            if isinstance(exc, ConfigError):
                payload["field"] = exc.field
            writer(payload)
        except json.JSONDecodeError as exc:
            writer({"ok": False, "error": "ProtocolError", "message": str(exc)})
