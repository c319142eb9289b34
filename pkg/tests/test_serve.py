"""JSON-lines optimizer service: protocol, rollback, bit-exactness."""

import json
import os
import threading

import numpy as np
import pytest

from zoadamu import AnnealConfig, Objective, OptimizerConfig, run
from zoadamu.serve import serve, theta_from_hex, theta_to_hex

CONFIG = {"t1": 5, "t2": 40, "t3": 50, "eta": 0.05, "eps": 1e-3, "seed": 9}


class Host:
    """Drives serve() over OS pipes from the test thread."""

    def __init__(self):
        c2s_r, c2s_w = os.pipe()
        s2c_r, s2c_w = os.pipe()
        self._to_server = os.fdopen(c2s_w, "w")
        self._from_server = os.fdopen(s2c_r, "r")
        server_in = os.fdopen(c2s_r, "r")
        server_out = os.fdopen(s2c_w, "w")
        self.thread = threading.Thread(
            target=serve, args=(server_in, server_out), daemon=True
        )
        self.thread.start()

    def send(self, obj):
        self._to_server.write(json.dumps(obj))
        self._to_server.write("\n")
        self._to_server.flush()

    def recv(self):
        line = self._from_server.readline()
        assert line, "server closed unexpectedly"
        return json.loads(line)

    def request(self, obj, loss=None):
        """Send one request; answer any eval exchanges with loss(theta)."""
        self.send(obj)
        evals = 0
        while True:
            reply = self.recv()
            if reply.get("op") == "eval":
                evals += 1
                theta = theta_from_hex(reply["theta_hex"])
                if loss is None:
                    self.send({"error": "no loss available"})
                else:
                    self.send({"loss": loss(theta)})
                continue
            reply["_evals"] = evals
            return reply

    def close(self):
        self.send({"op": "shutdown"})
        self.recv()
        self.thread.join(timeout=5)
        self._to_server.close()
        self._from_server.close()


@pytest.fixture
def host():
    h = Host()
    yield h
    h.close()


def _quad_loss(theta):
    return float((theta[0] - 2.0) ** 2)


def test_theta_hex_roundtrip():
    theta = np.array([1.5, -0.1, 3.7e-300, 2.0 ** 52 + 1])
    np.testing.assert_array_equal(theta_from_hex(theta_to_hex(theta)), theta)


def test_create_step_get_params_close(host):
    reply = host.request({"op": "create", "kind": "zo-adamu",
                          "config": dict(CONFIG, theta0=[0.0])})
    assert reply["ok"] and reply["t"] == 0
    handle = reply["handle"]

    reply = host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    assert reply["ok"]
    assert reply["_evals"] == 2
    rec = reply["record"]
    assert rec["step"] == 1
    assert rec["g_scalar"] == (rec["loss_plus"] - rec["loss_minus"]) / (2 * CONFIG["eps"])

    reply = host.request({"op": "get_params", "handle": handle})
    assert reply["ok"] and reply["dim"] == 1

    assert host.request({"op": "close", "handle": handle})["ok"]
    reply = host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    assert reply["ok"] is False and reply["error"] == "ClosedHandle"


def test_exactly_two_evals_per_step_over_many_steps(host):
    handle = host.request({"op": "create", "kind": "mezo",
                           "config": dict(CONFIG, theta0=[1.0, -1.0])})["handle"]
    for _ in range(25):
        reply = host.request({"op": "step", "handle": handle},
                             loss=lambda t: float(abs(t[0]) + abs(t[1])))
        assert reply["ok"] and reply["_evals"] == 2


@pytest.mark.parametrize("kind", ["mezo", "zo-adamu", "zo-adamm"])
def test_served_trajectory_matches_native_run_bit_exactly(host, kind):
    theta0 = np.array([0.25, -1.5])
    objective = Objective(
        name="quad2", dim=2,
        evaluate=lambda t, b=None: float((t[0] - 2.0) ** 2 + 0.5 * t[1] ** 2),
    )
    anneal = AnnealConfig(t1=CONFIG["t1"], t2=CONFIG["t2"], t3=CONFIG["t3"])
    cfg = OptimizerConfig(eta=CONFIG["eta"], eps=CONFIG["eps"], anneal=anneal)
    native = run(kind, objective, theta0, cfg, seed=CONFIG["seed"], max_steps=30)

    handle = host.request({"op": "create", "kind": kind,
                           "config": dict(CONFIG, theta0_hex=theta_to_hex(theta0))})["handle"]
    for step in range(30):
        reply = host.request({"op": "step", "handle": handle},
                             loss=lambda t: objective.evaluate(t))
        rec = reply["record"]
        want = native.trace[step]
        assert rec["seed"] == want.seed
        assert rec["loss_plus"] == want.loss_plus
        assert rec["loss_minus"] == want.loss_minus
        assert rec["theta_checksum"] == want.theta_checksum
    served = theta_from_hex(host.request({"op": "get_params", "handle": handle})["theta_hex"])
    np.testing.assert_array_equal(served, native.theta)


def test_failed_step_rolls_back_everything(host):
    handle = host.request({"op": "create", "kind": "zo-adamu",
                           "config": dict(CONFIG, theta0=[1.0, 2.0])})["handle"]
    good = host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    assert good["ok"]
    before = host.request({"op": "get_params", "handle": handle})["theta_hex"]

    # host refuses to evaluate: the step must fail and change nothing
    failed = host.request({"op": "step", "handle": handle}, loss=None)
    assert failed["ok"] is False and failed["error"] == "CallbackRaised"
    assert host.request({"op": "get_params", "handle": handle})["theta_hex"] == before

    # non-finite losses roll back the same way
    failed = host.request({"op": "step", "handle": handle},
                          loss=lambda t: float("nan"))
    assert failed["ok"] is False and failed["error"] == "NonFiniteLoss"
    assert host.request({"op": "get_params", "handle": handle})["theta_hex"] == before

    # hosts whose JSON encoder lacks non-finite literals send strings
    failed = host.request({"op": "step", "handle": handle}, loss=lambda t: "NaN")
    assert failed["ok"] is False and failed["error"] == "NonFiniteLoss"
    failed = host.request({"op": "step", "handle": handle}, loss=lambda t: "oops")
    assert failed["ok"] is False and failed["error"] == "CallbackRaised"
    assert host.request({"op": "get_params", "handle": handle})["theta_hex"] == before

    # the retried step consumes the same seed as if no failure happened
    retried = host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    assert retried["ok"] and retried["record"]["step"] == 2


def test_rolled_back_step_is_replayable_bit_exactly(host):
    theta0 = np.array([0.5])
    objective = Objective(name="q", dim=1,
                          evaluate=lambda t, b=None: _quad_loss(t))
    anneal = AnnealConfig(t1=CONFIG["t1"], t2=CONFIG["t2"], t3=CONFIG["t3"])
    cfg = OptimizerConfig(eta=CONFIG["eta"], eps=CONFIG["eps"], anneal=anneal)
    native = run("zo-adamu", objective, theta0, cfg, seed=CONFIG["seed"], max_steps=3)

    handle = host.request({"op": "create", "kind": "zo-adamu",
                           "config": dict(CONFIG, theta0=[0.5])})["handle"]
    host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    host.request({"op": "step", "handle": handle}, loss=None)  # fails, rolls back
    host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    reply = host.request({"op": "step", "handle": handle}, loss=_quad_loss)
    assert reply["record"]["theta_checksum"] == native.trace[2].theta_checksum


def test_create_validation_errors(host):
    reply = host.request({"op": "create", "kind": "adam",
                          "config": dict(CONFIG, theta0=[0.0])})
    assert reply["ok"] is False and reply["error"] == "ConfigError"
    assert reply["field"] == "kind"

    missing = {k: v for k, v in CONFIG.items() if k != "eta"}
    reply = host.request({"op": "create", "kind": "mezo",
                          "config": dict(missing, theta0=[0.0])})
    assert reply["ok"] is False and reply["field"] == "eta"

    reply = host.request({"op": "create", "kind": "mezo",
                          "config": dict(CONFIG, theta0=[0.0], t2=6, t1=5)})
    assert reply["ok"] is False and reply["error"] == "DegenerateSchedule"


def test_unknown_op_and_bad_handle(host):
    reply = host.request({"op": "fly"})
    assert reply["ok"] is False and reply["error"] == "ProtocolError"
    reply = host.request({"op": "step", "handle": 404})
    assert reply["ok"] is False and reply["error"] == "ClosedHandle"
