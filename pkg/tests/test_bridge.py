"""Bridge protocol tests with an in-process reference peer."""

import dataclasses
import json
import math
import socket
import threading

import pytest

from grid5g.bridge import format_hello, format_step, parse_state, run_bridged
from grid5g.engine import Simulation, run
from grid5g.errors import BridgeProtocolError
from grid5g.scenario import load_scenario
from grid5g.trace import fmt9


def short_staggered(duration=0.3, mode="5g"):
    scenario, _, _ = load_scenario("cspm_staggered", mode=mode)
    events = [dataclasses.replace(e, t=round(duration * (i + 1) / 6, 3))
              for i, e in enumerate(scenario.events)]
    return dataclasses.replace(scenario, duration=duration, events=events)


def loopback_peer(conn, tau_p=0.005, tti=1e-3, quantize=True,
                  break_after=None, wrong_index=False):
    """Reference peer: same closed-form plant law as the engine."""
    rfile = conn.makefile("r", newline="\n")
    wfile = conn.makefile("w", newline="\n")
    hello = rfile.readline().split()
    assert hello[:2] == ["HELLO", "1"]
    n = int(hello[2])
    xs = [0.0] * n
    decay = math.exp(-tti / tau_p)
    served = 0
    while True:
        line = rfile.readline()
        if not line or line.startswith("BYE"):
            break
        tokens = line.split()
        k = int(tokens[1])
        if break_after is not None and served >= break_after:
            conn.close()
            return
        setpoints = [float(v) for v in tokens[2:]]
        xs = [u + (x - u) * decay for x, u in zip(xs, setpoints)]
        reply_k = k + 1 if wrong_index else k
        if quantize:
            payload = " ".join(fmt9(x) for x in xs)
        else:
            payload = " ".join(repr(x) for x in xs)
        wfile.write(f"STATE {reply_k} {payload}\n")
        wfile.flush()
        served += 1
    conn.close()


def bridged_run(scenario, peer_kwargs=None):
    left, right = socket.socketpair()
    sim = Simulation(scenario)
    peer = threading.Thread(target=loopback_peer, args=(right,),
                            kwargs=peer_kwargs or {}, daemon=True)
    peer.start()
    rfile = left.makefile("r", newline="\n")
    wfile = left.makefile("w", newline="\n")
    try:
        run_bridged(sim, rfile, wfile)
    finally:
        left.close()
        peer.join(timeout=5)
    return sim


class TestFraming:
    def test_hello_and_step_format(self):
        assert format_hello(3) == "HELLO 1 3\n"
        assert format_step(7, [1.0, 0.25]) == "STEP 7 1 0.25\n"

    def test_parse_state_round_trip(self):
        values = parse_state("STATE 7 0.5 -0.25 1\n", 7, 3)
        assert values == [0.5, -0.25, 1.0]

    def test_parse_rejects_wrong_kind(self):
        with pytest.raises(BridgeProtocolError, match="expected STATE"):
            parse_state("STEPP 1 0\n", 1, 1)

    def test_parse_rejects_wrong_index(self):
        with pytest.raises(BridgeProtocolError, match="expected 4"):
            parse_state("STATE 5 0.0\n", 4, 1)

    def test_parse_rejects_wrong_count(self):
        with pytest.raises(BridgeProtocolError, match="carries 1"):
            parse_state("STATE 2 0.0\n", 2, 3)

    def test_parse_rejects_garbage_number(self):
        with pytest.raises(BridgeProtocolError, match="malformed"):
            parse_state("STATE 2 zero\n", 2, 1)

    def test_peer_bye_reported(self):
        with pytest.raises(BridgeProtocolError, match="peer said BYE"):
            parse_state("BYE version mismatch\n", 0, 3)


class TestBridgedRuns:
    def test_equivalence_with_in_process_plants(self):
        scenario = short_staggered()
        in_process = run(scenario)
        sim = bridged_run(scenario)
        assert len(sim.trace) == len(in_process)
        worst = max(
            abs(a - b)
            for ra, rb in zip(sim.trace, in_process)
            for a, b in zip(ra.x, rb.x)
        )
        assert worst <= 1e-6

    def test_full_precision_peer_closer_still(self):
        scenario = short_staggered(duration=0.1)
        in_process = run(scenario)
        sim = bridged_run(scenario, peer_kwargs={"quantize": False})
        worst = max(
            abs(a - b)
            for ra, rb in zip(sim.trace, in_process)
            for a, b in zip(ra.x, rb.x)
        )
        assert worst <= 1e-7

    def test_early_close_raises_with_partial_trace(self):
        scenario = short_staggered(duration=0.2)
        with pytest.raises(BridgeProtocolError, match="closed"):
            bridged_run(scenario, peer_kwargs={"break_after": 50})

    def test_wrong_tti_index_raises(self):
        scenario = short_staggered(duration=0.05)
        with pytest.raises(BridgeProtocolError, match="expected 0"):
            bridged_run(scenario, peer_kwargs={"wrong_index": True})


class TestBridgeCli:
    def run_cli_bridge(self, tmp_path, peer, extra_args=()):
        import subprocess
        import sys

        proc = subprocess.Popen(
            [sys.executable, "-m", "grid5g.cli", "bridge", "cspm_staggered",
             "--listen", "tcp:127.0.0.1:0", "--out", str(tmp_path), *extra_args],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        banner = proc.stdout.readline().strip()
        assert banner.startswith("BRIDGE LISTENING tcp:")
        host, port = banner.rsplit(":", 2)[-2:]
        conn = socket.create_connection((host, int(port)), timeout=10)
        peer_thread = threading.Thread(target=peer, args=(conn,), daemon=True)
        peer_thread.start()
        out, err = proc.communicate(timeout=120)
        peer_thread.join(timeout=5)
        return proc.returncode, banner + "\n" + out, err

    def test_cli_happy_path(self, tmp_path):
        code, out, err = self.run_cli_bridge(tmp_path, loopback_peer)
        assert code == 0, err
        assert (tmp_path / "cspm_staggered_5g.csv").exists()
        manifest = json.loads(
            (tmp_path / "cspm_staggered_5g.manifest.json").read_text())
        assert manifest["mode"] == "5g"

    def test_cli_malformed_line_exit_4(self, tmp_path):
        def bad_peer(conn):
            rfile = conn.makefile("r", newline="\n")
            wfile = conn.makefile("w", newline="\n")
            rfile.readline()  # HELLO
            rfile.readline()  # first STEP
            wfile.write("STATE not-a-number\n")
            wfile.flush()
            conn.close()

        code, out, err = self.run_cli_bridge(tmp_path, bad_peer)
        assert code == 4
        assert "protocol error" in err
        # partial trace flushed
        assert (tmp_path / "cspm_staggered_5g.csv").exists()

    def test_cli_early_close_exit_4(self, tmp_path):
        code, out, err = self.run_cli_bridge(
            tmp_path, lambda conn: loopback_peer(conn, break_after=100))
        assert code == 4
        trace_path = tmp_path / "cspm_staggered_5g.csv"
        assert trace_path.exists()
        assert 1 < len(trace_path.read_text().splitlines()) < 3002
