"""Engine side of the co-simulation bridge.

Line protocol, newline-terminated, space-separated, engine is the master:

    HELLO <schema_version> <n_ders>     engine -> peer, once
    STEP <tti_index> <u_1> ... <u_n>    engine -> peer, applied set points
    STATE <tti_index> <x_1> ... <x_n>   peer -> engine, plant outputs
    BYE <reason>                        either side, terminal

STEP/STATE alternate strictly with matching, incrementing tti_index.  Numbers
carry 9 significant digits.
"""

from __future__ import annotations

import socket

from .engine import Simulation
from .errors import BridgeProtocolError
from .trace import fmt9

SCHEMA_VERSION = 1


def format_hello(n_ders: int) -> str:
    return f"HELLO {SCHEMA_VERSION} {n_ders}\n"


def format_step(tti_index: int, setpoints) -> str:
    return " ".join(["STEP", str(tti_index)] + [fmt9(u) for u in setpoints]) + "\n"


def parse_state(line: str, expected_tti: int, n_ders: int) -> list[float]:
    tokens = line.split()
    if not tokens:
        raise BridgeProtocolError("empty frame where STATE was expected")
    if tokens[0] == "BYE":
        raise BridgeProtocolError(f"peer said BYE: {' '.join(tokens[1:]) or '(no reason)'}")
    if tokens[0] != "STATE":
        raise BridgeProtocolError(f"expected STATE, got {tokens[0]!r}")
    if len(tokens) != 2 + n_ders:
        raise BridgeProtocolError(
            f"STATE carries {len(tokens) - 2} values, expected {n_ders}"
        )
    try:
        tti = int(tokens[1])
        values = [float(v) for v in tokens[2:]]
    except ValueError as exc:
        raise BridgeProtocolError(f"malformed STATE frame: {exc}") from exc
    if tti != expected_tti:
        raise BridgeProtocolError(f"STATE for TTI {tti}, expected {expected_tti}")
    return values


def run_bridged(sim: Simulation, rfile, wfile) -> None:
    """Drive a simulation with plants living behind the peer streams.

    Raises BridgeProtocolError on any wire violation; whatever trace was
    accumulated so far stays on the simulation object.
    """
    n = len(sim.nodes)
    wfile.write(format_hello(n))
    wfile.flush()

    def override(tti_index: int, setpoints) -> list[float]:
        wfile.write(format_step(tti_index, setpoints))
        wfile.flush()
        line = rfile.readline()
        if not line:
            raise BridgeProtocolError(f"peer closed the stream during TTI {tti_index}")
        return parse_state(line, tti_index, n)

    while not sim.done:
        sim.step_tti(plant_override=override)
    wfile.write("BYE done\n")
    wfile.flush()


def serve_once(sim: Simulation, host: str, port: int, announce=None, timeout: float = 30.0) -> None:
    """Listen, accept exactly one peer, and run the scenario over it."""
    with socket.create_server((host, port)) as server:
        actual = server.getsockname()[1]
        if announce is not None:
            announce(host, actual)
        server.settimeout(timeout)
        conn, _ = server.accept()
        with conn:
            conn.settimeout(timeout)
            rfile = conn.makefile("r", newline="\n")
            wfile = conn.makefile("w", newline="\n")
            try:
                run_bridged(sim, rfile, wfile)
            except (OSError, socket.timeout) as exc:
                raise BridgeProtocolError(f"transport failure: {exc}") from exc
