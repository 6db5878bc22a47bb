/**
 * Peer-side protocol session: a state machine fed one frame at a time.
 *
 * The engine drives; this side answers every STEP with a STATE computed from
 * the same closed-form plant law the engine uses internally.  Any departure
 * from the HELLO, (STEP, STATE)*, BYE sequence aborts with a BYE and the
 * protocol exit code (4).
 */

import { PlantBank, broadcast } from "./plant.js";
import {
  ProtocolError,
  SCHEMA_VERSION,
  formatBye,
  formatState,
  parseHello,
  parseStep,
} from "./protocol.js";

export const EXIT_OK = 0;
export const EXIT_PROTOCOL = 4;

export interface SessionOptions {
  tauP: number[];
  tti: number;
  x0: number[];
}

export interface Reply {
  line?: string;
  done?: boolean;
  exitCode?: number;
  error?: string;
}

type Phase = "hello" | "run" | "done";

export class PeerSession {
  private phase: Phase = "hello";
  private plants: PlantBank | null = null;
  private nDers = 0;
  private nextTti = 0;

  constructor(private readonly options: SessionOptions) {}

  private abort(reason: string): Reply {
    this.phase = "done";
    return {
      line: formatBye(reason),
      done: true,
      exitCode: EXIT_PROTOCOL,
      error: reason,
    };
  }

  handleLine(line: string): Reply {
    try {
      return this.dispatch(line);
    } catch (err) {
      if (err instanceof ProtocolError) {
        return this.abort(err.message);
      }
      throw err;
    }
  }

  private dispatch(line: string): Reply {
    if (this.phase === "done") {
      return { done: true, exitCode: EXIT_PROTOCOL, error: "frame after end" };
    }
    if (this.phase === "hello") {
      const hello = parseHello(line);
      if (hello.version !== SCHEMA_VERSION) {
        return this.abort(
          `version mismatch: engine ${hello.version}, peer ${SCHEMA_VERSION}`,
        );
      }
      if (hello.nDers < 1) {
        return this.abort(`bad DER count ${hello.nDers}`);
      }
      this.nDers = hello.nDers;
      this.plants = new PlantBank({
        tauP: broadcast(this.options.tauP, hello.nDers, "tau-p"),
        tti: this.options.tti,
        x0: broadcast(this.options.x0, hello.nDers, "x0"),
      });
      this.phase = "run";
      return {};
    }
    const step = parseStep(line, this.nDers);
    if (step === "BYE") {
      this.phase = "done";
      return { done: true, exitCode: EXIT_OK };
    }
    if (step.ttiIndex !== this.nextTti) {
      return this.abort(
        `out-of-order STEP: got ${step.ttiIndex}, expected ${this.nextTti}`,
      );
    }
    this.nextTti += 1;
    const outputs = this.plants!.step(step.setpoints);
    return { line: formatState(step.ttiIndex, outputs) };
  }

  /** The stream ended; clean only if a BYE already finished the session. */
  handleEof(): Reply {
    if (this.phase === "done") {
      return { done: true, exitCode: EXIT_OK };
    }
    this.phase = "done";
    return { done: true, exitCode: EXIT_PROTOCOL, error: "engine closed early" };
  }
}
