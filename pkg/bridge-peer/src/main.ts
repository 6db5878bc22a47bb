/**
 * CLI entry: connect to a listening engine and serve plant states.
 *
 *   node dist/main.js --connect HOST:PORT [--tau-p S[,S,...]] [--tti S]
 *                     [--x0 X[,X,...]]
 *
 * Exit codes mirror the engine convention: 0 clean BYE, 3 usage/transport
 * failure, 4 protocol violation.
 */

import net from "node:net";
import process from "node:process";

import { PeerSession } from "./peer.js";
import { LineSplitter } from "./protocol.js";

interface CliOptions {
  host: string;
  port: number;
  tauP: number[];
  tti: number;
  x0: number[];
}

function usage(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.stderr.write(
    "usage: main.js --connect HOST:PORT [--tau-p S[,S,...]] [--tti S] [--x0 X[,X,...]]\n",
  );
  process.exit(3);
}

function numberList(raw: string, flag: string): number[] {
  const values = raw.split(",").map(Number);
  if (values.length === 0 || values.some(Number.isNaN)) {
    usage(`${flag} expects a comma-separated number list, got '${raw}'`);
  }
  return values;
}

function parseArgs(argv: string[]): CliOptions {
  const options: CliOptions = {
    host: "",
    port: 0,
    tauP: [0.005],
    tti: 0.001,
    x0: [0.0],
  };
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      usage(`missing value for ${flag}`);
    }
    switch (flag) {
      case "--connect": {
        const at = value.lastIndexOf(":");
        if (at <= 0) {
          usage(`--connect expects HOST:PORT, got '${value}'`);
        }
        options.host = value.slice(0, at);
        options.port = Number(value.slice(at + 1));
        if (!Number.isInteger(options.port) || options.port <= 0) {
          usage(`bad port in '${value}'`);
        }
        break;
      }
      case "--tau-p":
        options.tauP = numberList(value, "--tau-p");
        break;
      case "--tti":
        options.tti = Number(value);
        if (!(options.tti > 0)) {
          usage(`--tti must be positive, got '${value}'`);
        }
        break;
      case "--x0":
        options.x0 = numberList(value, "--x0");
        break;
      default:
        usage(`unknown flag ${flag}`);
    }
  }
  if (!options.host) {
    usage("--connect is required");
  }
  return options;
}

function main(): void {
  const options = parseArgs(process.argv.slice(2));
  const session = new PeerSession({
    tauP: options.tauP,
    tti: options.tti,
    x0: options.x0,
  });
  const splitter = new LineSplitter();
  const socket = net.createConnection(options.port, options.host);
  socket.setEncoding("utf8");

  const finish = (code: number, error?: string): void => {
    if (error) {
      process.stderr.write(`bridge peer: ${error}\n`);
    }
    socket.end(() => process.exit(code));
    // if the engine never closes its side, do not hang forever
    setTimeout(() => process.exit(code), 1000).unref();
  };

  socket.on("error", (err) => {
    process.stderr.write(`bridge peer: transport failure: ${err.message}\n`);
    process.exit(3);
  });

  socket.on("data", (chunk: string) => {
    for (const line of splitter.push(chunk)) {
      const reply = session.handleLine(line);
      if (reply.line) {
        socket.write(reply.line);
      }
      if (reply.done) {
        finish(reply.exitCode ?? 0, reply.error);
        return;
      }
    }
  });

  socket.on("end", () => {
    const reply = session.handleEof();
    finish(reply.exitCode ?? 0, reply.error);
  });
}

main();
