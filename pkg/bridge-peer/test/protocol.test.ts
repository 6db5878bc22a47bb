import { describe, expect, it } from "vitest";

import {
  LineSplitter,
  ProtocolError,
  fmt9,
  formatBye,
  formatState,
  parseHello,
  parseStep,
} from "../src/protocol.js";

describe("fmt9", () => {
  it("trims trailing zeros", () => {
    expect(fmt9(0.5)).toBe("0.5");
    expect(fmt9(1)).toBe("1");
  });

  it("keeps nine significant digits", () => {
    expect(fmt9(1 / 3)).toBe("0.333333333");
    expect(fmt9(14652288.123)).toBe("14652288.1");
  });

  it("round-trips through parseFloat within quantization", () => {
    const x = 0.123456789123;
    expect(Math.abs(Number(fmt9(x)) - x)).toBeLessThan(1e-9);
  });
});

describe("parseHello", () => {
  it("accepts a well-formed frame", () => {
    expect(parseHello("HELLO 1 3")).toEqual({ version: 1, nDers: 3 });
  });

  it("rejects other frames", () => {
    expect(() => parseHello("STEP 0 1 2 3")).toThrow(ProtocolError);
    expect(() => parseHello("HELLO 1")).toThrow(ProtocolError);
    expect(() => parseHello("HELLO one 3")).toThrow(ProtocolError);
  });
});

describe("parseStep", () => {
  it("parses set points", () => {
    expect(parseStep("STEP 12 0.5 -1 2e-3", 3)).toEqual({
      ttiIndex: 12,
      setpoints: [0.5, -1, 0.002],
    });
  });

  it("passes BYE through", () => {
    expect(parseStep("BYE done", 3)).toBe("BYE");
  });

  it("rejects wrong arity", () => {
    expect(() => parseStep("STEP 3 0.5", 2)).toThrow(/expected 2/);
  });

  it("rejects garbage numbers", () => {
    expect(() => parseStep("STEP 3 cheese", 1)).toThrow(/not a number/);
    expect(() => parseStep("STEP 3.5 1", 1)).toThrow(/not an integer/);
  });

  it("rejects unknown kinds", () => {
    expect(() => parseStep("STATE 3 1", 1)).toThrow(/expected STEP or BYE/);
  });
});

describe("format", () => {
  it("formats STATE frames", () => {
    expect(formatState(4, [0.5, 1])).toBe("STATE 4 0.5 1\n");
  });

  it("formats BYE frames", () => {
    expect(formatBye("done")).toBe("BYE done\n");
  });
});

describe("LineSplitter", () => {
  it("reassembles frames across chunks", () => {
    const splitter = new LineSplitter();
    expect(splitter.push("HELLO ")).toEqual([]);
    expect(splitter.push("1 3\nSTEP 0 1")).toEqual(["HELLO 1 3"]);
    expect(splitter.push(" 2 3\n")).toEqual(["STEP 0 1 2 3"]);
  });

  it("handles several frames per chunk", () => {
    const splitter = new LineSplitter();
    expect(splitter.push("A 1\nB 2\nC")).toEqual(["A 1", "B 2"]);
  });
});
