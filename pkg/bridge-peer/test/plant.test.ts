import { describe, expect, it } from "vitest";

import { PlantBank, broadcast } from "../src/plant.js";

describe("PlantBank", () => {
  it("follows the closed-form first-order law", () => {
    const bank = new PlantBank({ tauP: [0.02], tti: 0.02, x0: [0] });
    const [x] = bank.step([1.0]);
    expect(x).toBeCloseTo(1 - Math.exp(-1), 12);
  });

  it("holds at equilibrium", () => {
    const bank = new PlantBank({ tauP: [0.005], tti: 0.001, x0: [0.4] });
    expect(bank.step([0.4])[0]).toBeCloseTo(0.4, 15);
  });

  it("converges within seven time constants", () => {
    const bank = new PlantBank({ tauP: [0.005], tti: 0.001, x0: [0] });
    let x = 0;
    for (let i = 0; i < 35; i += 1) {
      [x] = bank.step([1.0]);
    }
    expect(Math.abs(x - 1)).toBeLessThan(1e-3);
  });

  it("integrates each device with its own time constant", () => {
    const bank = new PlantBank({ tauP: [0.001, 1.0], tti: 0.001, x0: [0, 0] });
    const [fast, slow] = bank.step([1.0, 1.0]);
    expect(fast).toBeGreaterThan(0.6);
    expect(slow).toBeLessThan(0.01);
  });

  it("rejects inconsistent shapes", () => {
    expect(() => new PlantBank({ tauP: [1], tti: 0.001, x0: [0, 0] })).toThrow();
    const bank = new PlantBank({ tauP: [0.01], tti: 0.001, x0: [0] });
    expect(() => bank.step([1, 2])).toThrow(/expected 1/);
  });
});

describe("broadcast", () => {
  it("expands singletons", () => {
    expect(broadcast([0.005], 3, "tau-p")).toEqual([0.005, 0.005, 0.005]);
  });

  it("keeps full lists", () => {
    expect(broadcast([1, 2, 3], 3, "x0")).toEqual([1, 2, 3]);
  });

  it("rejects mismatched lengths", () => {
    expect(() => broadcast([1, 2], 3, "x0")).toThrow(/1 or 3/);
  });
});
