/** First-order plant bank integrated one TTI at a time, closed form. */

export interface PlantBankOptions {
  tauP: number[];
  tti: number;
  x0: number[];
}

export class PlantBank {
  private xs: number[];
  private decays: number[];

  constructor(options: PlantBankOptions) {
    if (options.tauP.length !== options.x0.length) {
      throw new Error("tauP and x0 must have the same length");
    }
    if (options.tti <= 0 || options.tauP.some((t) => t <= 0)) {
      throw new Error("tti and every tauP must be positive");
    }
    this.xs = [...options.x0];
    this.decays = options.tauP.map((tau) => Math.exp(-options.tti / tau));
  }

  get outputs(): number[] {
    return [...this.xs];
  }

  /** x' = u + (x - u) * exp(-tti / tauP), per device. */
  step(setpoints: number[]): number[] {
    if (setpoints.length !== this.xs.length) {
      throw new Error(
        `expected ${this.xs.length} set points, got ${setpoints.length}`,
      );
    }
    this.xs = this.xs.map((x, i) => {
      const u = setpoints[i];
      return u + (x - u) * this.decays[i];
    });
    return this.outputs;
  }
}

/** Broadcast a one-element list to n entries, or validate its length. */
export function broadcast(values: number[], n: number, what: string): number[] {
  if (values.length === 1) {
    return Array(n).fill(values[0]);
  }
  if (values.length !== n) {
    throw new Error(`${what} needs 1 or ${n} values, got ${values.length}`);
  }
  return values;
}
