import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  BoundDesign,
  SurveyError,
  psuKfold,
  weightedAuroc,
  weightedLogitFit,
  weightedSensSpec,
} from "../src/index.js";
import { callApi } from "../src/runner.js";

interface FixtureCase {
  name: string;
  request: { op: string; [key: string]: unknown };
  expected: Record<string, unknown>;
}

const here = dirname(fileURLToPath(import.meta.url));
const cases: FixtureCase[] = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "parity.json"), "utf-8"),
);

function byName(name: string): FixtureCase {
  const found = cases.find((c) => c.name === name);
  if (!found) throw new Error(`fixture ${name} missing`);
  return found;
}

describe("fixture parity (bit-for-bit against the core)", () => {
  for (const fixture of cases) {
    it(fixture.name, () => {
      const response = callApi(fixture.request);
      // Exact equality: both sides are the core's own serialized floats.
      expect(response).toStrictEqual(fixture.expected);
    });
  }
});

describe("typed wrappers", () => {
  it("weightedAuroc returns the exact fixture value", () => {
    const f = byName("auroc_hand_four_pairs");
    const req = f.request as unknown as {
      labels: number[]; scores: number[]; weights: number[];
    };
    const value = weightedAuroc(req.labels, req.scores, req.weights);
    expect(value).toBe(f.expected.result as number);
    expect(value).toBeCloseTo(10 / 12, 12);
  });

  it("equal weights reduce to the classical AUROC", () => {
    const f = byName("auroc_equal_weights");
    const req = f.request as unknown as {
      labels: number[]; scores: number[]; weights: number[];
    };
    expect(weightedAuroc(req.labels, req.scores, req.weights)).toBe(
      f.expected.result as number,
    );
  });

  it("psuKfold matches the core assignment and keeps clusters intact", () => {
    const f = byName("psu_kfold_3x2");
    const req = f.request as unknown as {
      strata: number[]; psu: number[]; k: number; r: number; seed: number;
    };
    const assignment = psuKfold(req.strata, req.psu, req.k, req.r, req.seed);
    expect(assignment).toStrictEqual(f.expected.assignment);
    for (const repeat of assignment) {
      const foldOfPair = new Map<string, number>();
      repeat.forEach((fold, i) => {
        const key = `${req.strata[i]}|${req.psu[i]}`;
        const seen = foldOfPair.get(key);
        if (seen === undefined) {
          foldOfPair.set(key, fold);
        } else {
          expect(fold).toBe(seen);
        }
      });
    }
  });

  it("k=1 degenerates to a single fold", () => {
    const f = byName("psu_kfold_k1");
    const req = f.request as unknown as {
      strata: number[]; psu: number[]; k: number; r: number; seed: number;
    };
    const assignment = psuKfold(req.strata, req.psu, req.k, req.r, req.seed);
    expect(assignment).toStrictEqual(f.expected.assignment);
    expect(assignment[0].every((fold) => fold === 1)).toBe(true);
  });

  it("weightedLogitFit matches coefficients exactly", () => {
    const f = byName("logit_fit");
    const req = f.request as unknown as {
      features: number[][]; outcome: number[]; weights: number[];
    };
    const fit = weightedLogitFit(req.features, req.outcome, req.weights);
    expect(fit.converged).toBe(true);
    expect(fit.coefficients).toStrictEqual(f.expected.coefficients);
    expect(fit.scores).toStrictEqual(f.expected.scores);
  });

  it("weightedSensSpec matches the census enumeration", () => {
    const f = byName("sens_spec_hand");
    const req = f.request as unknown as {
      labels: number[]; scores: number[]; weights: number[]; threshold: number;
    };
    const result = weightedSensSpec(req.labels, req.scores, req.weights, req.threshold);
    expect(result.sensitivity).toBe(f.expected.sensitivity as number);
    expect(result.specificity).toBe(f.expected.specificity as number);
    expect(result.sensitivity).toBeCloseTo(4 / 6, 12);
    expect(result.specificity).toBeCloseTo(5 / 15, 12);
  });
});

describe("BoundDesign", () => {
  it("validates and reports diagnostics", () => {
    const f = byName("build_design_diag");
    const req = f.request as unknown as {
      weights: number[]; strata: number[]; psu: number[];
    };
    const design = new BoundDesign(req);
    expect(design.diagnostics.n).toBe(f.expected.n as number);
    expect(design.diagnostics.strataCount).toBe(f.expected.strata_count as number);
    expect(design.diagnostics.weightCv).toBe(f.expected.weight_cv as number);
  });

  it("rejects nonpositive weights like the core does", () => {
    expect(
      () => new BoundDesign({ weights: [1, -1], strata: [1, 1], psu: [1, 2] }),
    ).toThrowError(SurveyError);
  });

  it("does not mutate caller arrays", () => {
    const weights = new Float64Array([1.5, 2.5, 3.5, 4.5]);
    const strata = [1, 1, 2, 2];
    const psu = [1, 2, 1, 2];
    const before = Array.from(weights);
    new BoundDesign({ weights, strata, psu });
    weightedAuroc([1, 0, 1, 0], [0.9, 0.1, 0.8, 0.2], weights);
    expect(Array.from(weights)).toStrictEqual(before);
    expect(strata).toStrictEqual([1, 1, 2, 2]);
    expect(psu).toStrictEqual([1, 2, 1, 2]);
  });

  it("fold helper matches the free function", () => {
    const design = new BoundDesign({
      weights: [1, 1, 1, 1, 1, 1, 1, 1],
      strata: [1, 1, 1, 1, 2, 2, 2, 2],
      psu: [1, 1, 2, 2, 1, 1, 2, 2],
    });
    const viaHandle = design.folds(2, 2, 99);
    const direct = psuKfold(
      [1, 1, 1, 1, 2, 2, 2, 2], [1, 1, 2, 2, 1, 1, 2, 2], 2, 2, 99,
    );
    expect(viaHandle).toStrictEqual(direct);
  });
});

describe("error mapping", () => {
  it("single-class AUROC surfaces as a typed error", () => {
    try {
      weightedAuroc([1, 1], [0.2, 0.4], [1, 1]);
      throw new Error("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(SurveyError);
      expect((err as SurveyError).message).toMatch(/positive/);
    }
  });
});
