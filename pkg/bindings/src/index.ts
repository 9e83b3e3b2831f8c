/**
 * Bindings to the surveyml core over its CLI api endpoint.
 *
 * Every call copies its input arrays into plain number[] before crossing
 * the boundary, so caller-owned buffers are never mutated or retained.
 * Results are the core's own floats, bit-for-bit (JSON round-trips IEEE
 * doubles exactly in both runtimes). Calls run in a subprocess, so no
 * interpreter lock is shared with the caller; handles do not survive
 * across processes.
 */

import { callApi, SurveyError } from "./runner.js";

export { SurveyError } from "./runner.js";

export type Columnar = ArrayLike<number>;

function toArray(values: Columnar): number[] {
  return Array.prototype.slice.call(values);
}

/** Pair-weighted (inverse-probability) AUROC. */
export function weightedAuroc(
  labels: Columnar,
  scores: Columnar,
  weights: Columnar,
): number {
  const response = callApi({
    op: "weighted_auroc",
    labels: toArray(labels),
    scores: toArray(scores),
    weights: toArray(weights),
  });
  return response.result as number;
}

export interface SensSpec {
  sensitivity: number;
  specificity: number;
  tpW: number;
  fpW: number;
  tnW: number;
  fnW: number;
}

/** Weighted sensitivity/specificity at a threshold (predict >= threshold). */
export function weightedSensSpec(
  labels: Columnar,
  scores: Columnar,
  weights: Columnar,
  threshold: number,
): SensSpec {
  const response = callApi({
    op: "weighted_sens_spec",
    labels: toArray(labels),
    scores: toArray(scores),
    weights: toArray(weights),
    threshold,
  });
  return {
    sensitivity: response.sensitivity as number,
    specificity: response.specificity as number,
    tpW: response.tp_w as number,
    fpW: response.fp_w as number,
    tnW: response.tn_w as number,
    fnW: response.fn_w as number,
  };
}

/**
 * Stratified PSU-level K-fold assignment over R repeats.
 *
 * Returns an R x n matrix of 1-based fold indices; all rows sharing a
 * (stratum, psu) pair land in the same fold within each repeat, and a
 * given seed reproduces the core's own assignment exactly.
 */
export function psuKfold(
  strata: Columnar,
  psu: Columnar,
  k: number,
  r: number,
  seed: number,
): number[][] {
  const response = callApi({
    op: "psu_kfold",
    strata: toArray(strata),
    psu: toArray(psu),
    k,
    r,
    seed,
  });
  return response.assignment as number[][];
}

export interface LogitFit {
  coefficients: number[];
  converged: boolean;
  iterations: number;
  pseudoLoglik: number;
  scores: number[];
}

/** Weighted logistic regression; features are columns without intercept. */
export function weightedLogitFit(
  features: Columnar[],
  outcome: Columnar,
  weights: Columnar,
  options: { strata?: Columnar; psu?: Columnar } = {},
): LogitFit {
  const request: Record<string, unknown> = {
    op: "weighted_logit_fit",
    features: features.map(toArray),
    outcome: toArray(outcome),
    weights: toArray(weights),
  };
  if (options.strata) request.strata = toArray(options.strata);
  if (options.psu) request.psu = toArray(options.psu);
  const response = callApi(request as { op: string });
  return {
    coefficients: response.coefficients as number[],
    converged: response.converged as boolean,
    iterations: response.iterations as number,
    pseudoLoglik: response.pseudo_loglik as number,
    scores: response.scores as number[],
  };
}

export interface DesignDiagnostics {
  n: number;
  strataCount: number;
  psuPerStratum: Record<string, number>;
  lonelyPsuStrata: number[];
  weightCv: number;
  weightRange: [number, number];
}

export interface DesignColumns {
  weights: Columnar;
  strata: Columnar;
  psu: Columnar;
  outcome?: Columnar;
  features?: Columnar[];
}

/**
 * A validated design handle. Construction copies the caller's columns
 * and runs the core's design validation (positive weights, consistent
 * lengths); the diagnostics mirror the core's validate_design output.
 */
export class BoundDesign {
  readonly diagnostics: DesignDiagnostics;
  private readonly columns: {
    weights: number[];
    strata: number[];
    psu: number[];
    outcome?: number[];
    features: number[][];
  };

  constructor(columns: DesignColumns) {
    this.columns = {
      weights: toArray(columns.weights),
      strata: toArray(columns.strata),
      psu: toArray(columns.psu),
      outcome: columns.outcome ? toArray(columns.outcome) : undefined,
      features: (columns.features ?? []).map(toArray),
    };
    const request: Record<string, unknown> = {
      op: "build_design",
      weights: this.columns.weights,
      strata: this.columns.strata,
      psu: this.columns.psu,
      features: this.columns.features,
    };
    if (this.columns.outcome) request.outcome = this.columns.outcome;
    const response = callApi(request as { op: string });
    this.diagnostics = {
      n: response.n as number,
      strataCount: response.strata_count as number,
      psuPerStratum: response.psu_per_stratum as Record<string, number>,
      lonelyPsuStrata: response.lonely_psu_strata as number[],
      weightCv: response.weight_cv as number,
      weightRange: response.weight_range as [number, number],
    };
  }

  /** PSU-stratified folds over this design's strata/psu columns. */
  folds(k: number, r: number, seed: number): number[][] {
    return psuKfold(this.columns.strata, this.columns.psu, k, r, seed);
  }

  /** Weighted AUROC of scores against this design's outcome column. */
  auroc(scores: Columnar): number {
    if (!this.columns.outcome) {
      throw new SurveyError("no-outcome", "design was built without an outcome");
    }
    return weightedAuroc(this.columns.outcome, scores, this.columns.weights);
  }
}
