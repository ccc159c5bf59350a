/** Wire formats of the motion-program service. */

export interface PoseFile {
  fps: number;
  width: number;
  height: number;
  joints: string[];
  /** frames[f][j] = [x, y, confidence] (confidence optional on upload). */
  frames: number[][][];
}

export type PrimitiveKind = "circle" | "line" | "stationary";

export interface PrimitiveRecord {
  type: PrimitiveKind;
  time: number;
  [extra: string]: unknown;
}

export interface ConcreteProgramFile {
  version: number;
  fps: number;
  width: number;
  height: number;
  /** Strictly increasing frame indices from 0 to the frame count. */
  boundaries: number[];
  tracks: Record<string, PrimitiveRecord[]>;
}

export interface ProbPrimRecord {
  mean: number[];
  cov: number[][];
  durations: Record<string, number>;
}

export interface DetStatement {
  kind: "det";
  start: number[][];
  middle: number[][];
  end: number[][];
  time: number;
}

export interface LoopStatement {
  kind: "loop";
  iter: number;
  body: ProbPrimRecord[];
}

export type Statement = DetStatement | LoopStatement;

export interface AbstractProgramFile {
  version: number;
  joints: string[];
  statements: Statement[];
}

export interface SessionCreated {
  id: string;
  concrete: ConcreteProgramFile;
  abstract: AbstractProgramFile;
}

export interface LoopPatched {
  id: string;
  seed: number;
  concrete: ConcreteProgramFile;
  abstract: AbstractProgramFile;
}

export interface ValidationReport {
  ok: boolean;
  checks: { name: string; ok: boolean; detail: string }[];
}

/** Knobs accepted by POST /sessions as query parameters. */
export interface SynthesisParams {
  lambda_coeff?: number;
  lambda_window?: number;
  min_segment?: number;
  max_segment?: number;
  tau?: number;
  max_body?: number;
  min_iters?: number;
  init_window?: number;
}
