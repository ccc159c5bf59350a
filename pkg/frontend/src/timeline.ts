/** Timeline construction: concrete segments annotated with loop grouping.
 *
 * Block boundaries are exactly the concrete program's boundaries; loops are
 * laid over them by walking the abstract statements (each DetPrim covers one
 * segment, each loop covers iter * body-size segments).
 */

import type {
  AbstractProgramFile,
  ConcreteProgramFile,
  PrimitiveKind,
} from "./types.js";

export interface LoopTag {
  /** Index among the program's loops (PATCH /loops/{index} target). */
  loopIndex: number;
  iteration: number; // 0-based iteration this segment belongs to
  bodyPosition: number; // position inside the loop body
  iterations: number; // total iterations of the loop
  bodySize: number;
}

export interface TimelineBlock {
  segmentIndex: number;
  startFrame: number;
  endFrame: number;
  duration: number;
  kind: PrimitiveKind | "mixed";
  loop: LoopTag | null;
}

export interface ViewState {
  sessionId: string;
  timeline: TimelineBlock[];
  totalFrames: number;
  playhead: number;
  playbackRate: number;
  pendingEdits: number;
}

function segmentKind(concrete: ConcreteProgramFile, segment: number): PrimitiveKind | "mixed" {
  let kind: PrimitiveKind | "mixed" | null = null;
  for (const joints of Object.values(concrete.tracks)) {
    const t = joints[segment].type;
    if (kind === null) kind = t;
    else if (kind !== t) return "mixed";
  }
  if (kind === null) throw new Error("program has no tracks");
  return kind;
}

export function buildTimeline(
  concrete: ConcreteProgramFile,
  abstract: AbstractProgramFile,
): TimelineBlock[] {
  const boundaries = concrete.boundaries;
  const nSegments = boundaries.length - 1;
  const blocks: TimelineBlock[] = [];
  let segment = 0;
  let loopIndex = -1;

  const push = (loop: LoopTag | null) => {
    blocks.push({
      segmentIndex: segment,
      startFrame: boundaries[segment],
      endFrame: boundaries[segment + 1],
      duration: boundaries[segment + 1] - boundaries[segment],
      kind: segmentKind(concrete, segment),
      loop,
    });
    segment += 1;
  };

  for (const stmt of abstract.statements) {
    if (stmt.kind === "det") {
      if (segment >= nSegments) throw new Error("abstract program overruns segments");
      push(null);
    } else {
      loopIndex += 1;
      const bodySize = stmt.body.length;
      for (let iteration = 0; iteration < stmt.iter; iteration++) {
        for (let bodyPosition = 0; bodyPosition < bodySize; bodyPosition++) {
          if (segment >= nSegments) throw new Error("abstract program overruns segments");
          push({ loopIndex, iteration, bodyPosition, iterations: stmt.iter, bodySize });
        }
      }
    }
  }
  if (segment !== nSegments) {
    throw new Error(`abstract program covers ${segment} of ${nSegments} segments`);
  }
  return blocks;
}

/** Timeline durations must sum to the executed frame count. */
export function totalFrames(timeline: TimelineBlock[]): number {
  return timeline.reduce((acc, b) => acc + b.duration, 0);
}

export function clampPlayhead(frame: number, total: number): number {
  if (!Number.isFinite(frame) || frame < 0) return 0;
  return Math.min(Math.floor(frame), Math.max(0, total - 1));
}

/** Index of the block containing a frame (last block for the final frame). */
export function blockAt(timeline: TimelineBlock[], frame: number): number {
  for (let i = 0; i < timeline.length; i++) {
    if (frame < timeline[i].endFrame) return i;
  }
  return timeline.length - 1;
}

export function loopCount(timeline: TimelineBlock[]): number {
  let highest = -1;
  for (const block of timeline) {
    if (block.loop) highest = Math.max(highest, block.loop.loopIndex);
  }
  return highest + 1;
}
