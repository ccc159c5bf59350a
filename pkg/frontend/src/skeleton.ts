/** Skeleton frames and canvas rendering. */

import type { PoseFile } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export interface SkeletonFrame {
  points: Record<string, Point>;
  bones: [string, string][];
}

/** Bone connectivity over the 17-joint COCO naming. */
export const COCO_BONES: [string, string][] = [
  ["nose", "left_eye"],
  ["nose", "right_eye"],
  ["left_eye", "left_ear"],
  ["right_eye", "right_ear"],
  ["left_shoulder", "right_shoulder"],
  ["left_shoulder", "left_elbow"],
  ["left_elbow", "left_wrist"],
  ["right_shoulder", "right_elbow"],
  ["right_elbow", "right_wrist"],
  ["left_shoulder", "left_hip"],
  ["right_shoulder", "right_hip"],
  ["left_hip", "right_hip"],
  ["left_hip", "left_knee"],
  ["left_knee", "left_ankle"],
  ["right_hip", "right_knee"],
  ["right_knee", "right_ankle"],
];

/** Bones whose two endpoints both exist in the given joint set. */
export function bonesFor(joints: string[]): [string, string][] {
  const have = new Set(joints);
  return COCO_BONES.filter(([a, b]) => have.has(a) && have.has(b));
}

export function skeletonFrame(pose: PoseFile, frameIndex: number): SkeletonFrame {
  if (frameIndex < 0 || frameIndex >= pose.frames.length) {
    throw new RangeError(`frame ${frameIndex} out of range (${pose.frames.length})`);
  }
  const points: Record<string, Point> = {};
  pose.joints.forEach((joint, j) => {
    const [x, y] = pose.frames[frameIndex][j];
    points[joint] = { x, y };
  });
  return { points, bones: bonesFor(pose.joints) };
}

/** The subset of CanvasRenderingContext2D the renderer needs (testable). */
export interface DrawContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export interface DrawOptions {
  width: number;
  height: number;
  sourceWidth: number;
  sourceHeight: number;
  boneColor?: string;
  jointColor?: string;
  jointRadius?: number;
}

export function drawSkeleton(ctx: DrawContext, frame: SkeletonFrame, opts: DrawOptions): void {
  const sx = opts.width / opts.sourceWidth;
  const sy = opts.height / opts.sourceHeight;
  ctx.clearRect(0, 0, opts.width, opts.height);
  ctx.strokeStyle = opts.boneColor ?? "#4a8fd4";
  ctx.lineWidth = 2;
  for (const [a, b] of frame.bones) {
    const pa = frame.points[a];
    const pb = frame.points[b];
    ctx.beginPath();
    ctx.moveTo(pa.x * sx, pa.y * sy);
    ctx.lineTo(pb.x * sx, pb.y * sy);
    ctx.stroke();
  }
  ctx.fillStyle = opts.jointColor ?? "#e05252";
  const r = opts.jointRadius ?? 3;
  for (const p of Object.values(frame.points)) {
    ctx.beginPath();
    ctx.arc(p.x * sx, p.y * sy, r, 0, 2 * Math.PI);
    ctx.fill();
  }
}
