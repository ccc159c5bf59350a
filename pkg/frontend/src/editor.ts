/** Editor controller: session lifecycle, loop edits, execution preview.
 *
 * The service is the single source of truth: every displayed program is the
 * literal text of a GET /program response (re-fetched after each mutation),
 * never a locally mutated or re-serialized document.  Mutations are queued
 * so at most one is in flight per session; a rejected edit leaves the
 * previous state intact.
 */

import { ApiClient } from "./api.js";
import type {
  AbstractProgramFile,
  ConcreteProgramFile,
  PoseFile,
  SynthesisParams,
} from "./types.js";
import {
  TimelineBlock,
  ViewState,
  buildTimeline,
  clampPlayhead,
  loopCount,
  totalFrames,
} from "./timeline.js";

export interface SessionView {
  state: ViewState;
  concrete: ConcreteProgramFile;
  abstract: AbstractProgramFile;
  /** Executed poses for playback (refreshed after each edit). */
  poses: PoseFile;
  executionSeed: number;
}

export class EditorController {
  private session: SessionView | null = null;
  private concreteText = "";
  private abstractText = "";
  private mutationQueue: Promise<unknown> = Promise.resolve();
  private pending = 0;
  private lastParams: SynthesisParams | undefined;
  private sourcePose: PoseFile | null = null;

  constructor(private readonly api: ApiClient) {}

  get view(): SessionView {
    if (!this.session) throw new Error("no session loaded");
    return this.session;
  }

  get loaded(): boolean {
    return this.session !== null;
  }

  /** The raw program document currently rendered (service response text). */
  programText(level: "concrete" | "abstract"): string {
    if (!this.session) throw new Error("no session loaded");
    return level === "concrete" ? this.concreteText : this.abstractText;
  }

  async loadSession(pose: PoseFile, params?: SynthesisParams): Promise<SessionView> {
    const created = await this.api.createSession(pose, params);
    this.sourcePose = pose;
    this.lastParams = params;
    return this.refreshFromService(created.id, 0);
  }

  /** Re-synthesize with new knobs as a fresh session snapshot. */
  async resynthesize(params: SynthesisParams): Promise<SessionView> {
    if (!this.sourcePose) throw new Error("no session loaded");
    const merged = { ...this.lastParams, ...params };
    const previous = this.session;
    const view = await this.loadSession(this.sourcePose, merged);
    if (previous) {
      view.state.playhead = clampPlayhead(previous.state.playhead, view.state.totalFrames);
      view.state.playbackRate = previous.state.playbackRate;
    }
    return view;
  }

  /**
   * Change a loop's iteration count.  Validates locally (iter >= 1 and the
   * loop must exist), queues behind other mutations, and re-fetches both
   * program documents and the execution afterward.
   */
  editLoop(loopIndex: number, newIter: number): Promise<SessionView> {
    if (!this.session) return Promise.reject(new Error("no session loaded"));
    if (!Number.isInteger(newIter) || newIter < 1) {
      return Promise.reject(new RangeError(`iter must be a positive integer, got ${newIter}`));
    }
    if (loopIndex < 0 || loopIndex >= loopCount(this.session.state.timeline)) {
      return Promise.reject(new RangeError(`no loop ${loopIndex}`));
    }
    const id = this.session.state.sessionId;
    this.pending += 1;
    if (this.session) this.session.state.pendingEdits = this.pending;
    const run = this.mutationQueue.then(async () => {
      try {
        const patched = await this.api.patchLoop(id, loopIndex, newIter);
        return await this.refreshFromService(id, patched.seed);
      } finally {
        this.pending -= 1;
        if (this.session) this.session.state.pendingEdits = this.pending;
      }
    });
    // Keep the queue alive after failures so later edits still run.
    this.mutationQueue = run.catch(() => undefined);
    return run;
  }

  setPlayhead(frame: number): number {
    const view = this.view;
    view.state.playhead = clampPlayhead(frame, view.state.totalFrames);
    return view.state.playhead;
  }

  setPlaybackRate(rate: number): void {
    if (!(rate > 0)) throw new RangeError("playback rate must be positive");
    this.view.state.playbackRate = rate;
  }

  private async refreshFromService(id: string, seed: number): Promise<SessionView> {
    const [concreteText, abstractText] = await Promise.all([
      this.api.getProgramText(id, "concrete"),
      this.api.getProgramText(id, "abstract"),
    ]);
    const concrete = JSON.parse(concreteText) as ConcreteProgramFile;
    const abstract = JSON.parse(abstractText) as AbstractProgramFile;
    // Deterministic execution of the canonical program: frame counts always
    // match the concrete boundaries, which the timeline mirrors.
    const { poses } = await this.api.execute(id, {});
    const usedSeed = seed;
    const timeline: TimelineBlock[] = buildTimeline(concrete, abstract);
    const total = totalFrames(timeline);
    if (total !== poses.frames.length) {
      throw new Error(`timeline covers ${total} frames, execution has ${poses.frames.length}`);
    }
    const previous = this.session;
    const state: ViewState = {
      sessionId: id,
      timeline,
      totalFrames: total,
      playhead: clampPlayhead(previous?.state.playhead ?? 0, total),
      playbackRate: previous?.state.playbackRate ?? 1,
      pendingEdits: this.pending,
    };
    this.session = { state, concrete, abstract, poses, executionSeed: usedSeed };
    this.concreteText = concreteText;
    this.abstractText = abstractText;
    return this.session;
  }
}
