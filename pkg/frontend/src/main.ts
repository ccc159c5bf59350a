/** DOM wiring for the editor: timeline, loop badges, parameter panel, playback. */

import { ApiClient } from "./api.js";
import { EditorController, SessionView } from "./editor.js";
import { drawSkeleton, skeletonFrame } from "./skeleton.js";
import { blockAt } from "./timeline.js";
import type { PoseFile } from "./types.js";

const KIND_COLORS: Record<string, string> = {
  circle: "#d4872a",
  line: "#4a8fd4",
  stationary: "#7a7a7a",
  mixed: "#9b6bb0",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class EditorApp {
  private controller: EditorController;
  private playing = false;
  private lastTick = 0;
  private playheadFloat = 0;

  constructor(api: ApiClient) {
    this.controller = new EditorController(api);
  }

  banner(message: string, isError = true): void {
    const banner = el<HTMLDivElement>("banner");
    banner.textContent = message;
    banner.className = message ? (isError ? "banner error" : "banner info") : "banner";
  }

  async load(): Promise<void> {
    let pose: PoseFile;
    try {
      pose = JSON.parse(el<HTMLTextAreaElement>("pose-input").value) as PoseFile;
    } catch (e) {
      this.banner(`pose file is not valid JSON: ${e}`);
      return;
    }
    try {
      const view = await this.controller.loadSession(pose, this.readParams());
      this.banner(`session ${view.state.sessionId.slice(0, 8)}… loaded`, false);
      this.render();
    } catch (e) {
      this.banner(`load failed: ${e}`);
    }
  }

  async resynthesize(): Promise<void> {
    try {
      await this.controller.resynthesize(this.readParams());
      this.banner("re-synthesized", false);
      this.render();
    } catch (e) {
      this.banner(`re-synthesis failed: ${e}`);
    }
  }

  private readParams() {
    const num = (id: string) => {
      const raw = el<HTMLInputElement>(id).value.trim();
      return raw === "" ? undefined : Number(raw);
    };
    return {
      tau: num("param-tau"),
      lambda_coeff: num("param-lambda"),
      max_body: num("param-max-body"),
    };
  }

  private async applyLoopEdit(loopIndex: number, input: HTMLInputElement): Promise<void> {
    const value = Number(input.value);
    if (!Number.isInteger(value) || value < 1) {
      this.banner(`iterations must be a positive integer, got ${input.value}`);
      return;
    }
    try {
      await this.controller.editLoop(loopIndex, value);
      this.banner(`loop ${loopIndex} set to x${value}`, false);
    } catch (e) {
      this.banner(`edit rejected: ${e}`);
    }
    this.render();
  }

  render(): void {
    if (!this.controller.loaded) return;
    const view = this.controller.view;
    this.renderTimeline(view);
    this.renderScrubber(view);
    this.renderFrame();
    el<HTMLPreElement>("program-dump").textContent =
      this.controller.programText("abstract");
  }

  private renderTimeline(view: SessionView): void {
    const host = el<HTMLDivElement>("timeline");
    host.textContent = "";
    const total = Math.max(1, view.state.totalFrames);
    const currentBlock = blockAt(view.state.timeline, view.state.playhead);

    let i = 0;
    const blocks = view.state.timeline;
    while (i < blocks.length) {
      const block = blocks[i];
      if (block.loop === null) {
        host.appendChild(this.blockDiv(view, i, currentBlock));
        i += 1;
        continue;
      }
      // One bordered group per loop with an iteration badge and editor.
      const loopIndex = block.loop.loopIndex;
      const group = document.createElement("div");
      group.className = "loop-group";
      const badge = document.createElement("span");
      badge.className = "loop-badge";
      badge.textContent = `×${block.loop.iterations}`;
      const iterInput = document.createElement("input");
      iterInput.type = "number";
      iterInput.min = "1";
      iterInput.value = String(block.loop.iterations);
      iterInput.className = "loop-iter";
      iterInput.addEventListener("change", () => {
        void this.applyLoopEdit(loopIndex, iterInput);
      });
      group.appendChild(badge);
      group.appendChild(iterInput);
      while (i < blocks.length && blocks[i].loop?.loopIndex === loopIndex) {
        group.appendChild(this.blockDiv(view, i, currentBlock));
        i += 1;
      }
      host.appendChild(group);
    }
    el<HTMLSpanElement>("frame-total").textContent = String(total);
  }

  private blockDiv(view: SessionView, index: number, currentBlock: number): HTMLDivElement {
    const block = view.state.timeline[index];
    const node = document.createElement("div");
    node.className = "block" + (index === currentBlock ? " current" : "");
    node.style.background = KIND_COLORS[block.kind];
    node.style.flexGrow = String(block.duration);
    node.title = `${block.kind} [${block.startFrame},${block.endFrame}) ` +
      (block.loop ? `iteration ${block.loop.iteration + 1}/${block.loop.iterations}` : "");
    node.addEventListener("click", () => {
      this.setPlayhead(block.startFrame);
    });
    return node;
  }

  private renderScrubber(view: SessionView): void {
    const scrubber = el<HTMLInputElement>("scrubber");
    scrubber.max = String(Math.max(0, view.state.totalFrames - 1));
    scrubber.value = String(view.state.playhead);
    el<HTMLSpanElement>("frame-now").textContent = String(view.state.playhead);
  }

  private renderFrame(): void {
    const view = this.controller.view;
    const canvas = el<HTMLCanvasElement>("preview");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const frame = skeletonFrame(view.poses, view.state.playhead);
    drawSkeleton(ctx, frame, {
      width: canvas.width,
      height: canvas.height,
      sourceWidth: view.poses.width,
      sourceHeight: view.poses.height,
    });
  }

  setPlayhead(frame: number): void {
    if (!this.controller.loaded) return;
    this.playheadFloat = this.controller.setPlayhead(frame);
    const view = this.controller.view;
    this.renderScrubber(view);
    this.renderTimeline(view);
    this.renderFrame();
  }

  togglePlay(): void {
    this.playing = !this.playing;
    el<HTMLButtonElement>("play").textContent = this.playing ? "Pause" : "Play";
    if (this.playing) {
      this.lastTick = performance.now();
      requestAnimationFrame((t) => this.tick(t));
    }
  }

  private tick(now: number): void {
    if (!this.playing || !this.controller.loaded) return;
    const view = this.controller.view;
    const dt = (now - this.lastTick) / 1000;
    this.lastTick = now;
    this.playheadFloat += dt * view.poses.fps * view.state.playbackRate;
    if (this.playheadFloat >= view.state.totalFrames) {
      this.playheadFloat = 0; // wrap around
    }
    this.setPlayhead(Math.floor(this.playheadFloat));
    requestAnimationFrame((t) => this.tick(t));
  }

  bind(): void {
    el<HTMLButtonElement>("load").addEventListener("click", () => void this.load());
    el<HTMLButtonElement>("resynthesize").addEventListener("click",
      () => void this.resynthesize());
    el<HTMLButtonElement>("play").addEventListener("click", () => this.togglePlay());
    el<HTMLInputElement>("scrubber").addEventListener("input", (e) => {
      this.setPlayhead(Number((e.target as HTMLInputElement).value));
    });
    el<HTMLSelectElement>("rate").addEventListener("change", (e) => {
      this.controller.setPlaybackRate(Number((e.target as HTMLSelectElement).value));
    });
  }
}

export function start(baseUrl?: string): EditorApp {
  const url = baseUrl ??
    (document.querySelector("meta[name=service-url]") as HTMLMetaElement | null)?.content ??
    "http://127.0.0.1:8707";
  const app = new EditorApp(new ApiClient(url));
  app.bind();
  return app;
}

declare global {
  interface Window {
    motionprogEditor?: EditorApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("timeline")) {
  window.motionprogEditor = start();
}
