/** Typed client for the motion-program HTTP service.
 *
 * Program documents are kept as the exact response text alongside the
 * parsed value, so the UI can render precisely what the service returned.
 */

import type {
  AbstractProgramFile,
  ConcreteProgramFile,
  LoopPatched,
  PoseFile,
  SessionCreated,
  SynthesisParams,
  ValidationReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(`${status}: ${message}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { error?: string };
    if (body && typeof body.error === "string") return body.error;
  } catch {
    /* non-JSON error body */
  }
  return resp.statusText || "request failed";
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) throw new ApiError(resp.status, await errorMessage(resp));
    return resp;
  }

  async createSession(pose: PoseFile, params?: SynthesisParams): Promise<SessionCreated> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) query.set(key, String(value));
    }
    const qs = query.size > 0 ? `?${query.toString()}` : "";
    const resp = await this.request(`/sessions${qs}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(pose),
    });
    return (await resp.json()) as SessionCreated;
  }

  /** Raw program document text: the byte-for-byte source of truth. */
  async getProgramText(id: string, level: "concrete" | "abstract"): Promise<string> {
    const resp = await this.request(`/sessions/${id}/program?level=${level}`);
    return resp.text();
  }

  async getConcrete(id: string): Promise<{ text: string; program: ConcreteProgramFile }> {
    const text = await this.getProgramText(id, "concrete");
    return { text, program: JSON.parse(text) as ConcreteProgramFile };
  }

  async getAbstract(id: string): Promise<{ text: string; program: AbstractProgramFile }> {
    const text = await this.getProgramText(id, "abstract");
    return { text, program: JSON.parse(text) as AbstractProgramFile };
  }

  async patchLoop(id: string, loopIndex: number, iter: number, seed?: number): Promise<LoopPatched> {
    const body: { iter: number; seed?: number } = { iter };
    if (seed !== undefined) body.seed = seed;
    const resp = await this.request(`/sessions/${id}/loops/${loopIndex}`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await resp.json()) as LoopPatched;
  }

  /**
   * Execute the session's program.  level "concrete" (the default) is the
   * deterministic execution of the canonical program; level "abstract"
   * re-samples the loops with the given or derived seed.
   */
  async execute(
    id: string,
    opts?: { factor?: number; seed?: number; level?: "concrete" | "abstract" },
  ): Promise<{ poses: PoseFile; seed: number }> {
    const resp = await this.request(`/sessions/${id}/execute`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(opts ?? {}),
    });
    const poses = (await resp.json()) as PoseFile;
    const seed = Number(resp.headers.get("X-Seed") ?? opts?.seed ?? 0);
    return { poses, seed };
  }

  async validate(id: string): Promise<ValidationReport> {
    const resp = await this.request(`/sessions/${id}/validate`);
    return (await resp.json()) as ValidationReport;
  }

  async deleteSession(id: string): Promise<void> {
    await this.request(`/sessions/${id}`, { method: "DELETE" });
  }
}
