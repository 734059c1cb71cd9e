import type { SequenceDoc } from "./sequence.js";
import { parseSequence } from "./sequence.js";

/** Talks to the synthesis service. At most one request is in flight; a
 * response is dropped as stale if a newer request was issued meanwhile. */

export interface SynthesisResponse {
  sequence_id: string;
  sequence: SequenceDoc;
  label_vector: number[];
  class_names: string[];
  checkpoint: string;
  seed: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

export class SynthesisClient {
  private requestCounter = 0;
  private inFlight = false;
  private pendingRun: (() => Promise<SynthesisResponse | null>) | null = null;
  private pendingResolve: ((r: SynthesisResponse | null) => void) | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  get hasInFlight(): boolean {
    return this.inFlight;
  }

  async classes(): Promise<string[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/classes`);
    if (!resp.ok) throw new ServiceError(`GET /classes failed`, resp.status);
    const body = (await resp.json()) as { class_names: string[] };
    return body.class_names;
  }

  async health(): Promise<boolean> {
    try {
      const resp = await this.fetchFn(`${this.baseUrl}/health`);
      return resp.ok;
    } catch {
      return false;
    }
  }

  /**
   * Issue a synthesis request. Resolves with the parsed response, or null
   * when a newer request superseded this one (stale responses are dropped,
   * and calls made while a request is in flight coalesce to the latest).
   */
  async synthesize(
    motionA: SequenceDoc,
    labelSpec: Record<string, number>,
    seed = 0,
  ): Promise<SynthesisResponse | null> {
    const ticket = ++this.requestCounter;
    if (this.inFlight) {
      // queue only the newest request; any displaced one resolves as stale
      return new Promise((resolve) => {
        this.pendingResolve?.(null);
        this.pendingResolve = resolve;
        this.pendingRun = () => this.synthesize(motionA, labelSpec, seed);
      });
    }
    this.inFlight = true;
    try {
      const resp = await this.fetchFn(`${this.baseUrl}/synthesize`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
          motion_a: motionA,
          label_spec: labelSpec,
          options: { seed, clamp_labels: true },
        }),
      });
      if (!resp.ok) {
        const text = await resp.text();
        throw new ServiceError(`synthesis failed: ${text}`, resp.status);
      }
      const body = (await resp.json()) as SynthesisResponse;
      parseSequence(body.sequence); // malformed payloads surface here, not mid-render
      if (ticket !== this.requestCounter) return null; // superseded while in flight
      return body;
    } finally {
      this.inFlight = false;
      const run = this.pendingRun;
      const resolve = this.pendingResolve;
      this.pendingRun = null;
      this.pendingResolve = null;
      if (run && resolve) void run().then(resolve);
    }
  }
}
