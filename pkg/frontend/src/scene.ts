import type { SynthesisClient, SynthesisResponse } from "./client.js";
import { debounce } from "./debounce.js";
import { PlaybackClock } from "./playback.js";
import type { SequenceDoc } from "./sequence.js";
import { frameCount, parseSequence } from "./sequence.js";

export interface HistoryEntry {
  labels: Record<string, number>;
  sequenceId: string;
}

export interface ViewerEvents {
  onGenerated?: (response: SynthesisResponse) => void;
  onError?: (message: string) => void;
}

const clamp = (v: number) => Math.min(1, Math.max(-1, v));

/**
 * Mix-and-match console state: one input clip, one generated reaction,
 * per-class sliders in [-1, 1], and a debounced regenerate round-trip.
 * Both characters share the playhead (the service guarantees equal length).
 */
export class ViewerScene {
  input: SequenceDoc | null = null;
  generated: SequenceDoc | null = null;
  labelState: Record<string, number> = {};
  displayedLabelVector: number[] | null = null;
  history: HistoryEntry[] = [];
  clock = new PlaybackClock(1, 30);

  private readonly requestRegenerate: (() => void) & { cancel(): void };

  constructor(
    private readonly client: SynthesisClient,
    public classNames: string[],
    private readonly events: ViewerEvents = {},
    debounceMs = 300,
  ) {
    for (const name of classNames) this.labelState[name] = 0;
    this.requestRegenerate = debounce(() => void this.regenerate(), debounceMs);
  }

  /** Load the input clip; rejects malformed documents without partial state. */
  loadInput(doc: unknown): void {
    const seq = parseSequence(doc); // throws before any state is touched
    this.input = seq;
    this.generated = null;
    this.displayedLabelVector = null;
    this.clock = new PlaybackClock(frameCount(seq), seq.frame_rate);
  }

  /** Slider movement: clamp, store, and schedule one debounced request. */
  setSlider(className: string, value: number): void {
    if (!(className in this.labelState)) {
      throw new Error(`unknown class ${className}`);
    }
    this.labelState[className] = clamp(value);
    if (this.input !== null) this.requestRegenerate();
  }

  /** Nonzero slider entries only: a two-hot state makes a two-entry body. */
  labelSpec(): Record<string, number> {
    const spec: Record<string, number> = {};
    for (const [name, value] of Object.entries(this.labelState)) {
      if (value !== 0) spec[name] = value;
    }
    return spec;
  }

  async regenerate(seed = 0): Promise<void> {
    if (this.input === null) return;
    try {
      const response = await this.client.synthesize(this.input, this.labelSpec(), seed);
      if (response === null) return; // superseded by a newer request
      this.applyResponse(response);
    } catch (err) {
      this.events.onError?.(err instanceof Error ? err.message : String(err));
      // last good generation is retained
    }
  }

  private applyResponse(response: SynthesisResponse): void {
    this.generated = response.sequence;
    this.displayedLabelVector = response.label_vector;
    this.history.push({ labels: { ...this.labelSpec() }, sequenceId: response.sequence_id });
    const frames = frameCount(response.sequence);
    if (this.input !== null && frames === frameCount(this.input)) {
      this.clock.setFrameCount(frames); // keeps both characters frame-locked
    }
    this.events.onGenerated?.(response);
  }

  /** Shared playhead for input and generated characters. */
  get playhead(): number {
    return this.clock.state.playhead;
  }

  cancelPendingRegenerate(): void {
    this.requestRegenerate.cancel();
  }
}
