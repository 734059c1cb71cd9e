/** Frame-locked playback over the shared timeline of both characters. */

export interface PlaybackState {
  playing: boolean;
  playhead: number; // frame index in [0, frameCount)
  speed: number;   // 1 = real time
}

export class PlaybackClock {
  state: PlaybackState = { playing: false, playhead: 0, speed: 1 };
  private fractional = 0;

  constructor(
    public frameCount: number,
    public frameRate: number,
  ) {}

  play(): void {
    this.state.playing = true;
  }

  pause(): void {
    this.state.playing = false;
  }

  /** Seeks clamp into the valid frame range. */
  seek(frame: number): void {
    const clamped = Math.min(Math.max(Math.round(frame), 0), this.frameCount - 1);
    this.state.playhead = clamped;
    this.fractional = clamped;
  }

  setSpeed(speed: number): void {
    if (speed > 0) this.state.speed = speed;
  }

  /** Advance by wall-clock dt (seconds); loops at the end of the clip. */
  tick(dtSeconds: number): number {
    if (this.state.playing && this.frameCount > 1) {
      this.fractional += dtSeconds * this.frameRate * this.state.speed;
      this.fractional %= this.frameCount;
      this.state.playhead = Math.floor(this.fractional);
    }
    return this.state.playhead;
  }

  /** Clip changed (e.g. regenerated); keep the playhead in range. */
  setFrameCount(frames: number): void {
    this.frameCount = frames;
    this.seek(this.state.playhead);
  }
}
