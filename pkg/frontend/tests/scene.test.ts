import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { SynthesisClient } from "../src/client.js";
import { ViewerScene } from "../src/scene.js";
import { makeSequenceDoc, makeServiceStub } from "./stubs.js";

describe("ViewerScene", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  function makeScene(stub = makeServiceStub()) {
    const client = new SynthesisClient("http://svc", stub.fetchFn);
    const scene = new ViewerScene(client, ["kick", "hug"], {}, 300);
    return { scene, stub };
  }

  it("loads a canonical sequence and sizes the timeline", () => {
    const { scene } = makeScene();
    scene.loadInput(makeSequenceDoc(7, 5));
    expect(scene.input).not.toBeNull();
    expect(scene.clock.frameCount).toBe(7);
    expect(scene.generated).toBeNull();
  });

  it("rejects a corrupt document and keeps prior state", () => {
    const { scene } = makeScene();
    scene.loadInput(makeSequenceDoc(7, 5));
    const before = scene.input;
    expect(() => scene.loadInput({ format: "bogus" })).toThrow();
    expect(scene.input).toBe(before); // no partial load
  });

  it("two-hot sliders produce exactly one debounced request with a two-entry body", async () => {
    const { scene, stub } = makeScene();
    scene.loadInput(makeSequenceDoc(4, 5));
    // slider spam within the debounce window
    scene.setSlider("kick", 0.4);
    scene.setSlider("kick", 0.8);
    scene.setSlider("hug", 0.6);
    scene.setSlider("hug", 1.0);
    expect(stub.synthesizeCalls()).toHaveLength(0); // nothing before the window closes
    await vi.advanceTimersByTimeAsync(299);
    expect(stub.synthesizeCalls()).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(2);
    await vi.runAllTimersAsync();
    const calls = stub.synthesizeCalls();
    expect(calls).toHaveLength(1);
    expect(calls[0].body?.label_spec).toEqual({ kick: 0.8, hug: 1.0 });
  });

  it("applies the response in place and records history", async () => {
    const { scene, stub } = makeScene();
    scene.loadInput(makeSequenceDoc(4, 5));
    scene.setSlider("hug", 1.0);
    await vi.advanceTimersByTimeAsync(301);
    await vi.runAllTimersAsync();
    expect(scene.generated).not.toBeNull();
    expect(scene.displayedLabelVector).toEqual([0, 1]);
    expect(scene.history).toHaveLength(1);
    expect(scene.history[0].labels).toEqual({ hug: 1.0 });
    expect(scene.history[0].sequenceId).toBe("seq-1");
    // slider state equals the labels of the displayed generation
    expect(scene.labelState.hug).toBe(1.0);
    expect(stub.synthesizeCalls()).toHaveLength(1);
  });

  it("clamps slider values to [-1, 1]", () => {
    const { scene } = makeScene();
    scene.loadInput(makeSequenceDoc(4, 5));
    scene.setSlider("kick", 3.5);
    expect(scene.labelState.kick).toBe(1);
    scene.setSlider("kick", -2);
    expect(scene.labelState.kick).toBe(-1);
    expect(() => scene.setSlider("waltz", 1)).toThrow(/unknown class/);
  });

  it("keeps both characters frame-locked after regeneration", async () => {
    const stub = makeServiceStub({ frames: 4, joints: 5 });
    const { scene } = makeScene(stub);
    scene.loadInput(makeSequenceDoc(4, 5));
    scene.clock.seek(3);
    scene.setSlider("kick", 1.0);
    await vi.advanceTimersByTimeAsync(301);
    await vi.runAllTimersAsync();
    expect(scene.generated?.frames).toHaveLength(4);
    expect(scene.playhead).toBe(3); // shared playhead survives the swap
  });

  it("reports service failures and retains the last good result", async () => {
    const errors: string[] = [];
    const stub = makeServiceStub();
    const client = new SynthesisClient("http://svc", stub.fetchFn);
    const scene = new ViewerScene(client, ["kick", "hug"], { onError: (m) => errors.push(m) }, 300);
    scene.loadInput(makeSequenceDoc(4, 5));
    scene.setSlider("kick", 1.0);
    await vi.advanceTimersByTimeAsync(301);
    await vi.runAllTimersAsync();
    const kept = scene.generated;
    expect(kept).not.toBeNull();

    stub.state.failing = true;
    await scene.regenerate();
    expect(errors.length).toBeGreaterThan(0);
    expect(scene.generated).toBe(kept); // non-blocking failure keeps the last result
  });
});
