/**
 * Canonical sequence documents as served by the synthesis service:
 * a self-describing JSON object carrying the skeleton definition,
 * frame rate, and a TxJx3 coordinate array.
 */

export interface SkeletonDef {
  name: string;
  joint_names: string[];
  parent_index: number[];
  rest_offsets: number[][];
  partition: Record<string, number[]>;
}

export interface SequenceDoc {
  format: string;
  version: number;
  skeleton: SkeletonDef;
  frame_rate: number;
  frames: number[][][];
}

export interface Bone {
  parent: number;
  child: number;
}

export class SequenceParseError extends Error {}

const FORMAT = "reactive-motion/sequence";

export function parseSequence(doc: unknown): SequenceDoc {
  if (typeof doc !== "object" || doc === null) {
    throw new SequenceParseError("sequence document must be an object");
  }
  const d = doc as Record<string, unknown>;
  if (d.format !== FORMAT) {
    throw new SequenceParseError(`not a sequence document (format=${String(d.format)})`);
  }
  if (d.version !== 1) {
    throw new SequenceParseError(`unsupported version ${String(d.version)}`);
  }
  const skeleton = d.skeleton as SkeletonDef | undefined;
  if (!skeleton || !Array.isArray(skeleton.joint_names) || !Array.isArray(skeleton.parent_index)) {
    throw new SequenceParseError("missing or malformed skeleton block");
  }
  if (skeleton.joint_names.length !== skeleton.parent_index.length) {
    throw new SequenceParseError("joint_names and parent_index lengths differ");
  }
  const frames = d.frames as number[][][] | undefined;
  if (!Array.isArray(frames) || frames.length === 0) {
    throw new SequenceParseError("frames array is missing or empty");
  }
  const j = skeleton.joint_names.length;
  for (const [t, frame] of frames.entries()) {
    if (!Array.isArray(frame) || frame.length !== j) {
      throw new SequenceParseError(`frame ${t} has ${frame?.length ?? 0} joints, expected ${j}`);
    }
    for (const p of frame) {
      if (!Array.isArray(p) || p.length !== 3 || p.some((v) => typeof v !== "number" || !isFinite(v))) {
        throw new SequenceParseError(`frame ${t} contains a malformed coordinate`);
      }
    }
  }
  if (typeof d.frame_rate !== "number" || d.frame_rate <= 0) {
    throw new SequenceParseError("frame_rate must be a positive number");
  }
  return d as unknown as SequenceDoc;
}

/** Parent->child segments; a J-joint skeleton renders J-1 bones. */
export function bonesOf(skeleton: SkeletonDef): Bone[] {
  const bones: Bone[] = [];
  skeleton.parent_index.forEach((parent, child) => {
    if (parent >= 0) bones.push({ parent, child });
  });
  return bones;
}

export function frameCount(seq: SequenceDoc): number {
  return seq.frames.length;
}
