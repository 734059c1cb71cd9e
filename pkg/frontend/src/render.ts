import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import type { SequenceDoc } from "./sequence.js";
import { bonesOf } from "./sequence.js";

/**
 * Skeletal line rendering: orthographic camera with orbit control, ground
 * grid, one line segment set per character. Input is blue, generated green.
 */
export class SkeletonRenderer {
  private readonly scene = new THREE.Scene();
  private readonly renderer: THREE.WebGLRenderer;
  private readonly camera: THREE.OrthographicCamera;
  private readonly controls: OrbitControls;
  private characters = new Map<string, THREE.LineSegments>();

  constructor(container: HTMLElement) {
    const width = container.clientWidth || 800;
    const height = container.clientHeight || 600;
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(width, height);
    container.appendChild(this.renderer.domElement);

    const aspect = width / height;
    const view = 2.5;
    this.camera = new THREE.OrthographicCamera(
      -view * aspect, view * aspect, view, -view, 0.01, 100,
    );
    this.camera.position.set(3, 2, 4);
    this.camera.lookAt(0, 1, 0);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.target.set(0, 1, 0);

    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.GridHelper(8, 16, 0x334455, 0x223344));
  }

  setCharacter(id: string, seq: SequenceDoc, color: number): void {
    this.removeCharacter(id);
    const bones = bonesOf(seq.skeleton);
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute(
      "position",
      new THREE.BufferAttribute(new Float32Array(bones.length * 6), 3),
    );
    const lines = new THREE.LineSegments(
      geometry,
      new THREE.LineBasicMaterial({ color, linewidth: 2 }),
    );
    lines.userData = { seq, bones };
    this.characters.set(id, lines);
    this.scene.add(lines);
  }

  removeCharacter(id: string): void {
    const existing = this.characters.get(id);
    if (existing) {
      this.scene.remove(existing);
      existing.geometry.dispose();
      this.characters.delete(id);
    }
  }

  /** Pose every character at the shared playhead and draw. */
  renderFrame(playhead: number): void {
    for (const lines of this.characters.values()) {
      const { seq, bones } = lines.userData as {
        seq: SequenceDoc;
        bones: { parent: number; child: number }[];
      };
      const t = Math.min(playhead, seq.frames.length - 1);
      const frame = seq.frames[t];
      const attr = lines.geometry.getAttribute("position") as THREE.BufferAttribute;
      bones.forEach((bone, i) => {
        const p = frame[bone.parent];
        const c = frame[bone.child];
        attr.setXYZ(2 * i, p[0], p[1], p[2]);
        attr.setXYZ(2 * i + 1, c[0], c[1], c[2]);
      });
      attr.needsUpdate = true;
    }
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  }
}
