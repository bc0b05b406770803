import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import { CompareModel } from "./compare_model.js";
import {
  buildTerrainGeometry,
  heatColors,
  heightDifference,
  type TerrainGrid,
} from "./heights.js";

const SURFACE_COLOR = 0x8899bb;

function makeMesh(grid: TerrainGrid): THREE.Mesh {
  const arrays = buildTerrainGeometry(grid);
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(arrays.positions, 3));
  geometry.setIndex(new THREE.BufferAttribute(arrays.indices, 1));
  geometry.computeVertexNormals();
  const material = new THREE.MeshStandardMaterial({
    color: SURFACE_COLOR,
    flatShading: false,
    side: THREE.DoubleSide,
  });
  return new THREE.Mesh(geometry, material);
}

class Slot {
  readonly scene = new THREE.Scene();
  readonly renderer: THREE.WebGLRenderer;
  mesh: THREE.Mesh | null = null;
  readonly caption: HTMLElement;

  constructor(host: HTMLElement) {
    const canvas = host.ownerDocument.createElement("canvas");
    host.appendChild(canvas);
    this.caption = host.ownerDocument.createElement("div");
    this.caption.className = "slot-caption";
    host.appendChild(this.caption);
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setSize(host.clientWidth || 420, 320);
    this.scene.background = new THREE.Color(0x10141c);
    const key = new THREE.DirectionalLight(0xffffff, 2.2);
    key.position.set(1.2, 1.5, 2.5);
    this.scene.add(key, new THREE.AmbientLight(0xffffff, 0.35));
  }

  setMesh(grid: TerrainGrid | null): void {
    if (this.mesh) {
      this.scene.remove(this.mesh);
      this.mesh.geometry.dispose();
      (this.mesh.material as THREE.Material).dispose();
      this.mesh = null;
    }
    if (grid) {
      this.mesh = makeMesh(grid);
      this.scene.add(this.mesh);
    }
  }
}

/**
 * Side-by-side reconstruction viewer. Both slots render through ONE
 * camera driven by one set of orbit controls, so orbit and zoom are
 * synchronized by construction rather than by event plumbing.
 */
export class CompareView {
  readonly model = new CompareModel();
  private readonly slots: [Slot, Slot];
  private readonly camera: THREE.PerspectiveCamera;
  private readonly controls: OrbitControls;
  private differenceOn = false;

  constructor(left: HTMLElement, right: HTMLElement) {
    this.slots = [new Slot(left), new Slot(right)];
    this.camera = new THREE.PerspectiveCamera(45, 4 / 3, 0.01, 100);
    this.camera.position.set(1.6, -1.8, 1.4);
    this.camera.up.set(0, 0, 1);
    this.controls = new OrbitControls(
      this.camera,
      this.slots[0].renderer.domElement,
    );
    this.controls.addEventListener("change", () => this.renderOnce());
    this.renderOnce();
  }

  refresh(which: 0 | 1): void {
    const view = this.model.slots[which];
    const slot = this.slots[which];
    slot.caption.textContent = view.label;
    slot.caption.classList.toggle("failed", view.status === "failed");
    slot.setMesh(view.status === "ready" ? view.grid : null);
    this.applyDifference();
    this.renderOnce();
  }

  /** Toggle the |u1 - u2| overlay; no-op (with message) when gated off. */
  setDifference(on: boolean): string | null {
    const gate = this.model.differenceGate();
    this.differenceOn = on && gate.ok;
    this.applyDifference();
    this.renderOnce();
    return on && !gate.ok ? gate.message : null;
  }

  private applyDifference(): void {
    const gate = this.model.differenceGate();
    const apply = this.differenceOn && gate.ok;
    let colors: Float32Array | null = null;
    if (apply) {
      const a = this.model.slots[0].grid as TerrainGrid;
      const b = this.model.slots[1].grid as TerrainGrid;
      colors = heatColors(heightDifference(a, b));
    }
    for (const slot of this.slots) {
      const mesh = slot.mesh;
      if (!mesh) continue;
      const material = mesh.material as THREE.MeshStandardMaterial;
      if (colors) {
        mesh.geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
        material.vertexColors = true;
        material.color.set(0xffffff);
      } else {
        mesh.geometry.deleteAttribute("color");
        material.vertexColors = false;
        material.color.set(SURFACE_COLOR);
      }
      material.needsUpdate = true;
    }
  }

  private renderOnce(): void {
    for (const slot of this.slots) {
      slot.renderer.render(slot.scene, this.camera);
    }
  }
}
