import { SynthesisClient } from "./client.js";
import { SkeletonRenderer } from "./render.js";
import { ViewerScene } from "./scene.js";

const INPUT_COLOR = 0x4d9fff; // input motion
const GENERATED_COLOR = 0x3ddc84; // generated reaction

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(message: string): void {
  const banner = el<HTMLDivElement>("toast");
  banner.textContent = message;
  banner.classList.add("visible");
  setTimeout(() => banner.classList.remove("visible"), 4000);
}

async function boot(): Promise<void> {
  const endpointInput = el<HTMLInputElement>("endpoint");
  endpointInput.value = localStorage.getItem("reactmix-endpoint") ?? "http://127.0.0.1:8080";

  let client = new SynthesisClient(endpointInput.value);
  let scene: ViewerScene | null = null;
  const renderer = new SkeletonRenderer(el("viewport"));

  async function connect(): Promise<void> {
    client = new SynthesisClient(endpointInput.value);
    localStorage.setItem("reactmix-endpoint", endpointInput.value);
    if (!(await client.health())) {
      toast("service unreachable");
      return;
    }
    const classNames = await client.classes();
    scene = new ViewerScene(client, classNames, {
      onGenerated: (response) => {
        renderer.setCharacter("generated", response.sequence, GENERATED_COLOR);
        refreshHistory();
        refreshTimeline();
      },
      onError: (message) => toast(message),
    });
    buildSliders(classNames);
    toast(`connected: ${classNames.length} classes`);
  }

  function buildSliders(classNames: string[]): void {
    const panel = el<HTMLDivElement>("sliders");
    panel.innerHTML = "";
    for (const name of classNames) {
      const row = document.createElement("div");
      row.className = "slider-row";
      const label = document.createElement("label");
      label.textContent = name;
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "-1";
      slider.max = "1";
      slider.step = "0.05";
      slider.value = "0";
      const value = document.createElement("span");
      value.textContent = "0.00";
      slider.addEventListener("input", () => {
        value.textContent = Number(slider.value).toFixed(2);
        scene?.setSlider(name, Number(slider.value));
      });
      row.append(label, slider, value);
      panel.appendChild(row);
    }
  }

  function refreshHistory(): void {
    if (!scene) return;
    const list = el<HTMLUListElement>("history");
    list.innerHTML = "";
    for (const entry of [...scene.history].reverse().slice(0, 12)) {
      const item = document.createElement("li");
      const labels = Object.entries(entry.labels)
        .map(([k, v]) => `${k}=${v > 0 ? "+" : ""}${v}`)
        .join(", ") || "neutral";
      item.textContent = `${labels} -> ${entry.sequenceId.slice(0, 8)}`;
      list.appendChild(item);
    }
  }

  function refreshTimeline(): void {
    if (!scene) return;
    const bar = el<HTMLInputElement>("timeline");
    bar.max = String(scene.clock.frameCount - 1);
  }

  el<HTMLButtonElement>("connect").addEventListener("click", () => void connect());

  el<HTMLInputElement>("file").addEventListener("change", async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file || !scene) return;
    try {
      scene.loadInput(JSON.parse(await file.text()));
      renderer.removeCharacter("generated");
      renderer.setCharacter("input", scene.input!, INPUT_COLOR);
      refreshTimeline();
      void scene.regenerate();
    } catch (err) {
      toast(err instanceof Error ? err.message : String(err));
    }
  });

  el<HTMLButtonElement>("play").addEventListener("click", () => scene?.clock.play());
  el<HTMLButtonElement>("pause").addEventListener("click", () => scene?.clock.pause());
  el<HTMLInputElement>("timeline").addEventListener("input", (event) => {
    scene?.clock.seek(Number((event.target as HTMLInputElement).value));
  });
  el<HTMLSelectElement>("speed").addEventListener("change", (event) => {
    scene?.clock.setSpeed(Number((event.target as HTMLSelectElement).value));
  });

  let last = performance.now();
  function loop(now: number): void {
    const dt = (now - last) / 1000;
    last = now;
    if (scene) {
      const playhead = scene.clock.tick(dt);
      el<HTMLInputElement>("timeline").value = String(playhead);
      renderer.renderFrame(playhead);
    }
    requestAnimationFrame(loop);
  }
  requestAnimationFrame(loop);

  await connect();
}

void boot();
