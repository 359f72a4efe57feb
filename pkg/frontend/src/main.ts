/** DOM wiring for the completion studio. Logic lives in the other modules. */

import { CompletionApi, type ModelInfo } from "./api.js";
import { AttributePanelState, GRID_MODE_MAX_ATTRIBUTES } from "./attributes.js";
import { MaskCanvasState } from "./maskCanvas.js";
import { StudioSession, type HistoryEntry } from "./studio.js";

const DEFAULT_SERVICE = "http://127.0.0.1:8080";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const serviceInput = el<HTMLInputElement>("service-url");
const connectButton = el<HTMLButtonElement>("connect");
const fileInput = el<HTMLInputElement>("image-file");
const brushInput = el<HTMLInputElement>("brush-radius");
const eraseInput = el<HTMLInputElement>("erase-mode");
const undoButton = el<HTMLButtonElement>("undo");
const clearButton = el<HTMLButtonElement>("clear");
const completeButton = el<HTMLButtonElement>("complete");
const gridButton = el<HTMLButtonElement>("grid-mode");
const togglePanel = el<HTMLDivElement>("attribute-toggles");
const banner = el<HTMLDivElement>("error-banner");
const retryButton = el<HTMLButtonElement>("retry");
const imageCanvas = el<HTMLCanvasElement>("image-canvas");
const maskCanvas = el<HTMLCanvasElement>("mask-canvas");
const resultPanel = el<HTMLDivElement>("result-panel");
const historyStrip = el<HTMLDivElement>("history-strip");
const modelLabel = el<HTMLSpanElement>("model-label");

let api = new CompletionApi(DEFAULT_SERVICE);
let session = new StudioSession(api);
let panel: AttributePanelState | null = null;
let model: ModelInfo | null = null;
let mask: MaskCanvasState | null = null;
let imagePng: ArrayBuffer | null = null;
let lastAction: (() => Promise<void>) | null = null;

function showError(message: string) {
  banner.style.display = "block";
  banner.querySelector("span")!.textContent = message;
}

function clearError() {
  banner.style.display = "none";
}

function repaintMask() {
  if (!mask) return;
  const ctx = maskCanvas.getContext("2d")!;
  const frame = ctx.createImageData(mask.width, mask.height);
  for (let y = 0; y < mask.height; y++) {
    for (let x = 0; x < mask.width; x++) {
      const at = (y * mask.width + x) * 4;
      const painted = mask.cell(x, y);
      frame.data[at] = 255;
      frame.data[at + 1] = 64;
      frame.data[at + 2] = 64;
      frame.data[at + 3] = painted ? 140 : 0;
    }
  }
  ctx.putImageData(frame, 0, 0);
}

function renderToggles() {
  togglePanel.innerHTML = "";
  if (!panel) return;
  for (const name of panel.names) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = panel.get(name) === 1;
    box.addEventListener("change", () => {
      panel!.set(name, box.checked ? 1 : 0);
    });
    label.append(box, document.createTextNode(` ${name}`));
    togglePanel.append(label);
  }
}

function pngUrl(bytes: Uint8Array): string {
  return URL.createObjectURL(new Blob([bytes.slice().buffer], { type: "image/png" }));
}

function captionFor(entry: HistoryEntry): string {
  const bits = Object.entries(entry.toggles)
    .map(([k, v]) => `${k}=${v}`)
    .join(", ");
  return entry.faithful ? bits : `${bits} (echo mismatch!)`;
}

function renderResults(entries: HistoryEntry[]) {
  resultPanel.innerHTML = "";
  for (const entry of entries) {
    const card = document.createElement("figure");
    const img = document.createElement("img");
    img.src = pngUrl(entry.result.pngBytes);
    img.className = "result-img";
    const cap = document.createElement("figcaption");
    cap.textContent = captionFor(entry);
    card.append(img, cap);
    resultPanel.append(card);
  }
}

function appendHistory(entries: HistoryEntry[]) {
  for (const entry of entries) {
    const img = document.createElement("img");
    img.src = pngUrl(entry.result.pngBytes);
    img.title = captionFor(entry);
    img.className = "history-thumb";
    historyStrip.append(img);
  }
}

async function connect() {
  api = new CompletionApi(serviceInput.value.replace(/\/$/, ""));
  session = new StudioSession(api);
  try {
    model = await api.modelInfo();
    clearError();
  } catch (err) {
    showError(`cannot reach service: ${(err as Error & { message?: string }).message ?? err}`);
    return;
  }
  panel = new AttributePanelState(model.attributes);
  modelLabel.textContent = `stage ${model.stage}, attributes [${model.attributes.join(", ")}]`;
  gridButton.disabled =
    model.attributes.length === 0 || model.attributes.length > GRID_MODE_MAX_ATTRIBUTES;
  renderToggles();
}

async function loadImage(file: File) {
  imagePng = await file.arrayBuffer();
  const bitmap = await createImageBitmap(new Blob([imagePng], { type: "image/png" }));
  imageCanvas.width = bitmap.width;
  imageCanvas.height = bitmap.height;
  maskCanvas.width = bitmap.width;
  maskCanvas.height = bitmap.height;
  imageCanvas.getContext("2d")!.drawImage(bitmap, 0, 0);
  mask = new MaskCanvasState(bitmap.width, bitmap.height, Number(brushInput.value));
  repaintMask();
}

function canvasPoint(event: PointerEvent): [number, number] {
  const rect = maskCanvas.getBoundingClientRect();
  return [
    ((event.clientX - rect.left) / rect.width) * maskCanvas.width,
    ((event.clientY - rect.top) / rect.height) * maskCanvas.height,
  ];
}

let painting = false;
maskCanvas.addEventListener("pointerdown", (event) => {
  if (!mask) return;
  painting = true;
  mask.brushRadius = Number(brushInput.value);
  mask.beginStroke();
  const [x, y] = canvasPoint(event);
  mask.stamp(x, y, eraseInput.checked ? 0 : 1);
  repaintMask();
});
maskCanvas.addEventListener("pointermove", (event) => {
  if (!painting || !mask) return;
  const [x, y] = canvasPoint(event);
  mask.stamp(x, y, eraseInput.checked ? 0 : 1);
  repaintMask();
});
window.addEventListener("pointerup", () => {
  painting = false;
  mask?.endStroke();
});

undoButton.addEventListener("click", () => {
  mask?.undo();
  repaintMask();
});
clearButton.addEventListener("click", () => {
  mask?.clear();
  repaintMask();
});

function setBusy(busy: boolean) {
  completeButton.disabled = busy;
  gridButton.disabled = busy || !model || model.attributes.length === 0;
}

async function runComplete() {
  if (!mask || !imagePng || !panel) {
    showError("load an image and connect to a service first");
    return;
  }
  const action = async () => {
    const entry = await session.submit(imagePng!, mask!.exportPng(), panel!.toggles());
    renderResults([entry]);
    appendHistory([entry]);
  };
  lastAction = action;
  setBusy(true);
  try {
    await action();
    clearError();
  } catch (err) {
    const e = err as { code?: string; message?: string };
    showError(`completion failed: ${e.code ?? ""} ${e.message ?? err}`);
  } finally {
    setBusy(false);
  }
}

async function runGrid() {
  if (!mask || !imagePng || !model) {
    showError("load an image and connect to a service first");
    return;
  }
  const action = async () => {
    resultPanel.innerHTML = "";
    const entries = await session.submitGrid(
      imagePng!,
      mask!.exportPng(),
      model!.attributes,
      (toggles, result) => {
        // tile each completion as its response arrives
        const card = document.createElement("figure");
        const img = document.createElement("img");
        img.src = pngUrl(result.pngBytes);
        img.className = "result-img";
        const cap = document.createElement("figcaption");
        cap.textContent = Object.entries(toggles)
          .map(([k, v]) => `${k}=${v}`)
          .join(", ");
        card.append(img, cap);
        resultPanel.append(card);
      },
    );
    appendHistory(entries);
  };
  lastAction = action;
  setBusy(true);
  try {
    await action();
    clearError();
  } catch (err) {
    const e = err as { code?: string; message?: string };
    showError(`grid completion failed: ${e.code ?? ""} ${e.message ?? err}`);
  } finally {
    setBusy(false);
  }
}

connectButton.addEventListener("click", () => void connect());
fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file) void loadImage(file);
});
completeButton.addEventListener("click", () => void runComplete());
gridButton.addEventListener("click", () => void runGrid());
retryButton.addEventListener("click", () => {
  if (lastAction) {
    lastAction()
      .then(clearError)
      .catch((err) => showError(String(err)));
  }
});

serviceInput.value = DEFAULT_SERVICE;
void connect();
