/** DOM wiring: connects the session state to the page and the API client. */

import { ApiClient, ApiError } from "./api.js";
import { renderHistogram } from "./charts.js";
import { bilinearPreview, fileToLrImage, toDataUrl } from "./image.js";
import { ReplaceQueue } from "./queue.js";
import {
  applyClassification,
  compareView,
  createSession,
  deltaLabels,
  histogramModel,
  loadImage,
  recordGeneration,
  resetToClassifier,
  setSlider,
  type SessionState,
} from "./state.js";

function apiBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8421";
}

const api = new ApiClient(apiBaseUrl());
const queue = new ReplaceQueue();
let state: SessionState = createSession([]);
const selectedHistory = new Set<number>();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  const note = document.createElement("div");
  note.className = "toast-note";
  note.textContent = message;
  box.appendChild(note);
  setTimeout(() => note.remove(), 5000);
}

function renderSliders(): void {
  const list = el<HTMLDivElement>("sliders");
  list.textContent = "";
  state.attributeNames.forEach((name, i) => {
    const row = document.createElement("label");
    row.className = "slider-row";

    const text = document.createElement("span");
    text.className = "slider-name";
    text.textContent = name;

    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.01";
    input.value = String(state.sliders[i]);
    input.addEventListener("input", () => {
      state = setSlider(state, i, Number(input.value));
      value.textContent = Number(input.value).toFixed(2);
    });

    const value = document.createElement("span");
    value.className = "slider-value";
    value.textContent = (state.sliders[i] as number).toFixed(2);

    row.append(text, input, value);
    list.appendChild(row);
  });
}

function setPanelImage(id: string, base64: string | undefined): void {
  const img = el<HTMLImageElement>(id);
  if (base64) {
    img.src = toDataUrl(base64);
    img.classList.remove("empty");
  } else {
    img.removeAttribute("src");
    img.classList.add("empty");
  }
}

async function renderOutputs(): Promise<void> {
  const r = state.latest;
  setPanelImage("out-32", r?.outputs["32"]);
  setPanelImage("out-64", r?.outputs["64"]);
  setPanelImage("out-128", r?.outputs["128"]);
  if (state.lrImage) {
    setPanelImage("out-bilinear", await bilinearPreview(state.lrImage, 128));
  }
}

function renderHistograms(): void {
  const preds = state.latest?.critic_attribute_predictions;
  for (const stage of ["1", "2", "3"]) {
    const container = el<HTMLDivElement>(`hist-${stage}`);
    container.textContent = "";
    if (preds && preds[stage]) {
      const model = histogramModel(state.attributeNames, preds);
      renderHistogram(container, model.get(stage) ?? []);
    }
  }
}

function renderHistory(): void {
  const grid = el<HTMLDivElement>("history");
  grid.textContent = "";
  state.history.forEach((entry, i) => {
    const cell = document.createElement("label");
    cell.className = "history-cell";
    const check = document.createElement("input");
    check.type = "checkbox";
    check.checked = selectedHistory.has(i);
    check.addEventListener("change", () => {
      if (check.checked) selectedHistory.add(i);
      else selectedHistory.delete(i);
      renderCompare();
    });
    const img = document.createElement("img");
    img.src = toDataUrl(entry.image128);
    img.width = 64;
    img.height = 64;
    cell.append(check, img);
    grid.appendChild(cell);
  });
  el<HTMLSpanElement>("eviction-note").textContent =
    state.evictedCount > 0 ? `${state.evictedCount} oldest entries dropped (cap 24)` : "";
  renderCompare();
}

function renderCompare(): void {
  const view = compareView(state, [...selectedHistory]);
  const hint = el<HTMLSpanElement>("compare-hint");
  const grid = el<HTMLDivElement>("compare-grid");
  grid.textContent = "";
  if (!view.ok) {
    hint.textContent = state.history.length > 0 ? view.hint : "";
    return;
  }
  hint.textContent = "";
  for (const cell of view.cells) {
    const box = document.createElement("figure");
    box.className = "compare-cell";
    const img = document.createElement("img");
    img.src = toDataUrl(cell.image128);
    img.width = 128;
    img.height = 128;
    const caption = document.createElement("figcaption");
    caption.textContent = cell.deltas.length > 0 ? cell.deltas.join(", ") : "baseline";
    box.append(img, caption);
    grid.appendChild(box);
  }
}

function renderEditedBadge(): void {
  const badge = el<HTMLSpanElement>("edited-note");
  if (state.classifierAttributes == null) {
    badge.textContent = "";
    return;
  }
  const edited = deltaLabels(state.sliders, state.classifierAttributes, state.attributeNames);
  badge.textContent = edited.length > 0 ? `edited: ${edited.join(", ")}` : "";
}

async function onFilePicked(file: File): Promise<void> {
  try {
    const loaded = await fileToLrImage(file);
    state = loadImage(state, loaded.base64, loaded.rescaled);
    selectedHistory.clear();
    el<HTMLSpanElement>("rescale-note").textContent = loaded.rescaled
      ? "input was not 16x16 and has been downscaled"
      : "";
    setPanelImage("lr-preview", loaded.base64);
    const { attributes } = await api.classify(loaded.base64);
    state = applyClassification(state, attributes);
    renderSliders();
    renderEditedBadge();
    await renderOutputs();
    renderHistograms();
    renderHistory();
  } catch (err) {
    toast(err instanceof Error ? err.message : String(err));
  }
}

function regenerate(): void {
  if (!state.lrImage) {
    toast("load an image first");
    return;
  }
  const lrImage = state.lrImage;
  const attributes = [...state.sliders];
  void queue.submit(async () => {
    try {
      const response = await api.hallucinate({
        lr_image: lrImage,
        attributes,
        return_stages: true,
        return_attribute_predictions: true,
      });
      state = recordGeneration(state, response);
      await renderOutputs();
      renderHistograms();
      renderHistory();
      renderEditedBadge();
    } catch (err) {
      // keep the previous panels; surface the failure without blocking
      if (err instanceof ApiError) {
        toast(`${err.code}: ${err.message}`);
      } else {
        toast(err instanceof Error ? err.message : String(err));
      }
    }
  });
}

async function init(): Promise<void> {
  try {
    const names = await api.attributes();
    state = createSession(names);
    renderSliders();
  } catch (err) {
    toast(`cannot reach service at ${apiBaseUrl()}; is it running?`);
    return;
  }
  try {
    const health = await api.health();
    el<HTMLSpanElement>("health").textContent =
      `serving ${health.checkpoint} (stage ${health.stage})`;
  } catch {
    el<HTMLSpanElement>("health").textContent = "health check failed";
  }

  el<HTMLInputElement>("file-input").addEventListener("change", (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (file) void onFilePicked(file);
  });
  el<HTMLButtonElement>("regenerate").addEventListener("click", regenerate);
  el<HTMLButtonElement>("reset").addEventListener("click", () => {
    state = resetToClassifier(state);
    renderSliders();
    renderEditedBadge();
  });
}

void init();
