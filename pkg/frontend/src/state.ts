/** Session state and the pure logic behind the editing workflow.
 *
 * Nothing in this module touches the DOM or the network, so the invariants
 * (sliders in [0, 1], append-only capped history, delta labels) are all
 * testable in isolation. main.ts owns the wiring.
 */

import type { HallucinateResponse } from "./types.js";

export const HISTORY_LIMIT = 24;
export const DELTA_THRESHOLD = 0.05;

export interface HistoryEntry {
  /** Slider vector that produced this output, frozen at generation time. */
  attributes: number[];
  /** Base64 PNG of the 128 output, shown as the thumbnail. */
  image128: string;
}

export interface SessionState {
  attributeNames: string[];
  /** Base64 PNG of the current 16x16 input, null before anything is loaded. */
  lrImage: string | null;
  /** Set when the uploaded file had to be downscaled to 16x16. */
  rescaleNotice: boolean;
  /** Classifier predictions for the current image; the delta baseline. */
  classifierAttributes: number[] | null;
  sliders: number[];
  latest: HallucinateResponse | null;
  history: HistoryEntry[];
  /** How many old entries the cap has pushed out; > 0 shows a notice. */
  evictedCount: number;
}

export function createSession(attributeNames: string[]): SessionState {
  return {
    attributeNames: [...attributeNames],
    lrImage: null,
    rescaleNotice: false,
    classifierAttributes: null,
    sliders: attributeNames.map(() => 0.5),
    latest: null,
    history: [],
    evictedCount: 0,
  };
}

/** A new image starts a fresh session: history is append-only only within one. */
export function loadImage(state: SessionState, lrImage: string, rescaled: boolean): SessionState {
  return {
    ...createSession(state.attributeNames),
    lrImage,
    rescaleNotice: rescaled,
  };
}

export function applyClassification(state: SessionState, attributes: number[]): SessionState {
  if (attributes.length !== state.attributeNames.length) {
    throw new RangeError(
      `expected ${state.attributeNames.length} attributes, got ${attributes.length}`,
    );
  }
  return {
    ...state,
    classifierAttributes: [...attributes],
    sliders: [...attributes],
  };
}

export function setSlider(state: SessionState, index: number, value: number): SessionState {
  if (index < 0 || index >= state.sliders.length) {
    throw new RangeError(`no slider at index ${index}`);
  }
  if (!Number.isFinite(value) || value < 0 || value > 1) {
    throw new RangeError(`slider value ${value} outside [0, 1]`);
  }
  const sliders = [...state.sliders];
  sliders[index] = value;
  return { ...state, sliders };
}

export function resetToClassifier(state: SessionState): SessionState {
  if (state.classifierAttributes == null) {
    return state;
  }
  return { ...state, sliders: [...state.classifierAttributes] };
}

/** Store a completed generation: update panels and append to history. */
export function recordGeneration(
  state: SessionState,
  response: HallucinateResponse,
): SessionState {
  const image128 = response.outputs["128"];
  if (image128 === undefined) {
    throw new Error("response is missing the 128 output");
  }
  const entry: HistoryEntry = {
    attributes: [...response.used_attributes],
    image128,
  };
  const history = [...state.history, entry];
  let evictedCount = state.evictedCount;
  while (history.length > HISTORY_LIMIT) {
    history.shift();
    evictedCount += 1;
  }
  return { ...state, latest: response, history, evictedCount };
}

/** Names of attributes whose value differs from the baseline by more than the threshold. */
export function deltaLabels(
  attributes: number[],
  baseline: number[],
  names: string[],
  threshold: number = DELTA_THRESHOLD,
): string[] {
  if (attributes.length !== baseline.length || attributes.length !== names.length) {
    throw new RangeError("attributes, baseline and names must have equal length");
  }
  const labels: string[] = [];
  for (let i = 0; i < attributes.length; i++) {
    if (Math.abs((attributes[i] as number) - (baseline[i] as number)) > threshold) {
      labels.push(names[i] as string);
    }
  }
  return labels;
}

export interface CompareCell {
  image128: string;
  deltas: string[];
}

export type CompareView =
  | { ok: true; cells: CompareCell[] }
  | { ok: false; hint: string };

/** Side-by-side view of selected history entries, labeled with their deltas. */
export function compareView(state: SessionState, indices: number[]): CompareView {
  const unique = [...new Set(indices)];
  if (unique.length < 2) {
    return { ok: false, hint: "select at least two history entries to compare" };
  }
  if (state.classifierAttributes == null) {
    return { ok: false, hint: "no classifier baseline yet" };
  }
  const baseline = state.classifierAttributes;
  const cells: CompareCell[] = [];
  for (const i of unique) {
    const entry = state.history[i];
    if (entry === undefined) {
      return { ok: false, hint: `no history entry at index ${i}` };
    }
    cells.push({
      image128: entry.image128,
      deltas: deltaLabels(entry.attributes, baseline, state.attributeNames),
    });
  }
  return { ok: true, cells };
}

export interface HistogramBar {
  name: string;
  probability: number;
}

/** Per-stage critic attribute probabilities in slider order, ready to plot. */
export function histogramModel(
  names: string[],
  predictions: Record<string, number[]>,
): Map<string, HistogramBar[]> {
  const perStage = new Map<string, HistogramBar[]>();
  for (const stage of Object.keys(predictions).sort()) {
    const probs = predictions[stage] as number[];
    if (probs.length !== names.length) {
      throw new RangeError(`stage ${stage}: ${probs.length} probabilities for ${names.length} names`);
    }
    perStage.set(
      stage,
      probs.map((p, i) => ({ name: names[i] as string, probability: p })),
    );
  }
  return perStage;
}
