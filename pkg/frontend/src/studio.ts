/**
 * Studio session logic, DOM-free: submit the visible toggle state, fan out
 * grid mode, keep a bounded request/response history for comparison, and
 * surface service errors without losing any state.
 */

import type { CompletionApi, CompletionResult, ServiceError } from "./api.js";
import { gridVectors, type Toggles } from "./attributes.js";

const HISTORY_LIMIT = 32;

export interface HistoryEntry {
  toggles: Toggles;
  result: CompletionResult;
  /** Whether the service consumed exactly the toggles we sent. */
  faithful: boolean;
}

export class StudioSession {
  readonly history: HistoryEntry[] = [];
  lastError: ServiceError | null = null;

  constructor(private readonly api: CompletionApi) {}

  private record(toggles: Toggles, result: CompletionResult): HistoryEntry {
    const faithful =
      Object.keys(result.echoedAttributes).length === Object.keys(toggles).length &&
      Object.entries(toggles).every(([k, v]) => result.echoedAttributes[k] === v);
    const entry = { toggles: { ...toggles }, result, faithful };
    this.history.push(entry);
    if (this.history.length > HISTORY_LIMIT) this.history.shift();
    return entry;
  }

  /** One completion with exactly the given toggle state. */
  async submit(imagePng: BlobPart, maskPng: Uint8Array, toggles: Toggles): Promise<HistoryEntry> {
    try {
      const result = await this.api.complete(imagePng, maskPng, toggles);
      this.lastError = null;
      return this.record(toggles, result);
    } catch (err) {
      this.lastError = err as ServiceError;
      throw err;
    }
  }

  /**
   * Grid mode: one click, one request per attribute combination
   * ([0,0], [1,0], [0,1], [1,1] for two attributes), fanned out
   * concurrently. `onResult` fires per response as it arrives; the
   * returned history entries are in request order.
   */
  async submitGrid(
    imagePng: BlobPart,
    maskPng: Uint8Array,
    names: string[],
    onResult?: (toggles: Toggles, result: CompletionResult) => void,
  ): Promise<HistoryEntry[]> {
    const combos = gridVectors(names);
    try {
      const results = await Promise.all(
        combos.map(async (toggles) => {
          const result = await this.api.complete(imagePng, maskPng, toggles);
          onResult?.(toggles, result);
          return result;
        }),
      );
      this.lastError = null;
      return combos.map((toggles, i) => this.record(toggles, results[i]));
    } catch (err) {
      this.lastError = err as ServiceError;
      throw err;
    }
  }
}
