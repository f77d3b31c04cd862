/** Per-pair draft persistence so a reviewer can pause mid-adjudication.
 * Storage is injected (localStorage in the browser, a stub in tests). */

import { DecisionDraft, DraftError, type DraftState } from "./draft.js";
import type { PairPayload } from "./types.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "citefn-draft:";

export function saveDraft(storage: StorageLike, draft: DecisionDraft): void {
  storage.setItem(PREFIX + draft.pairId, JSON.stringify(draft.toState()));
}

export function clearDraft(storage: StorageLike, pairId: string): void {
  storage.removeItem(PREFIX + pairId);
}

/** Load a saved draft for this pair, or start fresh when there is none or
 * the saved one no longer fits the server state. */
export function loadDraft(storage: StorageLike, pair: PairPayload): DecisionDraft {
  const raw = storage.getItem(PREFIX + pair.pair_id);
  if (raw !== null) {
    try {
      const state = JSON.parse(raw) as DraftState;
      return DecisionDraft.restore(pair, state);
    } catch (err) {
      if (!(err instanceof DraftError) && !(err instanceof SyntaxError)) throw err;
      storage.removeItem(PREFIX + pair.pair_id);
    }
  }
  return new DecisionDraft(pair);
}
