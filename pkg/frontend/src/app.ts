/** Browser bootstrap: one unidirectional loop (state -> render -> events).
 * All state transitions go through DecisionDraft; all numbers come from the
 * API. Optimistic updates are deliberately absent: after a submit, the view
 * rerenders only from the server's response. */

import { ApiError, ReviewApi } from "./api.js";
import { clearDraft, loadDraft, saveDraft } from "./autosave.js";
import { DecisionDraft, DraftError } from "./draft.js";
import { renderPair, renderPooled, renderQueue, type SelectionItem } from "./render.js";
import type { OpenCategory, PairPayload, Side } from "./types.js";

const api = new ReviewApi((url, init) => fetch(url, init));
const root = document.getElementById("app")!;
const REVIEWER = "ui-reviewer";

interface ViewState {
  pair: PairPayload | null;
  draft: DecisionDraft | null;
  selection: SelectionItem[];
  notice: string;
}

const state: ViewState = { pair: null, draft: null, selection: [], notice: "" };

async function showQueue(): Promise<void> {
  state.pair = null;
  state.draft = null;
  state.selection = [];
  try {
    const [queue, pooled] = await Promise.all([api.queue(), api.metrics()]);
    root.innerHTML = renderQueue(queue) + renderPooled(pooled);
  } catch (err) {
    root.innerHTML = `<p class="notice" role="alert">Failed to load the queue: ${String(err)}</p>
      <button type="button" data-action="back-to-queue">Retry</button>`;
  }
}

async function showPair(pairId: string, notice = ""): Promise<void> {
  try {
    const pair = await api.pair(pairId);
    state.pair = pair;
    state.draft = pair.session.status === "open" ? loadDraft(localStorage, pair) : null;
    state.selection = [];
    state.notice = notice;
    rerenderPair();
  } catch (err) {
    root.innerHTML = `<p class="notice" role="alert">Failed to load ${pairId}: ${String(err)}</p>
      <button type="button" data-action="back-to-queue">Back to queue</button>`;
  }
}

function rerenderPair(): void {
  if (!state.pair) return;
  root.innerHTML = renderPair(state.pair, state.draft, state.selection, state.notice);
  state.notice = "";
}

function itemFromDataset(el: HTMLElement): { category: OpenCategory; side: Side; value: string } {
  return {
    category: el.dataset.category as OpenCategory,
    side: el.dataset.side as Side,
    value: el.dataset.value ?? "",
  };
}

async function submit(): Promise<void> {
  if (!state.pair || !state.draft) return;
  const pairId = state.pair.pair_id;
  try {
    const body = state.draft.toRequestBody(REVIEWER);
    const response = await api.submitDecisions(pairId, body);
    clearDraft(localStorage, pairId);
    // no optimistic state: refetch the pair so the view is the server's truth
    await showPair(pairId, `Decisions accepted; pooled report now covers ${response.pooled.pairs_scored} pair(s).`);
  } catch (err) {
    if (err instanceof ApiError && err.isConflict) {
      clearDraft(localStorage, pairId);
      await showPair(pairId, `Conflict: ${err.detail} (reloaded server state)`);
      return;
    }
    if (err instanceof ApiError || err instanceof DraftError) {
      state.notice = String(err instanceof ApiError ? err.detail : err.message);
      rerenderPair();
      return;
    }
    throw err;
  }
}

function handleAction(el: HTMLElement): void {
  const action = el.dataset.action;
  if (!action) return;
  if (action === "back-to-queue") {
    void showQueue();
    return;
  }
  if (action === "open-pair") {
    void showPair(el.dataset.pair ?? "");
    return;
  }
  if (!state.pair || !state.draft) return;
  const draft = state.draft;

  try {
    switch (action) {
      case "fp": {
        const item = itemFromDataset(el);
        draft.markFalsePositive(item.category, item.value);
        break;
      }
      case "fn": {
        const item = itemFromDataset(el);
        draft.markFalseNegative(item.category, item.value);
        break;
      }
      case "clear": {
        const item = itemFromDataset(el);
        draft.clear(item.category, item.side, item.value);
        break;
      }
      case "toggle-select": {
        const item = itemFromDataset(el);
        const idx = state.selection.findIndex(
          (s) => s.category === item.category && s.side === item.side && s.value === item.value,
        );
        if (idx >= 0) state.selection.splice(idx, 1);
        else state.selection.push(item);
        break;
      }
      case "clear-selection":
        state.selection = [];
        break;
      case "match-selected": {
        const machine = state.selection.find((s) => s.side === "machine");
        const gold = state.selection.find((s) => s.side === "gold");
        if (machine && gold) draft.matchItems(machine.category, machine.value, gold.value);
        state.selection = [];
        break;
      }
      case "group-selected": {
        const direction = el.dataset.direction as "machine-into-gold" | "gold-into-machine";
        const memberSide: Side = direction === "machine-into-gold" ? "machine" : "gold";
        const members = state.selection.filter((s) => s.side === memberSide).map((s) => s.value);
        const target = state.selection.find((s) => s.side !== memberSide);
        const category = state.selection[0]?.category;
        if (category) draft.createGroup(category, direction, members, target?.value ?? null);
        state.selection = [];
        break;
      }
      case "submit":
        void submit();
        return;
      default:
        return;
    }
  } catch (err) {
    if (err instanceof DraftError) state.notice = err.message;
    else throw err;
  }
  saveDraft(localStorage, draft);
  rerenderPair();
}

root.addEventListener("click", (event) => {
  const el = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (el) handleAction(el);
});

void showQueue();
