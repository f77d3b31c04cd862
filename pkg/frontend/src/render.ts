/** Pure HTML renderers. Every number shown comes verbatim from an API
 * payload; nothing is recomputed client-side, which is what makes the
 * single-source-of-truth property testable. All interactive elements are
 * native buttons, so the whole flow is keyboard operable. */

import type { DecisionDraft } from "./draft.js";
import type {
  MetricsPayload,
  OpenCategory,
  PairPayload,
  PooledPayload,
  QueueItem,
  Side,
} from "./types.js";
import { OPEN_CATEGORIES } from "./types.js";

export interface SelectionItem {
  category: OpenCategory;
  side: Side;
  value: string;
}

const CATEGORY_TITLES: Record<string, string> = {
  data_accessed: "Data Accessed",
  use_cases: "Use Cases",
  tools: "Tools and Software",
  overall: "Overall",
};

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(value: number): string {
  return value.toFixed(3);
}

export function renderQueue(items: QueueItem[]): string {
  if (items.length === 0) {
    return `<section class="queue"><h2>Review queue</h2><p class="empty">No pairs to review.</p></section>`;
  }
  const rows = items
    .map(
      (item) => `
    <tr class="queue-row status-${item.status}">
      <td><button type="button" class="open-pair" data-action="open-pair" data-pair="${esc(item.pair_id)}">${esc(item.pair_id)}</button></td>
      <td>${item.unresolved_gold}</td>
      <td>${item.unresolved_machine}</td>
      <td>${item.unresolved}</td>
      <td>${item.status}</td>
    </tr>`,
    )
    .join("");
  return `
<section class="queue">
  <h2>Review queue</h2>
  <table>
    <thead><tr><th>Pair</th><th>Gold open</th><th>Machine open</th><th>Total open</th><th>Status</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

function metricsLines(metrics: MetricsPayload): string {
  return `
    <dl class="metric-values">
      <dt>Precision</dt><dd data-metric="precision">${fmt(metrics.precision)}</dd>
      <dt>Recall</dt><dd data-metric="recall">${fmt(metrics.recall)}</dd>
      <dt>F1</dt><dd data-metric="f1">${fmt(metrics.f1)}</dd>
      <dt>Hallucination rate</dt><dd data-metric="hallucination_rate">${fmt(metrics.hallucination_rate)}</dd>
    </dl>
    <p class="counts">TP ${metrics.counts.tp} / FP ${metrics.counts.fp} / TN ${metrics.counts.tn} / FN ${metrics.counts.fn}</p>`;
}

export function renderMetricsPanel(metrics: MetricsPayload | undefined, label: string): string {
  if (!metrics) {
    return `<aside class="metrics" aria-live="polite"><h3>${esc(label)}</h3><p class="empty">No metrics yet; complete the adjudication to see them.</p></aside>`;
  }
  return `<aside class="metrics" aria-live="polite"><h3>${esc(label)}</h3>${metricsLines(metrics)}</aside>`;
}

export function renderPooled(pooled: PooledPayload): string {
  if (pooled.pairs_scored === 0) {
    return `<section class="pooled"><h3>Pooled metrics</h3><p class="empty">No completed pairs yet.</p></section>`;
  }
  const rows = pooled.rows
    .map(
      (row) => `
    <tr data-pooled-category="${esc(row.category)}">
      <td>${esc(CATEGORY_TITLES[row.category] ?? row.category)}</td>
      <td data-metric="recall">${fmt(row.recall)}</td>
      <td data-metric="precision">${fmt(row.precision)}</td>
      <td data-metric="f1">${fmt(row.f1)}</td>
    </tr>`,
    )
    .join("");
  return `
<section class="pooled">
  <h3>Pooled metrics (${pooled.pairs_scored} pair${pooled.pairs_scored === 1 ? "" : "s"})</h3>
  <table>
    <thead><tr><th>Value Type</th><th>Recall</th><th>Precision</th><th>F1</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

function isSelected(selection: SelectionItem[], category: OpenCategory, side: Side, value: string): boolean {
  return selection.some((s) => s.category === category && s.side === side && s.value === value);
}

function unresolvedItem(
  draft: DecisionDraft | null,
  selection: SelectionItem[],
  category: OpenCategory,
  side: Side,
  value: string,
): string {
  const fate = draft ? draft.fateOf(category, side, value) : { kind: "unassigned" as const };
  const selected = isSelected(selection, category, side, value);
  let fateBadge = "";
  let actions = "";
  if (fate.kind === "unassigned") {
    const single =
      side === "machine"
        ? `<button type="button" data-action="fp" data-category="${category}" data-side="machine" data-value="${esc(value)}">FP</button>`
        : `<button type="button" data-action="fn" data-category="${category}" data-side="gold" data-value="${esc(value)}">FN</button>`;
    actions = `
      <button type="button" data-action="toggle-select" aria-pressed="${selected}"
        data-category="${category}" data-side="${side}" data-value="${esc(value)}">${selected ? "Deselect" : "Select"}</button>
      ${single}`;
  } else {
    const label =
      fate.kind === "match"
        ? `matched to ${esc(fate.counterpart)}`
        : fate.kind === "group"
          ? `aggregation ${fate.groupId} (${fate.role})`
          : fate.kind.toUpperCase();
    fateBadge = `<span class="fate">${label}</span>`;
    actions = `<button type="button" data-action="clear" data-category="${category}" data-side="${side}" data-value="${esc(value)}">Undo</button>`;
  }
  return `
    <li class="item ${side} ${fate.kind !== "unassigned" ? "fated" : "pending"}${selected ? " selected" : ""}"
        data-item-side="${side}" data-item-category="${category}" data-item-value="${esc(value)}">
      <span class="value">${esc(value)}</span> ${fateBadge} ${actions}
    </li>`;
}

function selectionToolbar(selection: SelectionItem[]): string {
  const machine = selection.filter((s) => s.side === "machine");
  const gold = selection.filter((s) => s.side === "gold");
  const sameCategory = new Set(selection.map((s) => s.category)).size === 1;
  const canMatch = sameCategory && machine.length === 1 && gold.length === 1;
  const canForward = sameCategory && machine.length >= 2 && gold.length <= 1;
  const canBackward = sameCategory && gold.length >= 2 && machine.length === 1;
  return `
  <div class="selection-toolbar" role="toolbar" aria-label="selection actions">
    <span>${selection.length} selected</span>
    <button type="button" data-action="match-selected" ${canMatch ? "" : "disabled"}>Match 1:1</button>
    <button type="button" data-action="group-selected" data-direction="machine-into-gold" ${canForward ? "" : "disabled"}>
      Aggregate machine items${gold.length === 1 ? " into gold" : " (no counterpart)"}</button>
    <button type="button" data-action="group-selected" data-direction="gold-into-machine" ${canBackward ? "" : "disabled"}>
      Aggregate gold items into machine (backwards)</button>
    <button type="button" data-action="clear-selection" ${selection.length ? "" : "disabled"}>Clear selection</button>
  </div>`;
}

function matrixTable(pair: PairPayload): string {
  const rows = pair.matrix.rows
    .map((row) => {
      const direction = row.direction !== "none" ? ` <span class="direction">[${row.direction}]</span>` : "";
      return `
    <tr class="matrix-row" data-category="${row.category}" data-assessment="${row.assessment}">
      <td>${esc(CATEGORY_TITLES[row.category] ?? row.category)}</td>
      <td>${row.gold_values.map(esc).join("<br>") || "&mdash;"}</td>
      <td>${row.machine_values.map(esc).join("<br>") || "&mdash;"}</td>
      <td>${row.assessment}${direction}</td>
    </tr>`;
    })
    .join("");
  return `
  <table class="matrix">
    <thead><tr><th>Category</th><th>Human Value</th><th>Machine Value</th><th>Assessment</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

function unresolvedColumns(pair: PairPayload, draft: DecisionDraft | null, selection: SelectionItem[]): string {
  const sections = OPEN_CATEGORIES.map((category) => {
    const gold = pair.matrix.unresolved_gold[category] ?? [];
    const machine = pair.matrix.unresolved_machine[category] ?? [];
    if (gold.length === 0 && machine.length === 0) return "";
    return `
  <div class="unresolved-category" data-category="${category}">
    <h4>${CATEGORY_TITLES[category]}</h4>
    <div class="columns">
      <div class="column gold">
        <h5>Gold (unmatched)</h5>
        <ul>${gold.map((v) => unresolvedItem(draft, selection, category, "gold", v)).join("")}</ul>
      </div>
      <div class="column machine">
        <h5>Machine (unmatched)</h5>
        <ul>${machine.map((v) => unresolvedItem(draft, selection, category, "machine", v)).join("")}</ul>
      </div>
    </div>
  </div>`;
  }).join("");
  if (!sections.trim()) return "";
  return `<section class="unresolved"><h3>Unresolved items</h3>${selectionToolbar(selection)}${sections}</section>`;
}

export function renderPair(
  pair: PairPayload,
  draft: DecisionDraft | null,
  selection: SelectionItem[] = [],
  notice = "",
): string {
  const complete = pair.session.status === "complete";
  const header = `
  <header class="pair-header">
    <button type="button" data-action="back-to-queue">&larr; Queue</button>
    <h2>${esc(pair.pair_id)}</h2>
    <span class="session status-${pair.session.status}">session ${esc(pair.session.session_id)}: ${pair.session.status}</span>
  </header>`;
  const excerpt = pair.excerpt
    ? `<details class="excerpt"><summary>Publication excerpt (${pair.mention_offsets.length} accession mention${pair.mention_offsets.length === 1 ? "" : "s"})</summary><blockquote>${esc(pair.excerpt)}</blockquote></details>`
    : "";
  const noticeHtml = notice ? `<p class="notice" role="alert">${esc(notice)}</p>` : "";

  if (complete || !draft) {
    return `${header}${noticeHtml}
<section class="pair complete" data-pair="${esc(pair.pair_id)}">
  ${matrixTable(pair)}
  ${excerpt}
  ${renderMetricsPanel(pair.metrics, "Pair metrics (server-computed)")}
  <p class="readonly-note">This pair is complete; the matrix above is read-only.</p>
</section>`;
  }

  const pending = draft.pendingItems();
  const submit = pending.length
    ? `<button type="button" data-action="submit" disabled>Submit decisions</button>
       <p class="validation" role="alert">${pending.length} item${pending.length === 1 ? "" : "s"} still need a fate before submitting.</p>`
    : `<button type="button" data-action="submit">Submit decisions</button>`;
  return `${header}${noticeHtml}
<section class="pair open" data-pair="${esc(pair.pair_id)}">
  ${matrixTable(pair)}
  ${excerpt}
  ${unresolvedColumns(pair, draft, selection)}
  <footer class="submit-bar">${submit}</footer>
  ${renderMetricsPanel(pair.metrics, "Pair metrics (server-computed)")}
</section>`;
}
