/** UI round-trip against a stubbed review API whose payloads were generated
 * by the real server: queue -> pair -> printed aggregation -> submit ->
 * metrics preview, asserting displayed numbers always equal a direct GET. */

import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import test from "node:test";

import { ApiError, ReviewApi, type FetchLike } from "../src/api.js";
import { DecisionDraft } from "../src/draft.js";
import { renderMetricsPanel, renderPair, renderPooled, renderQueue } from "../src/render.js";
import type {
  DecisionsBody,
  PairPayload,
  PooledPayload,
  QueueItem,
  SubmitResponse,
} from "../src/types.js";

function fixture<T>(name: string): T {
  const url = new URL(`../../test/fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

const PAIR_ID = "frisch-2018:CP000046.1";

interface StubState {
  submitted: boolean;
  requests: { method: string; url: string; body?: unknown }[];
}

/** In-memory stand-in for the review service, faithful to its wire shapes
 * and status codes (409 on double submit). */
function stubApi(): { fetchFn: FetchLike; state: StubState } {
  const state: StubState = { submitted: false, requests: [] };
  const json = (payload: unknown, status = 200) =>
    new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });

  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    state.requests.push({ method, url, body });

    if (method === "GET" && url === "/api/queue") {
      const queue = fixture<QueueItem[]>("queue.json");
      if (state.submitted) {
        for (const item of queue) {
          if (item.pair_id === PAIR_ID) {
            item.status = "complete";
            item.unresolved = 0;
            item.unresolved_gold = 0;
            item.unresolved_machine = 0;
          }
        }
      }
      return json(queue);
    }
    if (method === "GET" && url === `/api/pairs/${encodeURIComponent(PAIR_ID)}`) {
      return json(
        state.submitted
          ? fixture<PairPayload>("pair_frisch_complete.json")
          : fixture<PairPayload>("pair_frisch.json"),
      );
    }
    if (method === "POST" && url === `/api/pairs/${encodeURIComponent(PAIR_ID)}/decisions`) {
      if (state.submitted) {
        return json({ detail: `pair ${PAIR_ID} already has submitted decisions` }, 409);
      }
      state.submitted = true;
      return json(fixture<SubmitResponse>("post_response_frisch.json"));
    }
    if (method === "GET" && url === "/api/metrics") {
      return json(
        state.submitted
          ? fixture<PooledPayload>("metrics_after.json")
          : { pairs_scored: 0, rows: [] },
      );
    }
    return json({ detail: `unknown route ${method} ${url}` }, 404);
  };
  return { fetchFn, state };
}

function printedDecisions(draft: DecisionDraft): DecisionsBody {
  draft.createGroup(
    "use_cases",
    "machine-into-gold",
    ["Outgroup selection in phylogenetic analysis", "Rooting of the phylogenetic tree"],
    "Outgroup in a phylogenetic analysis",
  );
  draft.matchItems("tools", "RAxML", "RAxML 8.2.11");
  draft.markFalseNegative("use_cases", "Outgroup in a molecular dating analysis");
  for (const tool of ["BEAST 2.4.5", "ClonalFrameML", "gingr", "Interactive Tree of Life", "Parsnp", "R", "VariScan"]) {
    draft.markFalseNegative("tools", tool);
  }
  return draft.toRequestBody("ui-reviewer");
}

test("full round-trip: queue -> pair -> aggregation -> server metrics", async () => {
  const { fetchFn } = stubApi();
  const api = new ReviewApi(fetchFn);

  // the loaded fixture shows the unresolved queue
  const queue = await api.queue();
  const queueHtml = renderQueue(queue);
  const entry = queue.find((q) => q.pair_id === PAIR_ID)!;
  assert.equal(entry.status, "open");
  assert.equal(entry.unresolved, 13);
  assert.ok(queueHtml.includes(PAIR_ID));

  // open the pair, apply the printed aggregation + verdicts
  const pair = await api.pair(PAIR_ID);
  const draft = new DecisionDraft(pair);
  const body = printedDecisions(draft);
  const response = await api.submitDecisions(PAIR_ID, body);

  // the preview is the server's computation: P=1.000, R=0.333
  assert.equal(response.metrics.precision, 1.0);
  assert.equal(response.metrics.recall, 0.333);
  assert.equal(response.metrics.f1, 0.5);
  assert.deepEqual(response.metrics.counts, { tp: 4, fp: 0, tn: 0, fn: 8 });
  const previewHtml = renderMetricsPanel(response.metrics, "Pair metrics");
  assert.ok(previewHtml.includes('data-metric="precision">1.000'));
  assert.ok(previewHtml.includes('data-metric="recall">0.333'));

  // displayed pooled metrics equal a direct API GET
  const direct = await api.metrics();
  assert.deepEqual(response.pooled, direct);
  assert.equal(renderPooled(response.pooled), renderPooled(direct));

  // and the refreshed pair view equals the server's completed state
  const refreshed = await api.pair(PAIR_ID);
  assert.equal(refreshed.session.status, "complete");
  const readonlyHtml = renderPair(refreshed, null);
  assert.ok(readonlyHtml.includes('data-metric="precision">1.000'));
  assert.ok(readonlyHtml.includes("read-only"));
});

test("resubmit of a completed pair surfaces a 409 conflict", async () => {
  const { fetchFn } = stubApi();
  const api = new ReviewApi(fetchFn);
  const pair = await api.pair(PAIR_ID);
  const body = printedDecisions(new DecisionDraft(pair));
  await api.submitDecisions(PAIR_ID, body);
  await assert.rejects(
    api.submitDecisions(PAIR_ID, body),
    (err: unknown) => err instanceof ApiError && err.isConflict,
  );
});

test("the POST body on the wire matches what the draft built", async () => {
  const { fetchFn, state } = stubApi();
  const api = new ReviewApi(fetchFn);
  const pair = await api.pair(PAIR_ID);
  const body = printedDecisions(new DecisionDraft(pair));
  await api.submitDecisions(PAIR_ID, body);
  const post = state.requests.find((r) => r.method === "POST")!;
  assert.deepEqual(post.body, JSON.parse(JSON.stringify(body)));
  const sent = post.body as DecisionsBody;
  assert.equal(sent.aggregations.length, 1);
  assert.equal(sent.aggregations[0].member_values.length, 2);
  assert.equal(sent.verdicts.filter((v) => v.fate === "fn").length, 8);
  assert.equal(sent.verdicts.filter((v) => v.fate === "match").length, 1);
});

test("queue reflects completion after submit", async () => {
  const { fetchFn } = stubApi();
  const api = new ReviewApi(fetchFn);
  const pair = await api.pair(PAIR_ID);
  await api.submitDecisions(PAIR_ID, printedDecisions(new DecisionDraft(pair)));
  const queue = await api.queue();
  const entry = queue.find((q) => q.pair_id === PAIR_ID)!;
  assert.equal(entry.status, "complete");
  assert.equal(entry.unresolved, 0);
});

test("API errors carry status and detail", async () => {
  const { fetchFn } = stubApi();
  const api = new ReviewApi(fetchFn);
  await assert.rejects(
    api.pair("missing-pair"),
    (err: unknown) => err instanceof ApiError && err.status === 404,
  );
});
