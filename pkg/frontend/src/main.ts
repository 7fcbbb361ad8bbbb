// Console entry point: connect to the edge, replay history, stream live
// events, and wire the operator controls.

import { EdgeClient, FetchTransport } from "./client.js";
import { renderFeed, renderStatus } from "./dom.js";
import { FeedStore } from "./feed.js";
import { SessionController } from "./session.js";
import type { ConsoleEvent, Route } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const edgeUrl = params.get("edge") ?? "http://127.0.0.1:7680";

const feed = new FeedStore();
const client = new EdgeClient(new FetchTransport(edgeUrl));
const session = new SessionController(client, feed);

const feedEl = el<HTMLElement>("feed");
const statusEl = el<HTMLElement>("status");
const countersEl = el<HTMLElement>("counters");

function redraw(): void {
  renderFeed(document, feedEl, feed);
  renderStatus(statusEl, feed.status, session.mode, session.paused);
  const c = feed.counters();
  countersEl.textContent =
    `market ${c.byRoute.Market} | defective ${c.byRoute.Defective}` +
    ` | degraded ${c.degraded} | total ${feed.size}`;
  el<HTMLButtonElement>("upload-btn").disabled = !session.manualUploadEnabled;
}

function connectEvents(): void {
  const source = new EventSource(`${edgeUrl}/events`);
  source.onopen = () => {
    feed.status = "live";
    redraw();
  };
  source.onmessage = (msg) => {
    const event = JSON.parse(msg.data) as ConsoleEvent;
    if (feed.add(event)) redraw();
  };
  source.onerror = () => {
    feed.status = "reconnecting";
    redraw();
    // EventSource retries on its own; the banner shows the gap.
  };
}

async function overridePrompt(itemId: string): Promise<void> {
  const current = feed.effectiveRoute(itemId);
  const next: Route = current === "Market" ? "Defective" : "Market";
  if (!window.confirm(`Re-route ${itemId} from ${current} to ${next}?`)) return;
  try {
    await session.overrideRoute(itemId, next);
  } catch (err) {
    window.alert(String(err));
  }
  redraw();
}

function wireControls(): void {
  el<HTMLButtonElement>("pause-btn").onclick = () => session.pause().then(redraw);
  el<HTMLButtonElement>("resume-btn").onclick = () => session.resume().then(redraw);
  el<HTMLSelectElement>("mode-select").onchange = (e) => {
    const mode = (e.target as HTMLSelectElement).value as "auto" | "manual";
    session.setMode(mode).then(redraw).catch((err) => window.alert(String(err)));
  };
  feedEl.addEventListener("dblclick", (e) => {
    const card = (e.target as HTMLElement).closest<HTMLElement>(".card");
    if (card?.dataset.itemId) overridePrompt(card.dataset.itemId);
  });
  el<HTMLInputElement>("upload-input").onchange = async (e) => {
    const input = e.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const buf = new Uint8Array(await file.arrayBuffer());
    let binary = "";
    buf.forEach((b) => (binary += String.fromCharCode(b)));
    try {
      const event = await session.manualGrade(btoa(binary));
      feed.add(event);
    } catch (err) {
      el<HTMLElement>("error-banner").textContent = String(err);
    }
    input.value = "";
    redraw();
  };
  el<HTMLButtonElement>("upload-btn").onclick = () => el<HTMLInputElement>("upload-input").click();
}

async function start(): Promise<void> {
  wireControls();
  try {
    await session.resync();
  } catch {
    feed.status = "reconnecting";
  }
  connectEvents();
  redraw();
}

start();
