// DOM rendering for the live feed. Cards are rebuilt from view models; the
// document carries no state of its own.

import { CardModel, cardModel } from "./cards.js";
import type { FeedStore } from "./feed.js";
import type { ConsoleEvent, Route } from "./types.js";

export function renderCard(doc: Document, model: CardModel): HTMLElement {
  const card = doc.createElement("article");
  card.className = `card ${model.routeClass}${model.degraded ? " card-degraded" : ""}`;
  card.dataset.itemId = model.itemId;

  const thumbWrap = doc.createElement("div");
  thumbWrap.className = "thumb";
  thumbWrap.style.width = `${model.thumbWidth}px`;
  thumbWrap.style.height = `${model.thumbHeight}px`;
  const img = doc.createElement("img");
  img.src = model.thumbnailUrl;
  img.width = model.thumbWidth;
  img.height = model.thumbHeight;
  thumbWrap.appendChild(img);
  for (const box of model.boxes) {
    const el = doc.createElement("div");
    el.className = "detection-box";
    el.style.left = `${box.left}px`;
    el.style.top = `${box.top}px`;
    el.style.width = `${box.width}px`;
    el.style.height = `${box.height}px`;
    el.title = `defect score ${box.score.toFixed(2)}`;
    thumbWrap.appendChild(el);
  }
  card.appendChild(thumbWrap);

  const body = doc.createElement("div");
  body.className = "card-body";
  const title = doc.createElement("h3");
  title.textContent = `${model.itemId} - ${model.label}`;
  body.appendChild(title);
  if (model.subclassBadge) {
    const badge = doc.createElement("span");
    badge.className = "badge badge-subclass";
    badge.textContent = model.subclassBadge;
    body.appendChild(badge);
  }
  const route = doc.createElement("p");
  route.className = "route-text";
  route.textContent = model.routeText === "Market"
    ? `Route: ${model.routeText} (passed)`
    : `Route: ${model.routeText} (alarm)`;
  body.appendChild(route);
  const detail = doc.createElement("p");
  detail.className = "detail";
  const bits = [`defects: ${model.defectCount}`];
  if (model.totalMs !== null) bits.push(`${model.totalMs} ms`);
  if (model.degraded) bits.push("degraded: cloud unreachable");
  for (const a of model.annotations) bits.push(a);
  detail.textContent = bits.join(" | ");
  body.appendChild(detail);
  card.appendChild(body);
  return card;
}

export function renderFeed(doc: Document, container: HTMLElement, feed: FeedStore): void {
  container.textContent = "";
  for (const event of feed.events()) {
    const route = feed.effectiveRoute(event.item_id)!;
    const model = cardModel(overrideRouteView(event, route));
    container.appendChild(renderCard(doc, model));
  }
}

function overrideRouteView(event: ConsoleEvent, route: Route): ConsoleEvent {
  return event.route === route ? event : { ...event, route };
}

export function renderStatus(el: HTMLElement, status: string, mode: string, paused: boolean): void {
  el.textContent = `${status} | mode: ${mode}${paused ? " | paused" : ""}`;
  el.className = `status status-${status}`;
}
