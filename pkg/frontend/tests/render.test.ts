// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { cardModel } from "../src/cards.js";
import { renderCard, renderFeed, renderStatus } from "../src/dom.js";
import { FeedStore } from "../src/feed.js";
import { loadSession } from "./fixture.js";

const session = loadSession();

describe("card rendering", () => {
  it("gives Market events a green card and Defective events a red card", () => {
    for (const event of session.events) {
      const card = renderCard(document, cardModel(event));
      if (event.route === "Market") {
        expect(card.classList.contains("card-market")).toBe(true);
        expect(card.classList.contains("card-defective")).toBe(false);
      } else {
        expect(card.classList.contains("card-defective")).toBe(true);
        expect(card.classList.contains("card-market")).toBe(false);
      }
    }
  });

  it("draws one box per detection and badges the subclass", () => {
    const event = session.events.find((e) => e.detections.length > 5)!;
    const card = renderCard(document, cardModel(event));
    expect(card.querySelectorAll(".detection-box")).toHaveLength(event.detections.length);
    expect(card.querySelector(".badge-subclass")?.textContent).toBe("WellRipened");
    expect(card.querySelector("img")?.src.startsWith("data:image/png;base64,")).toBe(true);
  });

  it("renders the whole recorded feed without duplicates, newest first", () => {
    const feed = new FeedStore();
    session.events.forEach((e) => feed.add(e));
    const container = document.createElement("main");
    renderFeed(document, container, feed);
    const cards = [...container.querySelectorAll<HTMLElement>(".card")];
    expect(cards).toHaveLength(session.events.length);
    const ids = cards.map((c) => c.dataset.itemId);
    expect(new Set(ids).size).toBe(ids.length);
    expect(ids[0]).toBe(session.events.at(-1)!.item_id); // newest on top
  });

  it("recolours an overridden card on re-render", () => {
    const feed = new FeedStore();
    session.events.forEach((e) => feed.add(e));
    const target = session.events.find((e) => e.route === "Market")!;
    feed.applyOverride(target.item_id, "Defective");
    const container = document.createElement("main");
    renderFeed(document, container, feed);
    const card = container.querySelector<HTMLElement>(
      `[data-item-id="${target.item_id}"]`,
    )!;
    expect(card.classList.contains("card-defective")).toBe(true);
  });
});

describe("status banner", () => {
  it("shows connection state, mode and pause flag", () => {
    const el = document.createElement("div");
    renderStatus(el, "reconnecting", "manual", true);
    expect(el.textContent).toContain("reconnecting");
    expect(el.textContent).toContain("manual");
    expect(el.textContent).toContain("paused");
    expect(el.classList.contains("status-reconnecting")).toBe(true);
  });
});
