// Pure view-model layer: one GradeEvent in, one renderable card out.
// Route colours are a pure function of the route field and nothing else.

import type { ConsoleEvent, Route } from "./types.js";

export const THUMB_DISPLAY_WIDTH = 128;

export type RouteClass = "card-market" | "card-defective";

export interface ScaledBox {
  left: number;
  top: number;
  width: number;
  height: number;
  score: number;
}

export interface CardModel {
  itemId: string;
  seq: number;
  label: string;
  subclassBadge: string | null;
  routeClass: RouteClass;
  routeText: Route;
  degraded: boolean;
  annotations: string[];
  defectCount: number;
  boxes: ScaledBox[];
  thumbnailUrl: string;
  thumbWidth: number;
  thumbHeight: number;
  totalMs: number | null;
}

export function routeColorClass(route: Route): RouteClass {
  return route === "Market" ? "card-market" : "card-defective";
}

/** Scale full-image detection boxes onto the displayed thumbnail. */
export function scaleBoxes(event: ConsoleEvent, displayWidth: number): ScaledBox[] {
  const [imgW] = event.image_size;
  const s = displayWidth / imgW;
  return event.detections.map((d) => ({
    left: d.x * s,
    top: d.y * s,
    width: d.w * s,
    height: d.h * s,
    score: d.score,
  }));
}

export function cardModel(event: ConsoleEvent, displayWidth = THUMB_DISPLAY_WIDTH): CardModel {
  const [imgW, imgH] = event.image_size;
  const total = event.timings && typeof event.timings.total === "number"
    ? Math.round(event.timings.total * 1000)
    : null;
  return {
    itemId: event.item_id,
    seq: event.seq,
    label: event.label,
    subclassBadge: event.subclass,
    routeClass: routeColorClass(event.route),
    routeText: event.route,
    degraded: event.degraded,
    annotations: event.annotations ?? [],
    defectCount: event.detections.length,
    boxes: scaleBoxes(event, displayWidth),
    thumbnailUrl: `data:image/png;base64,${event.thumbnail}`,
    thumbWidth: displayWidth,
    thumbHeight: Math.round((imgH / imgW) * displayWidth),
    totalMs: total,
  };
}
