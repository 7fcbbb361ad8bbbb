// Feed state: deduplicated grade events, newest first, with rolling counters.
// Rebuilding a store from the /events history reproduces the same view, so a
// page reload loses nothing that the server still knows.

import type { ConnectionStatus, ConsoleEvent, Route } from "./types.js";

export interface FeedCounters {
  byLabel: Record<string, number>;
  byRoute: Record<Route, number>;
  degraded: number;
}

export class FeedStore {
  private byId = new Map<string, ConsoleEvent>();
  private order: string[] = []; // item ids, newest first
  private overrides = new Map<string, Route>();
  status: ConnectionStatus = "connecting";

  /** Returns true when the event was new; duplicates are dropped. */
  add(event: ConsoleEvent): boolean {
    if (this.byId.has(event.item_id)) {
      return false;
    }
    this.byId.set(event.item_id, event);
    const at = this.order.findIndex((id) => this.byId.get(id)!.seq < event.seq);
    if (at === -1) {
      this.order.push(event.item_id);
    } else {
      this.order.splice(at, 0, event.item_id);
    }
    return true;
  }

  /** Route shown for an item: operator overrides win over the graded route. */
  effectiveRoute(itemId: string): Route | undefined {
    return this.overrides.get(itemId) ?? this.byId.get(itemId)?.route;
  }

  applyOverride(itemId: string, route: Route): void {
    if (this.byId.has(itemId)) {
      this.overrides.set(itemId, route);
    }
  }

  get(itemId: string): ConsoleEvent | undefined {
    return this.byId.get(itemId);
  }

  /** Events newest-first. */
  events(): ConsoleEvent[] {
    return this.order.map((id) => this.byId.get(id)!);
  }

  get size(): number {
    return this.order.length;
  }

  counters(): FeedCounters {
    const byLabel: Record<string, number> = {};
    const byRoute: Record<Route, number> = { Market: 0, Defective: 0 };
    let degraded = 0;
    for (const event of this.byId.values()) {
      byLabel[event.label] = (byLabel[event.label] ?? 0) + 1;
      byRoute[this.effectiveRoute(event.item_id)!] += 1;
      if (event.degraded) degraded += 1;
    }
    return { byLabel, byRoute, degraded };
  }
}
