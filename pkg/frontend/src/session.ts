// Operator session: mode switching and route overrides. State flips only on
// the edge's acknowledgment, and every override lands in a local audit trail
// (the edge keeps its own authoritative copy).

import type { EdgeClient } from "./client.js";
import type { FeedStore } from "./feed.js";
import type { AuditEntry, Mode, Route } from "./types.js";

export class SessionController {
  mode: Mode = "auto";
  paused = false;
  auditLog: AuditEntry[] = [];

  constructor(private client: EdgeClient, private feed: FeedStore) {}

  get manualUploadEnabled(): boolean {
    return this.mode === "manual";
  }

  async resync(): Promise<void> {
    const state = await this.client.state();
    this.mode = state.mode;
    this.paused = state.paused;
  }

  async setMode(mode: Mode): Promise<void> {
    const resp = await this.client.setMode(mode);
    // Only the acknowledged state is believed.
    this.mode = resp.state.mode;
    this.paused = resp.state.paused;
  }

  async pause(): Promise<void> {
    const resp = await this.client.control("pause");
    this.paused = resp.state.paused;
  }

  async resume(): Promise<void> {
    const resp = await this.client.control("resume");
    this.paused = resp.state.paused;
  }

  /**
   * Re-route one item. The edge emits an operator-attributed SwitchCommand
   * and returns the audit entry, which we mirror locally and apply to the
   * feed so the card recolours.
   */
  async overrideRoute(itemId: string, route: Route, operator = "console"): Promise<AuditEntry> {
    const resp = await this.client.overrideRoute(itemId, route, operator);
    if (!resp.audit) {
      throw new Error("override was not acknowledged with an audit entry");
    }
    this.auditLog.push(resp.audit);
    this.feed.applyOverride(itemId, route);
    return resp.audit;
  }

  /** Manual grading is refused locally while in auto mode (the edge would
   * refuse it anyway with a 409). */
  async manualGrade(imageBase64: string) {
    if (!this.manualUploadEnabled) {
      throw new Error("manual upload requires manual mode");
    }
    return this.client.gradeImage(imageBase64);
  }
}
