// Thin HTTP client for the edge service's console interface.

import type { ConsoleEvent, ControlResponse, EdgeState, Mode, Route } from "./types.js";

export interface EdgeTransport {
  postJson(path: string, body: unknown): Promise<{ status: number; body: any }>;
  getJson(path: string): Promise<{ status: number; body: any }>;
}

export class FetchTransport implements EdgeTransport {
  constructor(private baseUrl: string) {}

  async postJson(path: string, body: unknown) {
    const resp = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return { status: resp.status, body: await resp.json() };
  }

  async getJson(path: string) {
    const resp = await fetch(this.baseUrl + path);
    return { status: resp.status, body: await resp.json() };
  }
}

export class EdgeClient {
  constructor(private transport: EdgeTransport) {}

  async state(): Promise<EdgeState> {
    const { status, body } = await this.transport.getJson("/state");
    if (status !== 200) throw new Error(`state failed: ${JSON.stringify(body)}`);
    return body as EdgeState;
  }

  async control(action: string, extra: Record<string, unknown> = {}): Promise<ControlResponse> {
    const { status, body } = await this.transport.postJson("/control", { action, ...extra });
    if (status !== 200) throw new Error(body?.error ?? `control ${action} failed`);
    return body as ControlResponse;
  }

  async setMode(mode: Mode): Promise<ControlResponse> {
    return this.control("set-mode", { mode });
  }

  async overrideRoute(itemId: string, route: Route, operator: string): Promise<ControlResponse> {
    return this.control("override-route", { item_id: itemId, route, operator });
  }

  /** Manual upload; only valid in manual mode (the edge answers 409 otherwise). */
  async gradeImage(imageBase64: string): Promise<ConsoleEvent> {
    const { status, body } = await this.transport.postJson("/grade", { image: imageBase64 });
    if (status !== 200) throw new Error(body?.error ?? `grade failed (${status})`);
    return body as ConsoleEvent;
  }
}
