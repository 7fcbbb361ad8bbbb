// Loader for the recorded simulator session used across the console tests.
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { AuditEntry, ConsoleEvent, EdgeState } from "../src/types.js";

export interface RecordedSession {
  events: ConsoleEvent[];
  audit: AuditEntry[];
  override_response: { ok: boolean; audit: AuditEntry; state: EdgeState };
  switch_commands: { item_id: string; route: string; operator: string | null }[];
  state: EdgeState;
}

const here = dirname(fileURLToPath(import.meta.url));

export function loadSession(): RecordedSession {
  const raw = readFileSync(join(here, "fixtures", "session.json"), "utf-8");
  return JSON.parse(raw) as RecordedSession;
}
