// Shapes shared with the edge service's JSON interfaces (docs/protocol.md).

export type Route = "Market" | "Defective";
export type LabelName = "Unripened" | "Ripened" | "Overripened" | "Unclassifiable";
export type SubclassName = "MidRipened" | "WellRipened";
export type Mode = "auto" | "manual";

export interface DetectionBox {
  x: number;
  y: number;
  w: number;
  h: number;
  score: number;
  class: string;
}

/** Mirror of one GradeEvent payload; render-complete on its own. */
export interface ConsoleEvent {
  item_id: string;
  label: LabelName;
  subclass: SubclassName | null;
  detections: DetectionBox[];
  route: Route;
  timings: Record<string, number>;
  layer2_invoked: boolean;
  unclassifiable: boolean;
  degraded: boolean;
  annotations: string[];
  image_size: [number, number];
  thumbnail: string; // base64 PNG
  seq: number;
}

export interface AuditEntry {
  item_id: string;
  from_route: Route;
  to_route: Route;
  operator: string;
  ts: number;
}

export interface EdgeState {
  mode: Mode;
  paused: boolean;
  counters: Record<string, number>;
  events: number;
  audit: number;
}

export interface ControlResponse {
  ok: boolean;
  action: string;
  state: EdgeState;
  audit?: AuditEntry;
}

export type ConnectionStatus = "connecting" | "live" | "reconnecting";
