// Dashboard view state. The rule here is "never fabricate": every power and
// sensor value on screen came out of an API response, and when polls start
// failing we mark what we have as stale instead of guessing.

import type { NodeRecord, SensorReadings } from "./api.js";

export const STALE_AFTER_MISSES = 3;
export const POLL_INTERVAL_MS = 2000;

export type NodeView = {
  address: number;
  block: string | null;
  power: "on" | "off" | "unknown";
  temperatureDisplay: string; // one decimal, or em dash before first reading
  humidityDisplay: string;
  lastSeen: number | null;
};

export function formatTenths(tenths: number | null | undefined): string {
  if (tenths === null || tenths === undefined) {
    return "—";
  }
  return (tenths / 10).toFixed(1);
}

export function toNodeView(
  record: NodeRecord,
  sensors: SensorReadings | null,
): NodeView {
  return {
    address: record.address,
    block: record.block,
    power: record.last_status,
    temperatureDisplay: formatTenths(sensors ? sensors.temperature : null),
    humidityDisplay: formatTenths(sensors ? sensors.humidity : null),
    lastSeen: record.last_seen,
  };
}

export class DashboardState {
  nodes: NodeView[] = [];
  missedPolls = 0;
  lastError: string | null = null;
  private sensors = new Map<number, SensorReadings>();

  get stale(): boolean {
    return this.missedPolls >= STALE_AFTER_MISSES;
  }

  pollSucceeded(records: NodeRecord[]): void {
    this.missedPolls = 0;
    this.lastError = null;
    this.nodes = records.map((record) =>
      toNodeView(record, this.sensors.get(record.address) ?? null),
    );
  }

  pollFailed(message: string): void {
    this.missedPolls += 1;
    this.lastError = message;
  }

  sensorsUpdated(address: number, readings: SensorReadings): void {
    this.sensors.set(address, readings);
    const view = this.nodes.find((n) => n.address === address);
    if (view) {
      view.temperatureDisplay = formatTenths(readings.temperature);
      view.humidityDisplay = formatTenths(readings.humidity);
    }
  }

  // A mutation we sent got no usable answer: that node is in an unknown
  // power state until a poll tells us otherwise.
  markUnknown(address: number): void {
    const view = this.nodes.find((n) => n.address === address);
    if (view) {
      view.power = "unknown";
    }
  }
}
