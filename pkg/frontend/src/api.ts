// Typed client for the clusterbus control API. Every dashboard request goes
// through here; nothing else in the UI talks to the network.

export type NodeRecord = {
  address: number;
  block: string | null;
  last_status: "unknown" | "on" | "off";
  last_seen: number | null;
  labels: string[];
  diagnostics?: {
    frames_seen: number;
    frames_executed: number;
    malformed_count: number;
  };
};

export type PowerState = "on" | "off";

export type PowerResult = {
  outcome: "acked" | "timeout";
  attempts: number;
  elapsed_us: number;
};

export type SensorReadings = {
  temperature: number; // tenths of a degree C
  humidity: number; // tenths of %RH
};

export type AuditEntry = {
  wall_time: string;
  actor: string;
  target: string;
  command: string;
  outcome: string;
  detail: string;
};

export type BlockMap = Record<string, number[]>;

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    readonly actor: string = "dashboard",
  ) {}

  getNodes(): Promise<NodeRecord[]> {
    return this.request("GET", "/nodes");
  }

  getNode(address: number): Promise<NodeRecord> {
    return this.request("GET", `/nodes/${address}`);
  }

  setNodePower(address: number, state: PowerState): Promise<PowerResult> {
    return this.request("POST", `/nodes/${address}/power`, { state });
  }

  getSensors(address: number): Promise<SensorReadings> {
    return this.request("GET", `/nodes/${address}/sensors`);
  }

  scan(from = 1, to = 254): Promise<{ responders: number[] }> {
    return this.request("POST", "/bus/scan", { from, to });
  }

  getBlocks(): Promise<BlockMap> {
    return this.request("GET", "/blocks");
  }

  setBlockPower(
    name: string,
    state: PowerState,
  ): Promise<{ outcomes: Record<string, string> }> {
    return this.request("POST", `/blocks/${encodeURIComponent(name)}/power`, {
      state,
    });
  }

  getAudit(filter: { actor?: string; since?: string } = {}): Promise<AuditEntry[]> {
    const params = new URLSearchParams();
    if (filter.actor) params.set("actor", filter.actor);
    if (filter.since) params.set("since", filter.since);
    const query = params.toString();
    return this.request("GET", query ? `/audit?${query}` : "/audit");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {
      method,
      headers: { "X-Actor": this.actor },
    };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "error" in payload
          ? String((payload as { error: unknown }).error)
          : response.statusText;
      throw new ApiError(response.status, payload, `${method} ${path}: ${detail}`);
    }
    return payload as T;
  }
}
