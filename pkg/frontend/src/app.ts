// DOM wiring: node grid, block panel, scan trigger, audit table, error
// banner. Rendering is a full repaint from DashboardState; all data flows
// API -> state -> DOM, never sideways.

import { ApiClient, ApiError, AuditEntry, PowerState } from "./api.js";
import { MutationGate } from "./gate.js";
import { DashboardState, POLL_INTERVAL_MS } from "./state.js";

const AUDIT_PAGE_SIZE = 12;

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export class App {
  readonly state = new DashboardState();
  readonly gate = new MutationGate();
  private blocks: Record<string, number[]> = {};
  private audit: AuditEntry[] = [];
  private auditPage = 0;
  private auditActorFilter = "";
  private timer: number | undefined;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.root.innerHTML = `
      <header>
        <h1>clusterbus</h1>
        <div class="toolbar">
          <button id="scan">scan bus</button>
          <span id="clock"></span>
        </div>
      </header>
      <div id="banner" hidden></div>
      <section><h2>nodes</h2><div id="grid" class="grid"></div></section>
      <section><h2>blocks</h2><div id="blocks"></div></section>
      <section>
        <h2>audit</h2>
        <div class="audit-controls">
          <input id="audit-actor" placeholder="filter by actor" />
          <button id="audit-refresh">refresh</button>
          <button id="audit-prev">&laquo;</button>
          <span id="audit-page"></span>
          <button id="audit-next">&raquo;</button>
        </div>
        <table id="audit"></table>
      </section>`;
    this.el("scan").addEventListener("click", () => void this.runScan());
    this.el("audit-refresh").addEventListener("click", () => void this.loadAudit());
    this.el("audit-prev").addEventListener("click", () => this.pageAudit(-1));
    this.el("audit-next").addEventListener("click", () => this.pageAudit(1));
    this.el("audit-actor").addEventListener("change", (event) => {
      this.auditActorFilter = (event.target as HTMLInputElement).value.trim();
      void this.loadAudit();
    });
  }

  start(): void {
    void this.refresh();
    void this.loadAudit();
    this.timer = setInterval(
      () => void this.refresh(),
      POLL_INTERVAL_MS,
    ) as unknown as number;
  }

  stop(): void {
    if (this.timer !== undefined) {
      clearInterval(this.timer);
    }
  }

  async refresh(): Promise<void> {
    try {
      const [records, blocks] = await Promise.all([
        this.api.getNodes(),
        this.api.getBlocks(),
      ]);
      this.state.pollSucceeded(records);
      this.blocks = blocks;
    } catch (error) {
      this.state.pollFailed(describe(error));
    }
    this.render();
  }

  // -- mutations ----------------------------------------------------------

  async togglePower(address: number, current: string): Promise<void> {
    const next: PowerState = current === "on" ? "off" : "on";
    await this.gate.run(`power:${address}`, async () => {
      try {
        const result = await this.api.setNodePower(address, next);
        if (result.outcome !== "acked") {
          this.state.markUnknown(address);
          this.showBanner(`node ${address} did not acknowledge (${result.outcome})`);
        }
      } catch (error) {
        this.state.markUnknown(address);
        this.showBanner(describe(error));
      }
      await this.refresh();
    });
    this.render();
  }

  async powerBlock(name: string, state: PowerState): Promise<void> {
    await this.gate.run(`block:${name}`, async () => {
      try {
        const result = await this.api.setBlockPower(name, state);
        const failed = Object.entries(result.outcomes).filter(
          ([, outcome]) => outcome !== "acked",
        );
        if (failed.length > 0) {
          this.showBanner(
            `block ${name}: ${failed.length} node(s) did not acknowledge`,
          );
        }
      } catch (error) {
        this.showBanner(describe(error));
      }
      await this.refresh();
    });
    this.render();
  }

  async runScan(): Promise<void> {
    await this.gate.run("scan", async () => {
      this.render(); // repaint so the scan button shows disabled
      try {
        await this.api.scan();
      } catch (error) {
        this.showBanner(describe(error));
      }
      await this.refresh();
    });
    this.render();
  }

  async readSensors(address: number): Promise<void> {
    await this.gate.run(`sensors:${address}`, async () => {
      try {
        this.state.sensorsUpdated(address, await this.api.getSensors(address));
      } catch (error) {
        this.showBanner(describe(error));
      }
    });
    this.render();
  }

  async loadAudit(): Promise<void> {
    try {
      this.audit = await this.api.getAudit(
        this.auditActorFilter ? { actor: this.auditActorFilter } : {},
      );
      this.auditPage = 0;
    } catch (error) {
      this.showBanner(describe(error));
    }
    this.render();
  }

  pageAudit(step: number): void {
    const pages = Math.max(1, Math.ceil(this.audit.length / AUDIT_PAGE_SIZE));
    this.auditPage = Math.min(Math.max(this.auditPage + step, 0), pages - 1);
    this.render();
  }

  // -- rendering -------------------------------------------------------------

  render(): void {
    this.renderBanner();
    this.renderGrid();
    this.renderBlocks();
    this.renderAudit();
    this.el("clock").textContent = this.state.stale
      ? `stale (${this.state.missedPolls} missed polls)`
      : "live";
    (this.el("scan") as HTMLButtonElement).disabled = this.gate.isBusy("scan");
  }

  private renderGrid(): void {
    const grid = this.el("grid");
    grid.classList.toggle("stale", this.state.stale);
    grid.innerHTML = "";
    if (this.state.nodes.length === 0) {
      grid.innerHTML = `<p class="empty">no nodes in the registry yet; run a scan</p>`;
      return;
    }
    for (const node of this.state.nodes) {
      const tile = document.createElement("div");
      tile.className = `tile power-${node.power}`;
      tile.dataset.address = String(node.address);
      const busy = this.gate.isBusy(`power:${node.address}`);
      tile.innerHTML = `
        <div class="address">${String(node.address).padStart(3, "0")}</div>
        <div class="power-state">${node.power}</div>
        <div class="sensors">${escapeHtml(node.temperatureDisplay)} °C ·
          ${escapeHtml(node.humidityDisplay)} %RH</div>
        <div class="block-tag">${node.block ? escapeHtml(node.block) : ""}</div>
        <div class="tile-actions">
          <button class="toggle" ${busy ? "disabled" : ""}>
            ${node.power === "on" ? "turn off" : "turn on"}
          </button>
          <button class="read-sensors">sensors</button>
        </div>`;
      tile
        .querySelector(".toggle")!
        .addEventListener("click", () => void this.togglePower(node.address, node.power));
      tile
        .querySelector(".read-sensors")!
        .addEventListener("click", () => void this.readSensors(node.address));
      grid.appendChild(tile);
    }
  }

  private renderBlocks(): void {
    const host = this.el("blocks");
    host.innerHTML = "";
    const names = Object.keys(this.blocks).sort();
    if (names.length === 0) {
      host.innerHTML = `<p class="empty">no blocks defined</p>`;
      return;
    }
    for (const name of names) {
      const row = document.createElement("div");
      row.className = "block-row";
      const busy = this.gate.isBusy(`block:${name}`);
      row.innerHTML = `
        <span class="block-name">${escapeHtml(name)}</span>
        <span class="block-members">${this.blocks[name].join(", ")}</span>
        <button class="block-on" ${busy ? "disabled" : ""}>on</button>
        <button class="block-off" ${busy ? "disabled" : ""}>off</button>`;
      row
        .querySelector(".block-on")!
        .addEventListener("click", () => void this.powerBlock(name, "on"));
      row
        .querySelector(".block-off")!
        .addEventListener("click", () => void this.powerBlock(name, "off"));
      host.appendChild(row);
    }
  }

  private renderAudit(): void {
    const table = this.el("audit");
    const start = this.auditPage * AUDIT_PAGE_SIZE;
    const page = [...this.audit].reverse().slice(start, start + AUDIT_PAGE_SIZE);
    const rows = page
      .map(
        (entry) => `<tr class="outcome-${escapeHtml(entry.outcome)}">
          <td>${escapeHtml(entry.wall_time.slice(0, 19))}</td>
          <td>${escapeHtml(entry.actor)}</td>
          <td>${escapeHtml(entry.command)}</td>
          <td>${escapeHtml(entry.target)}</td>
          <td>${escapeHtml(entry.outcome)}</td>
        </tr>`,
      )
      .join("");
    table.innerHTML =
      `<tr><th>time</th><th>actor</th><th>command</th><th>target</th><th>outcome</th></tr>` +
      rows;
    const pages = Math.max(1, Math.ceil(this.audit.length / AUDIT_PAGE_SIZE));
    this.el("audit-page").textContent = `${this.auditPage + 1}/${pages}`;
  }

  private renderBanner(): void {
    const banner = this.el("banner") as HTMLDivElement;
    const message = this.state.stale
      ? `losing touch with the server: ${this.state.lastError ?? "no response"}`
      : this.bannerMessage;
    if (message) {
      banner.hidden = false;
      banner.innerHTML = `${escapeHtml(message)} <button id="dismiss">×</button>`;
      banner.querySelector("#dismiss")!.addEventListener("click", () => {
        this.bannerMessage = null;
        this.render();
      });
    } else {
      banner.hidden = true;
      banner.innerHTML = "";
    }
  }

  private bannerMessage: string | null = null;

  showBanner(message: string): void {
    this.bannerMessage = message;
    this.renderBanner();
  }

  private el(id: string): HTMLElement {
    const found = this.root.querySelector(`#${id}`);
    if (!found) {
      throw new Error(`missing dashboard element #${id}`);
    }
    return found as HTMLElement;
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return error.message;
  }
  return error instanceof Error ? error.message : String(error);
}
