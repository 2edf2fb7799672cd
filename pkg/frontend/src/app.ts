/**
 * Shell: database picker plus the five screens as tabs. Screens get a
 * fresh controller whenever the selected database changes, so stale
 * schema state cannot leak across databases.
 */

import { Api } from "./api.js";
import type { DatabaseDetail } from "./api.js";
import { el, clear } from "./dom.js";
import { EditorController, renderTagEditor } from "./editor.js";
import { MaintenanceController, renderMaintenance } from "./maintenance.js";
import { NewDatabaseController, renderNewDatabase } from "./newdb.js";
import { Session, TAB_TITLES } from "./session.js";
import type { Tab } from "./session.js";
import { SyncController, renderSync } from "./sync.js";
import { ViewerController, renderViewer } from "./viewer.js";

const TAB_ORDER: Tab[] = ["new", "edit", "sync", "maintenance", "viewer"];

export class App {
  session = new Session();
  detail: DatabaseDetail | null = null;
  databases: string[] = [];

  constructor(
    private readonly api: Api,
    private readonly root: HTMLElement,
  ) {
    this.session.confirmDiscard = () =>
      window.confirm("Discard unsaved tag edits?");
  }

  async start(): Promise<void> {
    await this.refreshList();
    const first = this.databases[0];
    if (first) await this.openDatabase(first);
    else this.session.activeTab = "new";
    this.draw();
  }

  async refreshList(): Promise<void> {
    const body = await this.api.listDatabases();
    this.databases = body.databases.map((meta) => meta.name);
  }

  async openDatabase(name: string): Promise<void> {
    if (!this.session.setDatabase(name)) return;
    this.detail = await this.api.getDatabase(name);
    this.session.papers = this.detail ? await this.loadPapers(name) : [];
    this.draw();
  }

  private async loadPapers(name: string) {
    const papers = [];
    let offset = 0;
    for (;;) {
      const page = await this.api.getRows(name, { offset, limit: 500 });
      for (const row of page.rows) {
        papers.push({
          key: row.key,
          author: row.citation["Author"] ?? "",
          year: row.citation["Publication Year"] ?? "",
          title: row.citation["Title"] ?? "",
        });
      }
      offset += page.rows.length;
      if (offset >= page.total || page.rows.length === 0) break;
    }
    return papers;
  }

  draw(): void {
    clear(this.root);

    const picker = el("select", { class: "db-picker" }) as HTMLSelectElement;
    for (const name of this.databases) {
      picker.append(el("option", { value: name }, name));
    }
    if (this.session.database) picker.value = this.session.database;
    picker.addEventListener("change", () => {
      void this.openDatabase(picker.value);
    });

    const tabs = el("nav", { class: "tabs" });
    for (const tab of TAB_ORDER) {
      const button = el(
        "button",
        { class: tab === this.session.activeTab ? "tab active" : "tab" },
        TAB_TITLES[tab],
      );
      button.addEventListener("click", () => {
        if (this.session.switchTab(tab)) this.draw();
      });
      tabs.append(button);
    }

    const body = el("main", { class: "screen" });
    this.root.append(
      el("header", {}, el("strong", {}, "tagbase"), picker, tabs),
      body,
    );
    this.drawScreen(body);
  }

  private drawScreen(body: HTMLElement): void {
    const tab = this.session.activeTab;
    if (tab === "new") {
      const ctl = new NewDatabaseController(this.api);
      ctl.onCreated = (name) => {
        void this.refreshList().then(() => this.openDatabase(name));
      };
      renderNewDatabase(body, ctl);
      return;
    }
    if (!this.detail || !this.session.database) {
      body.append(el("p", { class: "hint" }, "Create or pick a database first."));
      return;
    }
    if (tab === "edit") {
      renderTagEditor(
        body,
        new EditorController(this.api, this.session, this.detail.schema),
      );
    } else if (tab === "sync") {
      renderSync(body, new SyncController(this.api, this.session));
    } else if (tab === "maintenance") {
      const ctl = new MaintenanceController(
        this.api,
        this.session,
        this.detail.schema,
      );
      ctl.confirm = (question) => window.confirm(question);
      renderMaintenance(body, ctl, this.databases);
      void ctl.loadVersions();
    } else {
      renderViewer(
        body,
        new ViewerController(this.api, this.session, this.detail.schema),
      );
    }
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  void new App(new Api(), root).start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
