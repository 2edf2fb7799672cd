/**
 * New database screen: name the database, upload the Zotero export and
 * the categories bundle (per-group CSVs or one xlsx). Categories are
 * authored outside the browser; this screen only uploads them.
 */

import { Api, ApiError } from "./api.js";
import { el, clear } from "./dom.js";

export class NewDatabaseController {
  message: string | null = null;
  error: string | null = null;
  /** Called with the new name so the shell can open it. */
  onCreated: (name: string) => void = () => {};
  onChange: () => void = () => {};

  constructor(private readonly api: Api) {}

  async create(
    name: string,
    exportFile: File,
    categories: File[],
  ): Promise<void> {
    this.error = null;
    this.message = null;
    try {
      const meta = await this.api.createDatabase(name, exportFile, categories);
      this.message = `Created '${meta.name}' with ${meta.rows} papers.`;
      this.onCreated(meta.name);
    } catch (error) {
      this.error = error instanceof ApiError ? error.message : String(error);
    }
    this.onChange();
  }
}

export function renderNewDatabase(
  root: HTMLElement,
  ctl: NewDatabaseController,
): void {
  const draw = () => {
    clear(root);
    const name = el("input", {
      type: "text", placeholder: "database name",
    }) as HTMLInputElement;
    const exportFile = el("input", {
      type: "file", accept: ".csv,text/csv",
    }) as HTMLInputElement;
    const categories = el("input", {
      type: "file", multiple: "multiple",
      accept: ".csv,.xlsx,text/csv",
    }) as HTMLInputElement;
    const create = el("button", { type: "button" }, "Create");
    create.addEventListener("click", () => {
      const chosenExport = exportFile.files?.[0];
      const chosenCats = Array.from(categories.files ?? []);
      if (name.value && chosenExport && chosenCats.length) {
        void ctl.create(name.value, chosenExport, chosenCats);
      }
    });
    root.append(
      el("div", { class: "newdb-form" },
        el("label", {}, "Name ", name),
        el("label", {}, "Zotero export (CSV) ", exportFile),
        el("label", {}, "Categories (group CSVs or one xlsx) ", categories),
        create),
    );
    if (ctl.message) root.append(el("p", { class: "ok-note" }, ctl.message));
    if (ctl.error) root.append(el("p", { class: "save-error" }, ctl.error));
  };
  ctl.onChange = draw;
  draw();
}
