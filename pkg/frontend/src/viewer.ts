/**
 * Viewer screen: a filter box checked against the service, two tag
 * pickers, the stacked-bar crosstab, and download buttons for the CSV
 * table and the HTML report. All numbers shown come straight from API
 * responses.
 */

import { Api, ApiError } from "./api.js";
import type { CrosstabJson, SchemaJson, TagDef } from "./api.js";
import { renderChart } from "./chart.js";
import { el, clear } from "./dom.js";
import { Session } from "./session.js";

export class ViewerController {
  filterText = "";
  /** null: unchecked; "": checked ok; otherwise the parser's complaint. */
  filterError: string | null = null;
  useFilter = false;
  rowTag = "";
  colTag = "";
  table: CrosstabJson | null = null;
  chartError: string | null = null;
  onChange: () => void = () => {};

  constructor(
    private readonly api: Api,
    readonly session: Session,
    readonly schema: SchemaJson,
  ) {
    const selection = this.selectionTags();
    this.rowTag = selection[0]?.name ?? "";
    this.colTag = selection[1]?.name ?? selection[0]?.name ?? "";
  }

  private get database(): string {
    if (!this.session.database) throw new Error("no database selected");
    return this.session.database;
  }

  /** Crosstabs are defined over selection kinds only. */
  selectionTags(): TagDef[] {
    return this.schema.groups
      .flatMap((group) => group.tags)
      .filter((def) => def.kind === "single" || def.kind === "multi");
  }

  private activeFilter(): string | undefined {
    const text = this.filterText.trim();
    return this.useFilter && text ? text : undefined;
  }

  /** Grammar check via a dry-run rows request; no rows are kept. */
  async checkFilter(): Promise<void> {
    const text = this.filterText.trim();
    if (!text) {
      this.filterError = null;
      this.onChange();
      return;
    }
    try {
      await this.api.getRows(this.database, { filter: text, limit: 1 });
      this.filterError = "";
    } catch (error) {
      // the detail carries the parser's position and expected set
      this.filterError =
        error instanceof ApiError ? error.message : String(error);
    }
    this.onChange();
  }

  async loadChart(): Promise<void> {
    this.chartError = null;
    if (!this.rowTag || !this.colTag) return;
    try {
      this.table = await this.api.crosstab(
        this.database,
        this.rowTag,
        this.colTag,
        this.activeFilter(),
      );
    } catch (error) {
      this.table = null;
      this.chartError =
        error instanceof ApiError ? error.message : String(error);
    }
    this.onChange();
  }

  tableUrl(): string {
    return this.api.tableUrl(this.database, undefined, this.activeFilter());
  }

  reportUrl(): string {
    const spec: Record<string, unknown> = {
      title: `${this.database} report`,
      include_option_counts: true,
      crosstabs:
        this.rowTag && this.colTag ? [[this.rowTag, this.colTag]] : [],
    };
    const filter = this.activeFilter();
    if (filter) spec.filter_text = filter;
    return this.api.reportUrl(this.database, spec);
  }
}

function tagSelect(
  ctl: ViewerController,
  which: "rowTag" | "colTag",
): HTMLSelectElement {
  const select = el("select", { name: which }) as HTMLSelectElement;
  for (const def of ctl.selectionTags()) {
    select.append(el("option", { value: def.name }, def.name));
  }
  select.value = ctl[which];
  select.addEventListener("change", () => {
    ctl[which] = select.value;
    void ctl.loadChart();
  });
  return select;
}

export function renderViewer(root: HTMLElement, ctl: ViewerController): void {
  const draw = () => {
    clear(root);

    const filterInput = el("input", {
      type: "text",
      class: "filter-input",
      placeholder: 'e.g. has(Region, "Arctic") & !empty(Rating)',
      value: ctl.filterText,
    }) as HTMLInputElement;
    filterInput.addEventListener("input", () => {
      ctl.filterText = filterInput.value;
      ctl.filterError = null;
    });
    const check = el("button", { type: "button" }, "Check");
    check.addEventListener("click", () => void ctl.checkFilter());

    const useFilter = el("input", { type: "checkbox" }) as HTMLInputElement;
    useFilter.checked = ctl.useFilter;
    useFilter.addEventListener("change", () => {
      ctl.useFilter = useFilter.checked;
      void ctl.loadChart();
    });

    const filterRow = el(
      "div",
      { class: "filter-row" },
      filterInput,
      check,
      el("label", {}, useFilter, "apply filter"),
    );
    if (ctl.filterError) {
      filterRow.append(el("p", { class: "filter-error" }, ctl.filterError));
    } else if (ctl.filterError === "") {
      filterRow.append(el("span", { class: "filter-ok" }, "filter ok"));
    }

    const refresh = el("button", { type: "button" }, "Plot");
    refresh.addEventListener("click", () => void ctl.loadChart());
    const pickers = el(
      "div",
      { class: "picker-row" },
      el("label", {}, "rows ", tagSelect(ctl, "rowTag")),
      el("label", {}, "columns ", tagSelect(ctl, "colTag")),
      refresh,
    );

    const downloads = el(
      "div",
      { class: "download-row" },
      el("a", { href: ctl.tableUrl(), download: "table.csv" }, "CSV table"),
      el("a", { href: ctl.reportUrl(), download: "report.html" }, "HTML report"),
    );

    const chartHost = el("div", { class: "chart-host" });
    if (ctl.table) chartHost.append(renderChart(ctl.table));
    else if (ctl.chartError) {
      chartHost.append(el("p", { class: "chart-error" }, ctl.chartError));
    }

    root.append(filterRow, pickers, downloads, chartHost);
  };
  ctl.onChange = draw;
  draw();
}
