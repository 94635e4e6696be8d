/**
 * Stage 1: paginated seen-item grid.  Selections live in a Set owned by
 * this view, so paging back and forth or a failed submit never loses
 * them; a failed request leaves a retry button.
 */

import { AnnotationApi, ApiError } from "./api";
import type { ItemPage } from "./types";

const PAGE_SIZE = 24;

export class Stage1View {
  private selected = new Set<string>();
  private offset = 0;
  private total = 0;

  constructor(
    private readonly api: AnnotationApi,
    private readonly sessionId: string,
    private readonly root: HTMLElement,
    private readonly onJudging: () => void,
  ) {}

  async render(): Promise<void> {
    this.root.innerHTML = `
      <section class="stage1">
        <h2>Which of these movies have you seen?</h2>
        <p class="hint">Pick everything you recognize; you need enough for
           comparison tasks to be generated.</p>
        <div class="grid" id="item-grid"><p>Loading…</p></div>
        <div class="pager">
          <button id="prev-page">&larr; Previous</button>
          <span id="page-label"></span>
          <button id="next-page">Next &rarr;</button>
        </div>
        <div class="actions">
          <span id="selection-count"></span>
          <button id="submit-seen" class="primary">Submit seen items</button>
        </div>
        <p id="stage1-status" role="status"></p>
      </section>`;
    this.byId("prev-page").addEventListener("click", () => this.page(-1));
    this.byId("next-page").addEventListener("click", () => this.page(1));
    this.byId("submit-seen").addEventListener("click", () => void this.submit());
    await this.loadPage();
  }

  private byId(id: string): HTMLElement {
    const el = this.root.querySelector(`#${id}`);
    if (!el) throw new Error(`missing element #${id}`);
    return el as HTMLElement;
  }

  private async page(direction: number): Promise<void> {
    const next = this.offset + direction * PAGE_SIZE;
    if (next < 0 || next >= this.total) return;
    this.offset = next;
    await this.loadPage();
  }

  private async loadPage(): Promise<void> {
    const grid = this.byId("item-grid");
    let page: ItemPage;
    try {
      page = await this.api.listItems(this.offset, PAGE_SIZE);
    } catch (err) {
      grid.innerHTML = "";
      this.showRetry(grid, err, () => void this.loadPage());
      return;
    }
    this.total = page.total;
    grid.innerHTML = "";
    for (const item of page.items) {
      const card = document.createElement("button");
      card.className = "item-card";
      card.textContent = item.title;
      card.setAttribute("aria-pressed", String(this.selected.has(item.id)));
      if (this.selected.has(item.id)) card.classList.add("selected");
      card.addEventListener("click", () => {
        if (this.selected.has(item.id)) this.selected.delete(item.id);
        else this.selected.add(item.id);
        card.classList.toggle("selected");
        card.setAttribute("aria-pressed", String(this.selected.has(item.id)));
        this.updateCount();
      });
      grid.appendChild(card);
    }
    const last = Math.min(this.offset + PAGE_SIZE, this.total);
    this.byId("page-label").textContent = `${this.offset + 1}–${last} of ${this.total}`;
    this.updateCount();
  }

  private updateCount(): void {
    this.byId("selection-count").textContent = `${this.selected.size} selected`;
  }

  private async submit(): Promise<void> {
    const status = this.byId("stage1-status");
    status.textContent = "Submitting…";
    try {
      const response = await this.api.submitSeen(this.sessionId, [...this.selected]);
      if (response.status === "insufficient") {
        status.textContent =
          `You marked ${response.seen_count} item(s); at least ` +
          `${response.min_seen} are needed before judging can start. ` +
          `Your selections are kept — pick a few more.`;
        return;
      }
      this.onJudging();
    } catch (err) {
      status.textContent = "";
      this.showRetry(status, err, () => void this.submit());
    }
  }

  private showRetry(host: HTMLElement, err: unknown, retry: () => void): void {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : "network error";
    const note = document.createElement("span");
    note.textContent = `Request failed (${message}). Selections are kept. `;
    const button = document.createElement("button");
    button.textContent = "Retry";
    button.addEventListener("click", retry);
    host.append(note, button);
  }
}
