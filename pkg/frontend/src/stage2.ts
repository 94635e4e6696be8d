/**
 * Stage 2: the three-bucket board.  Cards drag between columns (HTML5
 * DnD) and every card also carries keyboard-accessible move buttons.
 * Submit stays disabled until every candidate has a bucket; the service
 * re-validates and a 400 highlights the offending items.
 */

import { AnnotationApi, ApiError } from "./api";
import {
  BoardState,
  Column,
  initBoard,
  moveItem,
  payload,
  submittable,
} from "./board";
import type { TaskView } from "./types";

const COLUMN_KEYS: readonly Column[] = ["unassigned", "less", "same", "more"];
const MOVE_LABELS: Record<Exclude<Column, "unassigned">, string> = {
  less: "less",
  same: "same",
  more: "more",
};

export class Stage2Board {
  private state!: BoardState;
  private task!: TaskView;

  constructor(
    private readonly api: AnnotationApi,
    private readonly sessionId: string,
    private readonly root: HTMLElement,
  ) {}

  async render(): Promise<void> {
    try {
      this.task = await this.api.fetchTask(this.sessionId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.terminal();
        return;
      }
      this.failure(err);
      return;
    }
    this.state = initBoard(this.task);
    this.draw();
  }

  private columnTitle(column: Column): string {
    const a = this.task.attribute;
    const x = this.task.anchor.title;
    switch (column) {
      case "unassigned":
        return "Items to place";
      case "less":
        return `Less “${a}” than ${x}`;
      case "same":
        return `About the same “${a}” as ${x}`;
      case "more":
        return `More “${a}” than ${x}`;
    }
  }

  private draw(highlight: Set<string> = new Set()): void {
    this.root.innerHTML = `
      <section class="stage2">
        <header class="task-header">
          <h2>How does each item compare to the anchor?</h2>
          <p>Attribute: <strong>${escapeHtml(this.task.attribute)}</strong>
             &middot; Anchor: <strong class="anchor-card">${escapeHtml(this.task.anchor.title)}</strong>
             &middot; Tasks done: ${this.task.tasks_done}</p>
        </header>
        <div class="board" id="board"></div>
        <div class="actions">
          <button id="submit-judgment" class="primary">Submit judgment</button>
          <span id="stage2-status" role="status"></span>
        </div>
      </section>`;
    const board = this.root.querySelector("#board") as HTMLElement;
    for (const column of COLUMN_KEYS) {
      board.appendChild(this.columnElement(column, highlight));
    }
    const submit = this.root.querySelector("#submit-judgment") as HTMLButtonElement;
    submit.disabled = !submittable(this.state);
    submit.addEventListener("click", () => void this.submit());
  }

  private columnElement(column: Column, highlight: Set<string>): HTMLElement {
    const host = document.createElement("div");
    host.className = `column column-${column}`;
    host.innerHTML = `<h3>${escapeHtml(this.columnTitle(column))}</h3>`;
    host.addEventListener("dragover", (event) => event.preventDefault());
    host.addEventListener("drop", (event) => {
      event.preventDefault();
      const itemId = event.dataTransfer?.getData("text/plain");
      if (itemId) this.move(itemId, column);
    });
    for (const card of this.state[column]) {
      const el = document.createElement("div");
      el.className = "item-card draggable";
      if (highlight.has(card.id)) el.classList.add("offending");
      el.draggable = true;
      el.innerHTML = `<span>${escapeHtml(card.title)}</span>`;
      el.addEventListener("dragstart", (event) => {
        event.dataTransfer?.setData("text/plain", card.id);
      });
      const moves = document.createElement("span");
      moves.className = "move-buttons";
      for (const target of ["less", "same", "more"] as const) {
        if (target === column) continue;
        const button = document.createElement("button");
        button.textContent = MOVE_LABELS[target];
        button.setAttribute(
          "aria-label",
          `Move ${card.title} to ${this.columnTitle(target)}`,
        );
        button.addEventListener("click", () => this.move(card.id, target));
        moves.appendChild(button);
      }
      el.appendChild(moves);
      host.appendChild(el);
    }
    return host;
  }

  private move(itemId: string, to: Column): void {
    this.state = moveItem(this.state, itemId, to);
    this.draw();
  }

  private async submit(): Promise<void> {
    const status = this.root.querySelector("#stage2-status") as HTMLElement;
    status.textContent = "Submitting…";
    try {
      await this.api.submitJudgment(this.sessionId, payload(this.state));
    } catch (err) {
      if (err instanceof ApiError && err.status === 400) {
        const offending = new Set<string>(
          (err.details["item_ids"] as string[] | undefined) ?? [],
        );
        this.draw(offending);
        const note = this.root.querySelector("#stage2-status") as HTMLElement;
        note.textContent = `Rejected (${err.code}): ${err.message}`;
        return;
      }
      if (err instanceof ApiError && err.status === 409) {
        this.terminal();
        return;
      }
      this.failure(err);
      return;
    }
    await this.render(); // next task (or the terminal screen)
  }

  private terminal(): void {
    this.root.innerHTML = `
      <section class="terminal">
        <h2>No more tasks</h2>
        <p>There is nothing left to judge for this session. Thank you!</p>
      </section>`;
  }

  private failure(err: unknown): void {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : "network error";
    this.root.innerHTML = `<section class="stage2"><p>Request failed (${escapeHtml(
      message,
    )}).</p></section>`;
    const button = document.createElement("button");
    button.textContent = "Retry";
    button.addEventListener("click", () => void this.render());
    this.root.querySelector("section")?.appendChild(button);
  }
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
