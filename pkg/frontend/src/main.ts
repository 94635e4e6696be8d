import { AnnotationApi, ApiError } from "./api";
import { Stage1View } from "./stage1";
import { Stage2Board } from "./stage2";

const api = new AnnotationApi("");
const root = document.getElementById("app") as HTMLElement;

function renderLogin(): void {
  root.innerHTML = `
    <section class="login">
      <h2>Soft-attribute annotation</h2>
      <label for="rater-id">Rater id</label>
      <input id="rater-id" placeholder="e.g. worker-42" />
      <button id="start" class="primary">Start</button>
      <p id="login-status" role="status"></p>
    </section>`;
  const input = root.querySelector("#rater-id") as HTMLInputElement;
  const status = root.querySelector("#login-status") as HTMLElement;
  (root.querySelector("#start") as HTMLButtonElement).addEventListener(
    "click",
    () => void start(input.value.trim(), status),
  );
}

async function start(raterId: string, status: HTMLElement): Promise<void> {
  if (!raterId) {
    status.textContent = "Enter a rater id first.";
    return;
  }
  try {
    const session = await api.createSession(raterId);
    if (session.stage === "JUDGING") {
      void new Stage2Board(api, session.session_id, root).render();
    } else {
      const stage1 = new Stage1View(api, session.session_id, root, () => {
        void new Stage2Board(api, session.session_id, root).render();
      });
      void stage1.render();
    }
  } catch (err) {
    status.textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : "network error";
  }
}

renderLogin();
