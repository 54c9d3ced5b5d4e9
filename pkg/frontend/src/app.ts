// Application controller: routing, data loading, event-stream wiring, and
// user interactions. All DOM access happens inside methods so the module can
// be imported in non-browser environments.

import { ApiClient, ApiError } from "./api.js";
import {
  applyEvent,
  boardView,
  initialState,
  resetState,
  trashedTasks,
  type ClientState,
  type Connection,
} from "./reducer.js";
import {
  renderBoard,
  renderDashboard,
  renderLogin,
  renderMe,
  renderNotice,
  renderShell,
  renderTaskDetail,
  renderTeam,
  renderTrash,
  type Section,
} from "./render.js";
import { EventStreamClient } from "./stream.js";
import type { MutationEvent, TaskStatus } from "./types.js";

const TOKEN_KEY = "wms.token";

function sectionFromHash(hash: string): Section {
  const name = hash.replace(/^#\//, "");
  if (name === "dashboard" || name === "trash" || name === "team") return name;
  return "tasks";
}

export class App {
  private state: ClientState = initialState();
  private stream: EventStreamClient | null = null;
  private openTaskId: string | null = null;
  private meOpen = false;
  private loginError: string | undefined;
  private dragging: { id: string; revision: number } | null = null;
  private refetching = false;

  constructor(
    private readonly doc: Document,
    private readonly baseUrl = "",
  ) {}

  // --- lifecycle --------------------------------------------------------

  start(): void {
    const root = this.doc.getElementById("app");
    if (!root) throw new Error("missing #app element");
    this.bind(root);
    this.doc.defaultView?.addEventListener("hashchange", () => this.render());
    const token = this.doc.defaultView?.localStorage.getItem(TOKEN_KEY) ?? null;
    if (token) {
      this.state = { ...this.state, token };
      void this.bootstrap();
    }
    this.render();
  }

  private api(): ApiClient {
    return new ApiClient(this.baseUrl, this.state.token);
  }

  private async bootstrap(): Promise<void> {
    try {
      const me = await this.api().me();
      this.state = { ...this.state, me };
      await this.refetchAll();
      this.startStream();
    } catch (err) {
      if (err instanceof ApiError && (err.status === 401 || err.status === 403)) {
        this.logout();
        return;
      }
      this.notify(`could not load data: ${describe(err)}`);
    }
    this.render();
  }

  private async refetchAll(): Promise<void> {
    if (this.refetching) return;
    this.refetching = true;
    try {
      const api = this.api();
      const health = await api.health();
      const [page, trash, team] = await Promise.all([
        api.listTasks(),
        api.listTrash(),
        api.listTeam(),
      ]);
      // Events that land between the health probe and the fetches are replayed
      // by the stream, which resumes from the sequence captured first.
      this.state = resetState(
        this.state,
        [...page.tasks, ...trash.tasks],
        team.users,
        health.last_event_seq,
      );
    } finally {
      this.refetching = false;
    }
    this.render();
  }

  private startStream(): void {
    this.stream?.stop();
    this.stream = new EventStreamClient({
      baseUrl: this.baseUrl,
      token: this.state.token ?? "",
      afterSeq: () => this.state.lastSeenSeq,
      onEvent: (event) => this.onEvent(event),
      onConnection: (connection) => this.onConnection(connection),
      onFatal: () => this.logout(),
    });
    this.stream.start();
  }

  private onEvent(event: MutationEvent): void {
    this.state = applyEvent(this.state, event);
    if (this.state.needsRefetch) {
      void this.refetchAll();
      return;
    }
    this.render();
  }

  private onConnection(connection: Connection): void {
    if (connection !== this.state.connection) {
      this.state = { ...this.state, connection };
      this.render();
    }
  }

  private logout(): void {
    this.stream?.stop();
    this.stream = null;
    this.doc.defaultView?.localStorage.removeItem(TOKEN_KEY);
    this.state = initialState();
    this.meOpen = false;
    this.openTaskId = null;
    this.render();
  }

  // --- rendering --------------------------------------------------------

  private render(): void {
    const root = this.doc.getElementById("app");
    if (!root) return;
    if (!this.state.token || !this.state.me) {
      root.innerHTML = renderLogin(this.loginError);
      return;
    }
    const section = sectionFromHash(this.doc.defaultView?.location.hash ?? "");
    let body: string;
    if (section === "dashboard") {
      body = this.dashboardHtml ?? "<p class='dim'>loading…</p>";
      void this.loadDashboard();
    } else if (section === "trash") {
      body = renderTrash(trashedTasks(this.state), this.state.users, this.state.me.role === "admin");
    } else if (section === "team") {
      body = renderTeam(this.state.users, this.state.me);
    } else {
      body = renderBoard(boardView(this.state), this.state.users);
    }
    if (this.openTaskId) {
      const task = this.state.tasks[this.openTaskId];
      if (task && !task.trashed) {
        const api = this.api();
        body += `<div class="overlay">${renderTaskDetail(task, this.state.users, (id) => api.assetUrl(id))}</div>`;
      } else {
        this.openTaskId = null;
      }
    }
    if (this.meOpen) {
      body += `<div class="overlay">${renderMe(this.state.me)}</div>`;
    }
    root.innerHTML = renderShell(this.state, section, body);
  }

  private dashboardHtml: string | null = null;
  private dashboardLoading = false;

  private async loadDashboard(): Promise<void> {
    if (this.dashboardLoading) return;
    this.dashboardLoading = true;
    try {
      const api = this.api();
      const [summary, workload, priority, activity] = await Promise.all([
        api.dashboardSummary(),
        api.dashboardWorkload(),
        api.dashboardPriority(),
        api.dashboardActivity(20),
      ]);
      this.dashboardHtml = renderDashboard(summary, workload.rows, priority, activity.items);
    } catch (err) {
      this.dashboardHtml = `<p class="error">dashboard unavailable: ${describe(err)}</p>`;
    } finally {
      this.dashboardLoading = false;
    }
    this.render();
  }

  private notify(message: string, kind: "error" | "info" = "error"): void {
    const slot = this.doc.getElementById("notice");
    if (!slot) return;
    slot.innerHTML = renderNotice(message, kind);
    this.doc.defaultView?.setTimeout(() => {
      slot.innerHTML = "";
    }, 5000);
  }

  // --- interactions -----------------------------------------------------

  private bind(root: HTMLElement): void {
    root.addEventListener("click", (ev) => {
      const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action]");
      if (!el || el.tagName === "FORM" || el.tagName === "SELECT") return;
      void this.onAction(el.dataset.action ?? "", el);
    });
    root.addEventListener("submit", (ev) => {
      const form = ev.target as HTMLFormElement;
      if (!form.dataset.action) return;
      ev.preventDefault();
      void this.onForm(form.dataset.action, form);
    });
    root.addEventListener("change", (ev) => {
      const el = ev.target as HTMLSelectElement;
      if (el.dataset.action === "set-role" && el.dataset.id) {
        void this.setRole(el.dataset.id, el.value as "admin" | "user");
      }
    });
    root.addEventListener("dragstart", (ev) => {
      const card = (ev.target as HTMLElement).closest<HTMLElement>(".card");
      if (!card) return;
      this.dragging = {
        id: card.dataset.taskId ?? "",
        revision: Number(card.dataset.revision ?? "0"),
      };
      ev.dataTransfer?.setData("text/plain", this.dragging.id);
    });
    root.addEventListener("dragover", (ev) => {
      if ((ev.target as HTMLElement).closest(".column")) ev.preventDefault();
    });
    root.addEventListener("drop", (ev) => {
      const column = (ev.target as HTMLElement).closest<HTMLElement>(".column");
      if (!column || !this.dragging) return;
      ev.preventDefault();
      const status = column.dataset.status as TaskStatus;
      void this.moveTask(this.dragging.id, this.dragging.revision, status);
      this.dragging = null;
    });
  }

  private async onAction(action: string, el: HTMLElement): Promise<void> {
    const id = el.dataset.id ?? "";
    try {
      switch (action) {
        case "open-task":
          this.openTaskId = id;
          this.render();
          break;
        case "close-detail":
          this.openTaskId = null;
          this.render();
          break;
        case "open-me":
          this.meOpen = true;
          this.render();
          break;
        case "close-me":
          this.meOpen = false;
          this.render();
          break;
        case "logout":
          this.logout();
          break;
        case "trash-task":
          await this.api().trashTask(id);
          this.openTaskId = null;
          break;
        case "restore":
          await this.api().restoreTask(id);
          break;
        case "purge": {
          const view = this.doc.defaultView;
          if (view && !view.confirm("Permanently delete this task? This cannot be undone.")) return;
          await this.api().purgeTask(id);
          break;
        }
        case "set-active":
          await this.api().patchAccount(id, { active: el.dataset.active === "true" });
          break;
        default:
          break;
      }
    } catch (err) {
      this.notify(describe(err));
    }
  }

  private async onForm(action: string, form: HTMLFormElement): Promise<void> {
    const data = new FormData(form);
    try {
      if (action === "login") {
        await this.login(String(data.get("email")), String(data.get("password")));
      } else if (action === "create-task") {
        const title = String(data.get("title")).trim();
        if (!title) return;
        await this.api().createTask({ title, priority: String(data.get("priority")) });
        form.reset();
      } else if (action === "add-member") {
        await this.api().createAccount({
          name: String(data.get("name")),
          email: String(data.get("email")),
          password: String(data.get("password")),
          role: String(data.get("role")),
        });
        form.reset();
        this.notify("member added", "info");
      } else if (action === "upload-asset" && this.openTaskId) {
        const file = data.get("file");
        if (file instanceof File && file.size > 0) {
          await this.api().uploadAsset(this.openTaskId, file);
        }
      }
    } catch (err) {
      this.notify(describe(err));
    }
  }

  private async login(email: string, password: string): Promise<void> {
    try {
      const api = new ApiClient(this.baseUrl, null);
      const { token } = await api.login(email, password);
      this.loginError = undefined;
      this.doc.defaultView?.localStorage.setItem(TOKEN_KEY, token);
      this.state = { ...initialState(), token };
      await this.bootstrap();
    } catch (err) {
      this.loginError = err instanceof ApiError && err.status === 401 ? "wrong email or password" : describe(err);
      this.render();
    }
  }

  // Optimistic move: update the board immediately, reconcile on failure. A
  // 409 means someone edited the task first; refetch it and say so.
  private async moveTask(id: string, revision: number, status: TaskStatus): Promise<void> {
    const before = this.state.tasks[id];
    if (!before || before.status === status) return;
    this.state = {
      ...this.state,
      tasks: { ...this.state.tasks, [id]: { ...before, status } },
    };
    this.render();
    try {
      await this.api().patchTask(id, { status }, revision);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const current = await this.api().getTask(id);
        this.state = { ...this.state, tasks: { ...this.state.tasks, [id]: current } };
        this.notify("that task changed under you — showing the latest version");
      } else {
        this.state = { ...this.state, tasks: { ...this.state.tasks, [id]: before } };
        this.notify(describe(err));
      }
      this.render();
    }
  }

  private async setRole(id: string, role: "admin" | "user"): Promise<void> {
    try {
      await this.api().patchAccount(id, { role });
    } catch (err) {
      this.notify(describe(err));
      this.render(); // snap the select back to the stored value
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
