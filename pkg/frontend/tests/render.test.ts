// Role gating on rendered markup: admins see member-management and purge
// controls, plain users never do. Renderers return strings, so the checks
// are plain containment assertions against real recorded documents.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { boardView, initialState, resetState, trashedTasks } from "../src/reducer.js";
import {
  renderBoard,
  renderCard,
  renderDashboard,
  renderLogin,
  renderMe,
  renderShell,
  renderTaskDetail,
  renderTeam,
  renderTrash,
} from "../src/render.js";
import type {
  Account,
  ActivityItem,
  DashboardSummary,
  PriorityBreakdown,
  Task,
  WorkloadRow,
} from "../src/types.js";
import { PRIORITY_COLORS } from "../src/types.js";

function fixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

interface Checkpoint {
  seq: number;
  tasks: Task[];
  users: Account[];
}

const CHECKPOINTS = fixture<Checkpoint[]>("checkpoints.json");
const ACCOUNTS = fixture<{ admin: Account; user: Account }>("accounts.json");
const DASHBOARD = fixture<{
  summary: DashboardSummary;
  workload: { rows: WorkloadRow[] };
  priority: PriorityBreakdown;
  activity: { items: ActivityItem[] };
}>("dashboard.json");

const FINAL = CHECKPOINTS[CHECKPOINTS.length - 1]!;
const MUTATION_CONTROLS = ['data-action="add-member"', 'data-action="set-role"', 'data-action="set-active"'];

function fullPage(me: Account): string {
  // Everything a session of this role could ever see, concatenated.
  const state = {
    ...resetState(initialState(), FINAL.tasks, FINAL.users, FINAL.seq),
    token: "t",
    me,
  };
  const isAdmin = me.role === "admin";
  const sections = [
    renderBoard(boardView(state), state.users),
    renderDashboard(
      DASHBOARD.summary,
      DASHBOARD.workload.rows,
      DASHBOARD.priority,
      DASHBOARD.activity.items,
    ),
    renderTrash(trashedTasks(state), state.users, isAdmin),
    renderTeam(state.users, me),
    renderMe(me),
  ];
  return sections.map((body) => renderShell(state, "tasks", body)).join("\n");
}

describe("role gating", () => {
  it("admin pages include purge and member-management controls", () => {
    const page = fullPage(ACCOUNTS.admin);
    expect(page).toContain('data-action="purge"');
    for (const control of MUTATION_CONTROLS) {
      expect(page).toContain(control);
    }
  });

  it("user pages contain no purge control anywhere", () => {
    expect(fullPage(ACCOUNTS.user)).not.toContain('data-action="purge"');
  });

  it("user pages contain no team-mutation controls anywhere", () => {
    const page = fullPage(ACCOUNTS.user);
    for (const control of MUTATION_CONTROLS) {
      expect(page).not.toContain(control);
    }
  });

  it("users can still restore from the trash", () => {
    const state = resetState(initialState(), FINAL.tasks, FINAL.users, FINAL.seq);
    const html = renderTrash(trashedTasks(state), state.users, false);
    expect(html).toContain('data-action="restore"');
  });
});

describe("board markup", () => {
  const users = FINAL.users;

  it("cards carry the fixed priority colors", () => {
    for (const task of FINAL.tasks) {
      const html = renderCard(task, users);
      expect(html).toContain(PRIORITY_COLORS[task.priority]);
    }
    expect(PRIORITY_COLORS.high).toBe("#D32F2F");
    expect(PRIORITY_COLORS.medium).toBe("#F9A825");
    expect(PRIORITY_COLORS.low).toBe("#388E3C");
  });

  it("columns are labeled To Do / In Progress / Done", () => {
    const state = resetState(initialState(), FINAL.tasks, FINAL.users, FINAL.seq);
    const html = renderBoard(boardView(state), users);
    for (const label of ["To Do", "In Progress", "Done"]) {
      expect(html).toContain(`${label} <span`);
    }
  });

  it("task titles are HTML-escaped", () => {
    const hostile = { ...FINAL.tasks[0]!, title: '<img src=x onerror="p0wn()">' };
    const html = renderCard(hostile, users);
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;img");
    const detail = renderTaskDetail(hostile, users, (id) => `/api/assets/${id}`);
    expect(detail).not.toContain("<img");
  });
});

describe("page chrome", () => {
  it("navigation offers exactly Tasks, Dashboard, Trash, Team", () => {
    const state = { ...initialState(), token: "t", me: ACCOUNTS.user };
    const html = renderShell(state, "tasks", "");
    const labels = [...html.matchAll(/class="nav-link[^"]*">([^<]+)<\/a>/g)].map((m) => m[1]);
    expect(labels).toEqual(["Tasks", "Dashboard", "Trash", "Team"]);
  });

  it("login form posts credentials, nothing else", () => {
    const html = renderLogin();
    expect(html).toContain('name="email"');
    expect(html).toContain('name="password"');
    expect(html).not.toContain("data-action=\"purge\"");
  });

  it("me view shows name, email, role and a sign-out control", () => {
    const html = renderMe(ACCOUNTS.user);
    expect(html).toContain(ACCOUNTS.user.name);
    expect(html).toContain(ACCOUNTS.user.email);
    expect(html).toContain(ACCOUNTS.user.role);
    expect(html).toContain('data-action="logout"');
  });
});

describe("dashboard markup", () => {
  const html = renderDashboard(
    DASHBOARD.summary,
    DASHBOARD.workload.rows,
    DASHBOARD.priority,
    DASHBOARD.activity.items,
  );

  it("summary cards show the recorded counts", () => {
    expect(html).toContain(`<b>${DASHBOARD.summary.total_tasks}</b>`);
    expect(html).toContain(`${Math.round(DASHBOARD.summary.completion_ratio * 100)}%`);
  });

  it("the workload chart names every assignee row", () => {
    for (const row of DASHBOARD.workload.rows) {
      expect(html).toContain(`>${row.assignee_name}</text>`);
    }
  });

  it("the donut legend accounts for every priority", () => {
    expect(html).toContain(`high: ${DASHBOARD.priority.high_count}`);
    expect(html).toContain(`medium: ${DASHBOARD.priority.medium_count}`);
    expect(html).toContain(`low: ${DASHBOARD.priority.low_count}`);
  });

  it("the feed lists recorded activity entries", () => {
    const first = DASHBOARD.activity.items[0]!;
    expect(html).toContain(first.at);
    expect(html).toContain(first.kind);
  });
});
